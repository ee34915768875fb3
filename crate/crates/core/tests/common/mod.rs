#![allow(dead_code)]

use legform_core::neat::{mutate, random_minimal_genome};
use legform_core::{CppnGenome, GridDims, InnovationRegistry, NeatConfig, VoxelGrid};
use rand::Rng;

/// Components by depth-first search over explicit neighbour offsets; each
/// component is a sorted list of canonical indices, components ordered by
/// their smallest index.
pub fn flood_fill(grid: &VoxelGrid) -> Vec<Vec<usize>> {
    let d = grid.dims();
    let mut seen = vec![false; d.cell_count()];
    let mut out = Vec::new();
    for y in 0..d.ny {
        for z in 0..d.nz {
            for x in 0..d.nx {
                let start = d.index(x, y, z);
                if !grid.get(x, y, z) || seen[start] {
                    continue;
                }
                seen[start] = true;
                let mut stack = vec![(x as i64, y as i64, z as i64)];
                let mut comp = Vec::new();
                while let Some((cx, cy, cz)) = stack.pop() {
                    comp.push(d.index(cx as usize, cy as usize, cz as usize));
                    for (dx, dy, dz) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                        let (nx, ny, nz) = (cx + dx, cy + dy, cz + dz);
                        if nx < 0 || ny < 0 || nz < 0 || nx >= d.nx as i64 || ny >= d.ny as i64 || nz >= d.nz as i64 {
                            continue;
                        }
                        let i = d.index(nx as usize, ny as usize, nz as usize);
                        if grid.get(nx as usize, ny as usize, nz as usize) && !seen[i] {
                            seen[i] = true;
                            stack.push((nx, ny, nz));
                        }
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// Some component reaches both the bottom and the top layer.
pub fn oracle_compliant(grid: &VoxelGrid) -> bool {
    let d = grid.dims();
    flood_fill(grid).iter().any(|comp| {
        let ys: Vec<usize> = comp.iter().map(|&i| d.coords(i).1).collect();
        ys.contains(&0) && ys.contains(&(d.ny - 1))
    })
}

pub fn random_grid<R: Rng>(dims: GridDims, density: f64, rng: &mut R) -> VoxelGrid {
    VoxelGrid::from_fn(dims, |_, _, _| rng.random_bool(density))
}

/// A random genome after `rounds` passes of mutation with boosted
/// structural rates.
pub fn evolved_cppn<R: Rng>(rng: &mut R, registry: &mut InnovationRegistry, rounds: usize) -> CppnGenome {
    let config = NeatConfig { p_add_node: 0.4, p_add_connection: 0.5, p_mutate_weight: 0.8, p_mutate_activation: 0.3, ..NeatConfig::default() };
    let mut g = random_minimal_genome(rng);
    for _ in 0..rounds {
        g = mutate(&g, registry, &config, rng);
    }
    registry.end_generation();
    g
}

/// Exposed faces counted cell by cell.
pub fn exposed_face_count(grid: &VoxelGrid) -> usize {
    let d = grid.dims();
    let mut n = 0;
    for (x, y, z) in grid.occupied() {
        let p = [x as i64, y as i64, z as i64];
        for axis in 0..3 {
            for step in [-1, 1] {
                let mut q = p;
                q[axis] += step;
                let inside = q[0] >= 0 && q[1] >= 0 && q[2] >= 0 && (q[0] as usize) < d.nx && (q[1] as usize) < d.ny && (q[2] as usize) < d.nz;
                if !inside || !grid.get(q[0] as usize, q[1] as usize, q[2] as usize) {
                    n += 1;
                }
            }
        }
    }
    n
}
