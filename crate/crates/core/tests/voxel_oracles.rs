mod common;

use common::{flood_fill, oracle_compliant, random_grid};
use legform_core::{GridDims, VoxelGrid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_strategy(n: usize) -> impl Strategy<Value = VoxelGrid> {
    let dims = GridDims::new(n, n, n, 5.0).unwrap();
    (any::<u64>(), 0.05f64..0.7).prop_map(move |(seed, density)| {
        random_grid(dims, density, &mut ChaCha8Rng::seed_from_u64(seed))
    })
}

/// Grows a single 6-connected blob by random face steps.
fn random_blob(dims: GridDims, steps: usize, rng: &mut ChaCha8Rng) -> VoxelGrid {
    let mut grid = VoxelGrid::empty(dims);
    let mut cells = vec![[rng.random_range(0..dims.nx), rng.random_range(0..dims.ny), rng.random_range(0..dims.nz)]];
    grid.set(cells[0][0], cells[0][1], cells[0][2], true);
    for _ in 0..steps {
        let mut c = cells[rng.random_range(0..cells.len())];
        let axis = rng.random_range(0..3);
        let n = [dims.nx, dims.ny, dims.nz][axis];
        if rng.random_bool(0.5) {
            if c[axis] + 1 < n {
                c[axis] += 1;
            }
        } else if c[axis] > 0 {
            c[axis] -= 1;
        }
        if !grid.get(c[0], c[1], c[2]) {
            grid.set(c[0], c[1], c[2], true);
            cells.push(c);
        }
    }
    grid
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn labeling_matches_flood_fill(grid in grid_strategy(8)) {
        let labeling = grid.connected_components();
        let oracle = flood_fill(&grid);
        prop_assert_eq!(labeling.component_count(), oracle.len());
        for (k, comp) in oracle.iter().enumerate() {
            let id = k as u32 + 1;
            prop_assert_eq!(labeling.size(id), Some(comp.len()));
            for &i in comp {
                prop_assert_eq!(labeling.labels()[i], id);
            }
        }
        for (i, &l) in labeling.labels().iter().enumerate() {
            prop_assert_eq!(l == 0, !grid.cells()[i]);
        }
    }

    #[test]
    fn compliance_matches_oracle(grid in grid_strategy(6)) {
        prop_assert_eq!(grid.is_compliant(), oracle_compliant(&grid));
    }

    #[test]
    fn scale_to_fill_keeps_one_component(seed in any::<u64>(), steps in 0usize..300) {
        let dims = GridDims::new(8, 12, 6, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blob = random_blob(dims, steps, &mut rng);
        let scaled = blob.scale_to_fill().unwrap();
        prop_assert_eq!(flood_fill(&scaled).len(), 1);
        prop_assert!(oracle_compliant(&scaled));
        prop_assert!(scaled.occupied_count() >= blob.occupied_count());
    }

    #[test]
    fn isolate_keeps_exactly_one_component(grid in grid_strategy(6)) {
        let labeling = grid.connected_components();
        for id in 1..=labeling.component_count() as u32 {
            let only = labeling.isolate(id).unwrap();
            prop_assert_eq!(only.occupied_count(), labeling.size(id).unwrap());
            prop_assert_eq!(flood_fill(&only).len(), 1);
        }
    }
}

#[test]
fn resample_of_full_box_is_identity() {
    let dims = GridDims::new(5, 7, 3, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let blob = random_blob(dims, 200, &mut rng);
        let b = blob.connected_components().bounding_box(1).unwrap();
        if b.min == [0, 0, 0] && b.max == [4, 6, 2] {
            assert_eq!(blob.scale_to_fill().unwrap(), blob);
        }
    }
}

#[test]
fn layer_text_lists_every_cell() {
    let dims = GridDims::new(3, 2, 2, 5.0).unwrap();
    let grid = VoxelGrid::from_occupied(dims, [(0, 0, 0), (2, 1, 1)]);
    assert_eq!(grid.to_layer_text(), "y=0\n#..\n...\ny=1\n...\n..#\n");
}
