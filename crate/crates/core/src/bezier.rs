//! Direct encoding: a leg is the voxelised union of 5-10 thick 3D Bezier
//! splines, evolved by a genetic algorithm with tournament selection,
//! two-point crossover at spline boundaries and Gaussian control-point noise.
//!
//! Spline 0 is pinned: its first control point lies on the top plane
//! (`y = ny`) and its last on the bottom plane (`y = 0`), so every genome
//! rasterises to a compliant leg.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::voxel::{GridDims, VoxelGrid};

pub const MIN_SPLINES: usize = 5;
pub const MAX_SPLINES: usize = 10;
pub const MIN_POINTS: usize = 3;
pub const MAX_POINTS: usize = 8;
pub const MIN_THICKNESS: u8 = 1;
pub const MAX_THICKNESS: u8 = 3;

/// Initial uniform samples per spline before refinement.
const INITIAL_SAMPLES: usize = 64;
/// Largest allowed gap between consecutive samples, in voxels.
const MAX_SAMPLE_GAP: f64 = 0.5;
const MAX_REFINE_DEPTH: u32 = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BezierError {
    #[error("invalid genome: {0}")]
    Invalid(&'static str),
    #[error("expected {expected} fitness values, got {got}")]
    InconsistentInput { expected: usize, got: usize },
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Continuous position in voxel units; `0..=n` along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ControlPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn lerp(self, other: Self, t: f64) -> Self {
        Self {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            z: self.z + (other.z - self.z) * t,
        }
    }

    fn distance(self, other: Self) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        libm::sqrt(dx * dx + dy * dy + dz * dz)
    }

    fn clamped(self, dims: GridDims) -> Self {
        Self {
            x: self.x.clamp(0.0, dims.nx as f64),
            y: self.y.clamp(0.0, dims.ny as f64),
            z: self.z.clamp(0.0, dims.nz as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    pub points: Vec<ControlPoint>,
    /// Brush diameter in voxels.
    pub thickness: u8,
}

impl Spline {
    /// Point on the curve at `t ∈ [0, 1]` by de Casteljau's algorithm.
    pub fn point(&self, t: f64) -> ControlPoint {
        let mut work = self.points.clone();
        for level in (1..work.len()).rev() {
            for i in 0..level {
                work[i] = work[i].lerp(work[i + 1], t);
            }
        }
        work[0]
    }

    /// Curve samples from `t = 0` to `t = 1`, refined until neighbours are at
    /// most half a voxel apart.
    pub fn samples(&self) -> Vec<ControlPoint> {
        let mut out = Vec::with_capacity(INITIAL_SAMPLES * 2);
        let step = 1.0 / (INITIAL_SAMPLES - 1) as f64;
        let mut prev_t = 0.0;
        let mut prev = self.point(0.0);
        out.push(prev);
        for i in 1..INITIAL_SAMPLES {
            let t = if i == INITIAL_SAMPLES - 1 { 1.0 } else { i as f64 * step };
            let p = self.point(t);
            self.refine(prev_t, prev, t, p, 0, &mut out);
            out.push(p);
            prev_t = t;
            prev = p;
        }
        out
    }

    fn refine(&self, t0: f64, p0: ControlPoint, t1: f64, p1: ControlPoint, depth: u32, out: &mut Vec<ControlPoint>) {
        if p0.distance(p1) <= MAX_SAMPLE_GAP || depth >= MAX_REFINE_DEPTH {
            return;
        }
        let tm = 0.5 * (t0 + t1);
        let pm = self.point(tm);
        self.refine(t0, p0, tm, pm, depth + 1, out);
        out.push(pm);
        self.refine(tm, pm, t1, p1, depth + 1, out);
    }

    fn random<R: Rng + ?Sized>(dims: GridDims, rng: &mut R) -> Self {
        let count = rng.random_range(MIN_POINTS..=MAX_POINTS);
        let points = (0..count).map(|_| random_point(dims, rng)).collect();
        Self { points, thickness: rng.random_range(MIN_THICKNESS..=MAX_THICKNESS) }
    }
}

/// de Casteljau evaluation of `spline` at `t`.
pub fn bezier_point(spline: &Spline, t: f64) -> ControlPoint {
    spline.point(t)
}

fn random_point<R: Rng + ?Sized>(dims: GridDims, rng: &mut R) -> ControlPoint {
    ControlPoint::new(
        rng.random_range(0.0..=dims.nx as f64),
        rng.random_range(0.0..=dims.ny as f64),
        rng.random_range(0.0..=dims.nz as f64),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierGenome {
    pub splines: Vec<Spline>,
}

impl BezierGenome {
    pub fn validate(&self, dims: GridDims) -> Result<(), BezierError> {
        if !(MIN_SPLINES..=MAX_SPLINES).contains(&self.splines.len()) {
            return Err(BezierError::Invalid("spline count outside 5..=10"));
        }
        for s in &self.splines {
            if !(MIN_POINTS..=MAX_POINTS).contains(&s.points.len()) {
                return Err(BezierError::Invalid("control point count outside 3..=8"));
            }
            if !(MIN_THICKNESS..=MAX_THICKNESS).contains(&s.thickness) {
                return Err(BezierError::Invalid("thickness outside 1..=3"));
            }
            for p in &s.points {
                let inside = |v: f64, n: usize| v.is_finite() && (0.0..=n as f64).contains(&v);
                if !(inside(p.x, dims.nx) && inside(p.y, dims.ny) && inside(p.z, dims.nz)) {
                    return Err(BezierError::Invalid("control point outside grid bounds"));
                }
            }
        }
        if !self.is_pinned(dims) {
            return Err(BezierError::Invalid("spline 0 must run from the top plane to the bottom plane"));
        }
        Ok(())
    }

    pub fn is_pinned(&self, dims: GridDims) -> bool {
        match self.splines.first() {
            Some(s) => match (s.points.first(), s.points.last()) {
                (Some(first), Some(last)) => first.y == dims.ny as f64 && last.y == 0.0,
                _ => false,
            },
            None => false,
        }
    }

    /// Forces spline 0's end points onto the top and bottom planes.
    pub fn pin(&mut self, dims: GridDims) {
        if let Some(s) = self.splines.first_mut() {
            if let Some(p) = s.points.first_mut() {
                p.y = dims.ny as f64;
            }
            if let Some(p) = s.points.last_mut() {
                p.y = 0.0;
            }
        }
    }

    /// Voxelises the union of all splines.
    ///
    /// Each spline marks the cell containing every sample, bridges
    /// consecutive sample cells with face-adjacent steps, and fills every
    /// cell whose centre lies within `thickness / 2` of a sample.
    pub fn rasterize(&self, dims: GridDims) -> VoxelGrid {
        let mut cells = vec![false; dims.cell_count()];
        for spline in &self.splines {
            stamp_spline(spline, dims, &mut cells);
        }
        VoxelGrid::from_cells(dims, cells).expect("cell count matches dims")
    }
}

fn containing_cell(p: ControlPoint, dims: GridDims) -> [usize; 3] {
    let cell = |v: f64, n: usize| (libm::floor(v).max(0.0) as usize).min(n - 1);
    [cell(p.x, dims.nx), cell(p.y, dims.ny), cell(p.z, dims.nz)]
}

fn stamp_spline(spline: &Spline, dims: GridDims, cells: &mut [bool]) {
    let radius = spline.thickness as f64 / 2.0;
    let r2 = radius * radius;
    let mut prev: Option<[usize; 3]> = None;
    for p in spline.samples() {
        let cell = containing_cell(p, dims);
        let mut cur = prev.unwrap_or(cell);
        cells[dims.index(cur[0], cur[1], cur[2])] = true;
        for axis in 0..3 {
            while cur[axis] != cell[axis] {
                if cur[axis] < cell[axis] {
                    cur[axis] += 1;
                } else {
                    cur[axis] -= 1;
                }
                cells[dims.index(cur[0], cur[1], cur[2])] = true;
            }
        }
        prev = Some(cell);

        let range = |v: f64, n: usize| {
            let lo = libm::floor(v - radius - 0.5).max(0.0) as usize;
            let hi = (libm::ceil(v + radius).max(0.0) as usize).min(n);
            lo..hi
        };
        for y in range(p.y, dims.ny) {
            let dy = y as f64 + 0.5 - p.y;
            for z in range(p.z, dims.nz) {
                let dz = z as f64 + 0.5 - p.z;
                for x in range(p.x, dims.nx) {
                    let dx = x as f64 + 0.5 - p.x;
                    if dx * dx + dy * dy + dz * dz <= r2 {
                        cells[dims.index(x, y, z)] = true;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaConfig {
    pub dims: GridDims,
    pub population_size: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    /// Per-axis standard deviation of control-point noise, in voxels.
    pub sigma: [f64; 3],
    pub p_thickness: f64,
    pub p_ctrl_point: f64,
    pub p_spline: f64,
    /// Probability that a count mutation adds rather than removes.
    pub p_add: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self::for_dims(GridDims::default())
    }
}

impl GaConfig {
    /// Defaults with noise `σ = (n · 0.1) / 4` per axis.
    pub fn for_dims(dims: GridDims) -> Self {
        let sigma = |n: usize| n as f64 * 0.1 / 4.0;
        Self {
            dims,
            population_size: 20,
            elitism: 1,
            tournament_size: 4,
            sigma: [sigma(dims.nx), sigma(dims.ny), sigma(dims.nz)],
            p_thickness: 0.2,
            p_ctrl_point: 0.2,
            p_spline: 0.1,
            p_add: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), BezierError> {
        let ps = [self.p_thickness, self.p_ctrl_point, self.p_spline, self.p_add];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BezierError::InvalidConfig("probabilities must lie in [0, 1]"));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(BezierError::InvalidConfig("sigma must be finite and non-negative"));
        }
        if self.population_size < 2 || self.tournament_size == 0 || self.elitism > self.population_size {
            return Err(BezierError::InvalidConfig("population, tournament and elitism sizes are inconsistent"));
        }
        self.dims.validate().map_err(|_| BezierError::InvalidConfig("invalid grid dimensions"))
    }
}

pub fn random_genome<R: Rng + ?Sized>(config: &GaConfig, rng: &mut R) -> BezierGenome {
    let count = rng.random_range(MIN_SPLINES..=MAX_SPLINES);
    let mut genome = BezierGenome { splines: (0..count).map(|_| Spline::random(config.dims, rng)).collect() };
    genome.pin(config.dims);
    genome
}

/// Two-point crossover with cuts `0 <= i < j <= m` drawn over the shorter parent.
pub fn two_point_crossover<R: Rng + ?Sized>(
    p1: &BezierGenome,
    p2: &BezierGenome,
    dims: GridDims,
    rng: &mut R,
) -> BezierGenome {
    let m = p1.splines.len().min(p2.splines.len());
    let cuts = index::sample(rng, m + 1, 2);
    let (a, b) = (cuts.index(0), cuts.index(1));
    crossover_at(p1, p2, a.min(b), a.max(b), dims)
}

/// `p1[..i] ++ p2[i..j] ++ p1[j..]`, re-pinned.
pub fn crossover_at(p1: &BezierGenome, p2: &BezierGenome, i: usize, j: usize, dims: GridDims) -> BezierGenome {
    let splines = p1.splines[..i]
        .iter()
        .chain(&p2.splines[i..j])
        .chain(&p1.splines[j..])
        .cloned()
        .collect();
    let mut child = BezierGenome { splines };
    child.pin(dims);
    child
}

pub fn mutate<R: Rng + ?Sized>(genome: &BezierGenome, config: &GaConfig, rng: &mut R) -> BezierGenome {
    let dims = config.dims;
    let mut g = genome.clone();
    let noise = config.sigma.map(|s| Normal::new(0.0, s).expect("validated sigma"));

    for spline in &mut g.splines {
        for p in &mut spline.points {
            let moved = ControlPoint::new(
                p.x + noise[0].sample(rng),
                p.y + noise[1].sample(rng),
                p.z + noise[2].sample(rng),
            );
            *p = moved.clamped(dims);
        }
    }

    if rng.random_bool(config.p_thickness) {
        let k = rng.random_range(0..g.splines.len());
        g.splines[k].thickness = rng.random_range(MIN_THICKNESS..=MAX_THICKNESS);
    }

    if rng.random_bool(config.p_ctrl_point) {
        let k = rng.random_range(0..g.splines.len());
        let points = &mut g.splines[k].points;
        if rng.random_bool(config.p_add) {
            if points.len() < MAX_POINTS {
                let at = rng.random_range(1..points.len());
                points.insert(at, random_point(dims, rng));
            }
        } else if points.len() > MIN_POINTS {
            let at = rng.random_range(1..points.len() - 1);
            points.remove(at);
        }
    }

    if rng.random_bool(config.p_spline) {
        if rng.random_bool(config.p_add) {
            if g.splines.len() < MAX_SPLINES {
                g.splines.push(Spline::random(dims, rng));
            }
        } else if g.splines.len() > MIN_SPLINES {
            // spline 0 carries the top-to-bottom span and is never removed
            let at = rng.random_range(1..g.splines.len());
            g.splines.remove(at);
        }
    }

    g.pin(dims);
    g
}

/// Winner of a tournament over `size` distinct random members; ties go to the lowest index.
pub fn tournament<R: Rng + ?Sized>(fitnesses: &[f64], size: usize, rng: &mut R) -> usize {
    let entrants = index::sample(rng, fitnesses.len(), size.min(fitnesses.len()));
    entrants
        .into_iter()
        .max_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(b.cmp(&a)))
        .expect("tournament has at least one entrant")
}

/// Index of the best member, lowest index on ties.
pub fn best_index(fitnesses: &[f64]) -> Option<usize> {
    (0..fitnesses.len()).max_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(b.cmp(&a)))
}

pub fn next_generation_ga<R: Rng + ?Sized>(
    population: &[BezierGenome],
    fitnesses: &[f64],
    config: &GaConfig,
    rng: &mut R,
) -> Result<Vec<BezierGenome>, BezierError> {
    if population.len() != fitnesses.len() || population.is_empty() {
        return Err(BezierError::InconsistentInput { expected: population.len(), got: fitnesses.len() });
    }
    let fitness: Vec<f64> = fitnesses.iter().map(|&f| if f.is_nan() { f64::NEG_INFINITY } else { f }).collect();
    let mut ranked: Vec<usize> = (0..fitness.len()).collect();
    ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));

    let mut next: Vec<BezierGenome> = ranked
        .iter()
        .take(config.elitism)
        .map(|&i| population[i].clone())
        .collect();
    while next.len() < config.population_size {
        let a = tournament(&fitness, config.tournament_size, rng);
        let b = tournament(&fitness, config.tournament_size, rng);
        let child = two_point_crossover(&population[a], &population[b], config.dims, rng);
        next.push(mutate(&child, config, rng));
    }
    Ok(next)
}
