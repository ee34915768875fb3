//! Surrogate leg evaluation.
//!
//! A coxa (yaw) → femur (pitch) → tibia (pitch) chain carries the voxel grid
//! through a three-phase step. Submerged surface voxels feel a resistive
//! force opposing their velocity, every voxel feels gravity, and the
//! per-step sum of absolute joint torques feeds the fitness
//! `f = 1 / (T̄ + T̄·δ/5)`, with `T̄` the mean combined torque (Nm) and `δ` the
//! occupancy percentage.
//!
//! Frames: the coxa joint sits at the origin, `+y` is up, the leg reaches
//! out along `+z` and `+x` points forward. Lengths are millimetres, angles
//! degrees, forces newtons and torques newton-metres.

use alloc::vec::Vec;

use thiserror::Error;

use crate::voxel::VoxelGrid;

pub const STANDARD_STEPS: usize = 3000;
pub const STANDARD_DT: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("grid has no occupied voxels")]
    EmptyGrid,
    #[error("step {step} outside trajectory of {n_steps} steps")]
    OutOfRange { step: usize, n_steps: usize },
    #[error("invalid leg: {0}")]
    InvalidLeg(&'static str),
}

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

#[inline]
fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Rotation about `+y` (coxa yaw).
fn yaw(deg: f64) -> Mat3 {
    let (s, c) = libm::sincos(deg.to_radians());
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

/// Rotation about `-x`; positive angles lift `+z` towards `+y`.
fn pitch(deg: f64) -> Mat3 {
    let (s, c) = libm::sincos(deg.to_radians());
    [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub coxa: f64,
    pub femur: f64,
    pub tibia: f64,
}

impl JointAngles {
    pub const fn new(coxa: f64, femur: f64, tibia: f64) -> Self {
        Self { coxa, femur, tibia }
    }
}

/// A sequence of joint angles sampled at a fixed time step.
pub trait Trajectory {
    fn n_steps(&self) -> usize;
    /// Seconds between consecutive steps.
    fn dt(&self) -> f64;
    fn angles(&self, step: usize) -> Result<JointAngles, SimError>;
}

/// Step-down, sweep, step-up; each phase lasts `phase_steps` steps.
///
/// Within a phase the interpolation parameter is `offset / (phase_steps - 1)`
/// so both phase end points are reached exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrajectory {
    pub phase_steps: usize,
    pub dt: f64,
}

impl Default for StepTrajectory {
    fn default() -> Self {
        Self { phase_steps: STANDARD_STEPS / 3, dt: STANDARD_DT }
    }
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

impl Trajectory for StepTrajectory {
    fn n_steps(&self) -> usize {
        3 * self.phase_steps
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn angles(&self, step: usize) -> Result<JointAngles, SimError> {
        if step >= self.n_steps() {
            return Err(SimError::OutOfRange { step, n_steps: self.n_steps() });
        }
        let phase = step / self.phase_steps;
        let offset = step % self.phase_steps;
        let u = if self.phase_steps > 1 { offset as f64 / (self.phase_steps - 1) as f64 } else { 1.0 };
        Ok(match phase {
            0 => JointAngles::new(30.0, lerp(30.0, 0.0, u), lerp(-30.0, 0.0, u)),
            1 => JointAngles::new(lerp(30.0, -30.0, u), 0.0, 0.0),
            _ => JointAngles::new(-30.0, lerp(0.0, 30.0, u), lerp(0.0, -30.0, u)),
        })
    }
}

/// Joint angles of the standard 3000-step trajectory.
pub fn joint_angles(step: usize) -> Result<JointAngles, SimError> {
    StepTrajectory::default().angles(step)
}

/// A pose held for a number of steps; every velocity is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticPose {
    pub angles: JointAngles,
    pub n_steps: usize,
    pub dt: f64,
}

impl Trajectory for StaticPose {
    fn n_steps(&self) -> usize {
        self.n_steps
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn angles(&self, step: usize) -> Result<JointAngles, SimError> {
        if step >= self.n_steps {
            return Err(SimError::OutOfRange { step, n_steps: self.n_steps });
        }
        Ok(self.angles)
    }
}

/// Kinematic chain and material constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LegRig {
    pub coxa_length: f64,
    pub femur_length: f64,
    /// g/cm³.
    pub material_density: f64,
    /// m/s²; zero disables gravity.
    pub gravity: f64,
}

impl Default for LegRig {
    fn default() -> Self {
        Self { coxa_length: 50.0, femur_length: 80.0, material_density: 1.04, gravity: 9.81 }
    }
}

impl LegRig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.coxa_length > 0.0 && self.femur_length > 0.0) {
            return Err(SimError::InvalidLeg("segment lengths must be positive"));
        }
        if !(self.material_density >= 0.0 && self.gravity >= 0.0) {
            return Err(SimError::InvalidLeg("density and gravity must be non-negative"));
        }
        Ok(())
    }

    /// Tibia frame and joint axes for a set of angles.
    pub fn pose(&self, angles: JointAngles) -> Pose {
        let coxa = yaw(angles.coxa);
        let femur = mat_mul(&coxa, &pitch(angles.femur));
        let tibia = mat_mul(&femur, &pitch(angles.tibia));
        let femur_origin = mat_vec(&coxa, [0.0, 0.0, self.coxa_length]);
        let tibia_origin = add(femur_origin, mat_vec(&femur, [0.0, 0.0, self.femur_length]));
        let pitch_axis = mat_vec(&coxa, [-1.0, 0.0, 0.0]);
        Pose {
            rotation: tibia,
            origin: tibia_origin,
            joint_origins: [[0.0; 3], femur_origin, tibia_origin],
            joint_axes: [[0.0, 1.0, 0.0], pitch_axis, pitch_axis],
        }
    }
}

/// World placement of the tibia frame plus the joint origins and axes
/// (coxa, femur, tibia).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub origin: Vec3,
    pub joint_origins: [Vec3; 3],
    pub joint_axes: [Vec3; 3],
}

impl Pose {
    #[inline]
    pub fn to_world(&self, local: Vec3) -> Vec3 {
        add(self.origin, mat_vec(&self.rotation, local))
    }

    /// Torque of `force` applied at `point` about each joint axis.
    #[inline]
    pub fn joint_torques(&self, point: Vec3, force: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (j, t) in out.iter_mut().enumerate() {
            let r = scale(sub(point, self.joint_origins[j]), 1e-3);
            *t = dot(cross(r, force), self.joint_axes[j]);
        }
        out
    }
}

/// Voxel centre in the tibia frame: the top face of the grid sits at the
/// tibia joint and `y` runs downward; `x` and `z` are centred on the joint.
pub fn voxel_local_position(grid: &VoxelGrid, x: usize, y: usize, z: usize) -> Vec3 {
    let d = grid.dims();
    let s = d.voxel_size;
    [
        (x as f64 + 0.5) * s - d.nx as f64 * s / 2.0,
        -(d.ny as f64 - y as f64 - 0.5) * s,
        (z as f64 + 0.5) * s - d.nz as f64 * s / 2.0,
    ]
}

/// Occupied voxels with at least one empty or out-of-bounds face neighbour.
pub fn surface_voxels(grid: &VoxelGrid) -> Vec<(usize, usize, usize)> {
    const OFFSETS: [(isize, isize, isize); 6] = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];
    grid.occupied()
        .filter(|&(x, y, z)| {
            OFFSETS
                .iter()
                .any(|&(dx, dy, dz)| !grid.get_signed(x as isize + dx, y as isize + dy, z as isize + dz))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum MediumKind {
    /// Bearing resistance `k·depth·A` (N, with `A` in mm²).
    Soil { k: f64 },
    /// Soil law scaled by `1 + μ·|v_horizontal|/|v|`.
    Gravel { k: f64, mu: f64 },
    /// Quadratic drag `½·ρ·c_d·A·|v|²` in SI units.
    Fluid { density: f64, drag_coefficient: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MediumModel {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: MediumKind,
    /// Height of the medium surface in the leg frame (mm).
    pub terrain_height: f64,
}

/// Surface 40 mm below the tibia joint at the neutral pose.
pub const DEFAULT_TERRAIN_HEIGHT: f64 = -40.0;

impl MediumModel {
    pub fn soil() -> Self {
        Self { kind: MediumKind::Soil { k: 0.002 }, terrain_height: DEFAULT_TERRAIN_HEIGHT }
    }

    pub fn gravel() -> Self {
        Self { kind: MediumKind::Gravel { k: 0.006, mu: 0.5 }, terrain_height: DEFAULT_TERRAIN_HEIGHT }
    }

    pub fn fluid() -> Self {
        Self {
            kind: MediumKind::Fluid { density: 1000.0, drag_coefficient: 1.0 },
            terrain_height: DEFAULT_TERRAIN_HEIGHT,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match self.kind {
            MediumKind::Soil { k } => k > 0.0,
            MediumKind::Gravel { k, mu } => k > 0.0 && mu > 0.0,
            MediumKind::Fluid { density, drag_coefficient } => density > 0.0 && drag_coefficient > 0.0,
        };
        if !ok || !self.terrain_height.is_finite() {
            return Err(SimError::InvalidLeg("medium coefficients must be positive"));
        }
        Ok(())
    }

    /// Resistive force on one voxel at `depth` mm below the surface moving at
    /// `velocity` mm/s. Zero when not submerged or not moving.
    pub fn force(&self, depth: f64, velocity: Vec3, voxel_size: f64) -> Vec3 {
        let speed = norm(velocity);
        if depth <= 0.0 || speed <= 0.0 {
            return [0.0; 3];
        }
        let area = voxel_size * voxel_size;
        let magnitude = match self.kind {
            MediumKind::Soil { k } => k * depth * area,
            MediumKind::Gravel { k, mu } => {
                let horizontal = libm::hypot(velocity[0], velocity[2]);
                k * depth * area * (1.0 + mu * horizontal / speed)
            }
            MediumKind::Fluid { density, drag_coefficient } => {
                let speed_si = speed * 1e-3;
                0.5 * density * drag_coefficient * area * 1e-6 * speed_si * speed_si
            }
        };
        scale(velocity, -magnitude / speed)
    }
}

/// Per-step joint torques over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueTrace {
    joints: Vec<Vec3>,
}

impl TorqueTrace {
    pub fn from_joint_torques(joints: Vec<Vec3>) -> Self {
        Self { joints }
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// `(τ_coxa, τ_femur, τ_tibia)` per step.
    pub fn joint_torques(&self) -> &[Vec3] {
        &self.joints
    }

    /// `|τ_coxa| + |τ_femur| + |τ_tibia|` at a step.
    pub fn combined(&self, step: usize) -> f64 {
        self.joints[step].iter().map(|t| libm::fabs(*t)).sum()
    }

    pub fn total(&self) -> f64 {
        (0..self.joints.len()).map(|s| self.combined(s)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.joints.len() as f64
    }
}

/// `1 / (T̄ + T̄·δ/5)`.
#[inline]
pub fn fitness(mean_torque: f64, occupancy_percent: f64) -> f64 {
    1.0 / (mean_torque + mean_torque * occupancy_percent / 5.0)
}

/// Fitness of an already computed trace for a leg with the given occupancy.
pub fn fitness_from_trace(trace: &TorqueTrace, occupancy_percent: f64) -> Result<f64, SimError> {
    if trace.is_empty() {
        return Err(SimError::InvalidLeg("empty torque trace"));
    }
    let mean = trace.mean();
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(SimError::InvalidLeg("mean torque must be positive and finite"));
    }
    Ok(fitness(mean, occupancy_percent))
}

/// Position and velocity of one surface voxel at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelState {
    pub voxel: (usize, usize, usize),
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Precomputed leg geometry for repeated torque queries.
pub struct LegModel<'a> {
    rig: &'a LegRig,
    voxel_size: f64,
    surface: Vec<(usize, usize, usize)>,
    surface_local: Vec<Vec3>,
    mass_kg: f64,
    centre_of_mass: Vec3,
}

impl<'a> LegModel<'a> {
    pub fn new(rig: &'a LegRig, grid: &VoxelGrid) -> Result<Self, SimError> {
        let count = grid.occupied_count();
        if count == 0 {
            return Err(SimError::EmptyGrid);
        }
        let surface = surface_voxels(grid);
        let surface_local = surface.iter().map(|&(x, y, z)| voxel_local_position(grid, x, y, z)).collect();
        let sum = grid
            .occupied()
            .map(|(x, y, z)| voxel_local_position(grid, x, y, z))
            .fold([0.0; 3], add);
        let s_cm = grid.dims().voxel_size / 10.0;
        let mass_kg = rig.material_density * s_cm * s_cm * s_cm * count as f64 / 1000.0;
        Ok(Self {
            rig,
            voxel_size: grid.dims().voxel_size,
            surface,
            surface_local,
            mass_kg,
            centre_of_mass: scale(sum, 1.0 / count as f64),
        })
    }

    pub fn surface(&self) -> &[(usize, usize, usize)] {
        &self.surface
    }

    fn motion<T: Trajectory + ?Sized>(&self, trajectory: &T, step: usize) -> Result<(Pose, Mat3, Vec3), SimError> {
        let n = trajectory.n_steps();
        if step >= n {
            return Err(SimError::OutOfRange { step, n_steps: n });
        }
        let pose = self.rig.pose(trajectory.angles(step)?);
        let (before, after) = (step.saturating_sub(1), (step + 1).min(n - 1));
        if before == after {
            return Ok((pose, [[0.0; 3]; 3], [0.0; 3]));
        }
        let p0 = self.rig.pose(trajectory.angles(before)?);
        let p1 = self.rig.pose(trajectory.angles(after)?);
        let span = (after - before) as f64 * trajectory.dt();
        let mut rot_rate = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rot_rate[i][j] = (p1.rotation[i][j] - p0.rotation[i][j]) / span;
            }
        }
        let origin_rate = scale(sub(p1.origin, p0.origin), 1.0 / span);
        Ok((pose, rot_rate, origin_rate))
    }

    /// World position (mm) and finite-difference velocity (mm/s) of every surface voxel.
    pub fn kinematics<T: Trajectory + ?Sized>(&self, trajectory: &T, step: usize) -> Result<Vec<VoxelState>, SimError> {
        let (pose, rot_rate, origin_rate) = self.motion(trajectory, step)?;
        Ok(self
            .surface
            .iter()
            .zip(&self.surface_local)
            .map(|(&voxel, &local)| VoxelState {
                voxel,
                position: pose.to_world(local),
                velocity: add(origin_rate, mat_vec(&rot_rate, local)),
            })
            .collect())
    }

    /// `(τ_coxa, τ_femur, τ_tibia)` at one step.
    pub fn joint_torques<T: Trajectory + ?Sized>(
        &self,
        trajectory: &T,
        medium: &MediumModel,
        step: usize,
    ) -> Result<Vec3, SimError> {
        let (pose, rot_rate, origin_rate) = self.motion(trajectory, step)?;
        let mut torque = [0.0; 3];
        let rot = &pose.rotation;
        for &local in &self.surface_local {
            // depth check first: only the y row of the transform is needed
            let y = pose.origin[1] + dot(rot[1], local);
            let depth = medium.terrain_height - y;
            if depth <= 0.0 {
                continue;
            }
            let velocity = add(origin_rate, mat_vec(&rot_rate, local));
            let force = medium.force(depth, velocity, self.voxel_size);
            if force == [0.0; 3] {
                continue;
            }
            let position = pose.to_world(local);
            torque = add(torque, pose.joint_torques(position, force));
        }
        if self.rig.gravity > 0.0 {
            let weight = [0.0, -self.mass_kg * self.rig.gravity, 0.0];
            torque = add(torque, pose.joint_torques(pose.to_world(self.centre_of_mass), weight));
        }
        Ok(torque)
    }

    pub fn trace<T: Trajectory + ?Sized>(&self, trajectory: &T, medium: &MediumModel) -> Result<TorqueTrace, SimError> {
        let joints = (0..trajectory.n_steps())
            .map(|s| self.joint_torques(trajectory, medium, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TorqueTrace { joints })
    }
}

/// Surface-voxel positions and velocities at a step of the standard trajectory.
pub fn voxel_kinematics(rig: &LegRig, grid: &VoxelGrid, step: usize) -> Result<Vec<VoxelState>, SimError> {
    LegModel::new(rig, grid)?.kinematics(&StepTrajectory::default(), step)
}

/// Joint torques at a step of the standard trajectory.
pub fn medium_torque(rig: &LegRig, grid: &VoxelGrid, step: usize, medium: &MediumModel) -> Result<Vec3, SimError> {
    LegModel::new(rig, grid)?.joint_torques(&StepTrajectory::default(), medium, step)
}

/// Runs the whole trajectory and scores the leg.
pub fn evaluate<T: Trajectory + ?Sized>(
    grid: &VoxelGrid,
    rig: &LegRig,
    trajectory: &T,
    medium: &MediumModel,
) -> Result<(f64, TorqueTrace), SimError> {
    if grid.is_empty() {
        return Err(SimError::InvalidLeg("grid has no occupied voxels"));
    }
    let model = LegModel::new(rig, grid)?;
    let trace = model.trace(trajectory, medium)?;
    let f = fitness_from_trace(&trace, grid.occupancy_percentage())?;
    Ok((f, trace))
}
