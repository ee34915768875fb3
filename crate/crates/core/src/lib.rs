//! Core algorithms for evolving voxelised robot-leg (tibia) morphologies.
//!
//! Everything in this crate is a pure function over immutable values and
//! builds without `std` (only `alloc` is required). File formats, the
//! experiment runner and the command-line interface live in the companion
//! `legform` crate.
//!
//! Two genotype families decode into the shared [`voxel::VoxelGrid`]
//! phenotype:
//!
//! * [`bezier`]: a direct encoding made of 3D Bezier splines, evolved by a
//!   tournament-selection genetic algorithm;
//! * [`cppn`]: an indirect encoding, a compositional pattern producing network
//!   queried at every voxel centre, evolved with [`neat`].
//!
//! Grids are scored by [`sim`], a deterministic resistive-medium torque model
//! that drives a three-joint leg through a fixed step trajectory.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bezier;
pub mod cppn;
pub mod mesh;
pub mod neat;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod voxel;

pub use bezier::{BezierGenome, ControlPoint, GaConfig, Spline};
pub use cppn::{ActivationKind, ConnGene, CppnGenome, NodeGene, NodeRole};
pub use neat::{InnovationRegistry, Neat, NeatConfig};
pub use sim::{LegRig, MediumModel, StepTrajectory, TorqueTrace};
pub use voxel::{ComponentLabeling, GridDims, VoxelGrid};
