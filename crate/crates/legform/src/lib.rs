//! Experiment orchestration, file formats and the command-line front end for
//! [`legform_core`].

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod cli;
pub mod config;
pub mod experiment;
pub mod genome_json;
pub mod meshio;
pub mod plot;
pub mod report;

pub use config::{ConfigError, Environment, ExperimentConfig, Representation};
pub use experiment::{run_experiment, run_to_dir, GenerationStats, RunArchive};
pub use genome_json::Genome;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Genome(#[from] genome_json::GenomeJsonError),
    #[error(transparent)]
    MeshFile(#[from] meshio::MeshFileError),
    #[error("mesh: {0}")]
    Mesh(#[from] legform_core::mesh::MeshError),
    #[error("simulation: {0}")]
    Sim(#[from] legform_core::sim::SimError),
    #[error("statistics: {0}")]
    Stats(#[from] legform_core::stats::StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("evolution: {0}")]
    Evolution(String),
    #[error("archive: {0}")]
    Archive(String),
    #[error("io failure at {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
