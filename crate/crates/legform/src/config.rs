//! Run configuration, read from and written to JSON.

use std::path::PathBuf;

use legform_core::cppn::ConstraintMethod;
use legform_core::{GridDims, LegRig, MediumModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot parse configuration at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Bezier,
    Cppn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Soil,
    Gravel,
    Fluid,
}

impl Environment {
    pub fn default_medium(self) -> MediumModel {
        match self {
            Environment::Soil => MediumModel::soil(),
            Environment::Gravel => MediumModel::gravel(),
            Environment::Fluid => MediumModel::fluid(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::Soil => "soil",
            Environment::Gravel => "gravel",
            Environment::Fluid => "fluid",
        }
    }
}

fn default_generations() -> usize {
    50
}

fn default_population() -> usize {
    20
}

fn default_repeats() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub representation: Representation,
    /// Required for CPPN runs, absent for Bezier runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_method: Option<ConstraintMethod>,
    pub environment: Environment,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub rig: LegRig,
    /// Replaces the environment's default medium when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumModel>,
    #[serde(default)]
    pub grid: GridDims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(representation: Representation, constraint_method: Option<ConstraintMethod>, environment: Environment) -> Self {
        Self {
            representation,
            constraint_method,
            environment,
            generations: default_generations(),
            population: default_population(),
            repeats: default_repeats(),
            master_seed: 0,
            rig: LegRig::default(),
            medium: None,
            grid: GridDims::default(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    pub fn medium(&self) -> MediumModel {
        self.medium.unwrap_or_else(|| self.environment.default_medium())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.generations == 0 || self.repeats == 0 {
            return invalid("generations and repeats must be at least 1");
        }
        // both algorithms need two parents to recombine
        if self.population < 2 {
            return invalid("population must be at least 2");
        }
        match (self.representation, self.constraint_method) {
            (Representation::Cppn, None) => return invalid("cppn runs need a constraint method (threshold or scale)"),
            (Representation::Bezier, Some(_)) => return invalid("constraint method applies to cppn runs only"),
            _ => {}
        }
        self.grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.rig.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.medium().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
