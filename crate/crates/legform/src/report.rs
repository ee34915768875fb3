//! Statistics CSV, torque-trace CSV and significance reports.

use std::collections::BTreeMap;
use std::path::Path;

use legform_core::stats::mann_whitney_u;
use legform_core::TorqueTrace;
use serde::{Deserialize, Serialize};

use crate::Error;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub repeat: usize,
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
}

pub fn stats_csv_bytes(rows: &[StatsRow]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Archive(e.to_string()))
}

pub fn write_stats_csv(rows: &[StatsRow], path: &Path) -> Result<(), Error> {
    let bytes = stats_csv_bytes(rows)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsRow>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Archive(format!("{}: {other:?}", path.display())),
    })?;
    r.deserialize().collect::<Result<Vec<StatsRow>, _>>().map_err(Error::from)
}

/// Best fitness of the last generation of each repeat, in repeat order.
pub fn final_bests(rows: &[StatsRow]) -> Vec<f64> {
    let mut last: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in rows {
        let entry = last.entry(r.repeat).or_insert((r.generation, r.best));
        if r.generation >= entry.0 {
            *entry = (r.generation, r.best);
        }
    }
    last.into_values().map(|(_, best)| best).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n_a: usize,
    pub n_b: usize,
    #[serde(rename = "U")]
    pub u: f64,
    pub p: f64,
    pub significant: bool,
}

/// Mann-Whitney U over per-repeat final best fitnesses.
pub fn compare_samples(a: &[f64], b: &[f64]) -> Result<CompareReport, Error> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Archive(format!("each archive needs at least 2 runs (got {} and {})", a.len(), b.len())));
    }
    let r = mann_whitney_u(a, b)?;
    Ok(CompareReport { n_a: a.len(), n_b: b.len(), u: r.u, p: r.p_two_sided, significant: r.p_two_sided < SIGNIFICANCE_LEVEL })
}

/// Compares two archive directories by their `stats.csv` files.
pub fn compare_runs(dir_a: &Path, dir_b: &Path) -> Result<CompareReport, Error> {
    let a = final_bests(&read_stats_csv(&dir_a.join("stats.csv"))?);
    let b = final_bests(&read_stats_csv(&dir_b.join("stats.csv"))?);
    compare_samples(&a, &b)
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    tau_coxa: f64,
    tau_femur: f64,
    tau_tibia: f64,
    tau_sum: f64,
}

/// `step, tau_coxa, tau_femur, tau_tibia, tau_sum` with `tau_sum` the sum of absolute values.
pub fn torque_trace_csv(trace: &TorqueTrace) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (step, t) in trace.joint_torques().iter().enumerate() {
        w.serialize(TraceRow { step, tau_coxa: t[0], tau_femur: t[1], tau_tibia: t[2], tau_sum: trace.combined(step) })?;
    }
    w.into_inner().map_err(|e| Error::Archive(e.to_string()))
}
