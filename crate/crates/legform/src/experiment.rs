//! Evolutionary runs: decode, evaluate, record, breed.

use std::fs;
use std::path::{Path, PathBuf};

use legform_core::bezier::{self, GaConfig};
use legform_core::cppn::ConstraintMethod;
use legform_core::mesh::voxel_to_mesh;
use legform_core::seed;
use legform_core::sim::{evaluate, StepTrajectory};
use legform_core::stats::{mean, standard_error};
use legform_core::{BezierGenome, CppnGenome, GridDims, Neat, NeatConfig, VoxelGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Representation};
use crate::genome_json::Genome;
use crate::meshio::{write_obj, write_stl};
use crate::plot::render_fitness_plot;
use crate::report::{write_stats_csv, StatsRow};
use crate::Error;

/// Fitness summary of one evaluated population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    /// Standard error of the population's fitness.
    pub std_error: f64,
}

impl GenerationStats {
    pub fn from_fitnesses(generation: usize, fitnesses: &[f64]) -> Self {
        let best = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
        // clamp guards the float sum against drifting just outside [worst, best]
        let m = mean(fitnesses).clamp(worst, best);
        Self { generation, best, mean: m, worst, std_error: standard_error(fitnesses) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub stats: GenerationStats,
    /// Seed of the stream that bred the next generation from this one.
    pub breeding_seed: u64,
    pub champion_index: usize,
    /// Members whose evaluation failed and were scored 0.
    pub failed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatArchive {
    pub repeat: usize,
    pub seed: u64,
    pub generations: Vec<GenerationRecord>,
    #[serde(skip)]
    pub champions: Vec<Genome>,
}

impl RepeatArchive {
    pub fn final_champion(&self) -> &Genome {
        self.champions.last().expect("at least one generation")
    }
}

/// Everything a run produced; `champions` are kept in memory and written
/// as one JSON file per generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArchive {
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatArchive>,
}

impl RunArchive {
    pub fn stats_rows(&self) -> Vec<StatsRow> {
        self.repeats
            .iter()
            .flat_map(|r| {
                r.generations.iter().map(move |g| StatsRow {
                    repeat: r.repeat,
                    generation: g.stats.generation,
                    best: g.stats.best,
                    mean: g.stats.mean,
                    worst: g.stats.worst,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub failed: bool,
}

pub fn decode(genome: &Genome, config: &ExperimentConfig) -> VoxelGrid {
    match genome {
        Genome::Cppn(g) => g.decode_with(config.grid, config.constraint_method.unwrap_or(ConstraintMethod::Scale)),
        Genome::Bezier(g) => g.rasterize(config.grid),
    }
}

/// Fitness of a decoded leg; degenerate legs score 0 and are flagged.
pub fn evaluate_grid(grid: &VoxelGrid, config: &ExperimentConfig) -> Evaluation {
    match evaluate(grid, &config.rig, &StepTrajectory::default(), &config.medium()) {
        Ok((fitness, _)) if fitness.is_finite() => Evaluation { fitness, failed: false },
        _ => Evaluation { fitness: 0.0, failed: true },
    }
}

trait Breeder: Sync {
    type G: Clone + Send + Sync;
    fn init(&mut self, rng: &mut ChaCha8Rng) -> Vec<Self::G>;
    fn decode(&self, g: &Self::G) -> VoxelGrid;
    fn breed(&mut self, pop: &[Self::G], fits: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<Self::G>, Error>;
    fn wrap(g: &Self::G) -> Genome;
}

struct CppnBreeder {
    neat: Neat,
    dims: GridDims,
    method: ConstraintMethod,
}

impl Breeder for CppnBreeder {
    type G = CppnGenome;

    fn init(&mut self, rng: &mut ChaCha8Rng) -> Vec<CppnGenome> {
        self.neat.init_population(rng)
    }

    fn decode(&self, g: &CppnGenome) -> VoxelGrid {
        g.decode_with(self.dims, self.method)
    }

    fn breed(&mut self, pop: &[CppnGenome], fits: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<CppnGenome>, Error> {
        self.neat.next_generation(pop, fits, rng).map_err(|e| Error::Evolution(e.to_string()))
    }

    fn wrap(g: &CppnGenome) -> Genome {
        Genome::Cppn(g.clone())
    }
}

struct BezierBreeder {
    ga: GaConfig,
}

impl Breeder for BezierBreeder {
    type G = BezierGenome;

    fn init(&mut self, rng: &mut ChaCha8Rng) -> Vec<BezierGenome> {
        (0..self.ga.population_size).map(|_| bezier::random_genome(&self.ga, rng)).collect()
    }

    fn decode(&self, g: &BezierGenome) -> VoxelGrid {
        g.rasterize(self.ga.dims)
    }

    fn breed(&mut self, pop: &[BezierGenome], fits: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<BezierGenome>, Error> {
        bezier::next_generation_ga(pop, fits, &self.ga, rng).map_err(|e| Error::Evolution(e.to_string()))
    }

    fn wrap(g: &BezierGenome) -> Genome {
        Genome::Bezier(g.clone())
    }
}

/// Stream counters under a repeat's seed.
const INIT_STREAM: u64 = 0;

fn breeding_stream(generation: usize) -> u64 {
    generation as u64 + 1
}

fn run_repeat<B: Breeder>(
    mut breeder: B,
    repeat: usize,
    config: &ExperimentConfig,
    on_generation: &mut dyn FnMut(usize, &GenerationRecord, &Genome) -> Result<(), Error>,
) -> Result<RepeatArchive, Error> {
    let repeat_seed = seed::derive_path(config.master_seed, &[repeat as u64]);
    let mut population = breeder.init(&mut ChaCha8Rng::seed_from_u64(seed::derive(repeat_seed, INIT_STREAM)));
    let mut archive = RepeatArchive { repeat, seed: repeat_seed, generations: Vec::new(), champions: Vec::new() };

    for generation in 0..config.generations {
        let evaluations: Vec<Evaluation> = population
            .par_iter()
            .map(|g| evaluate_grid(&breeder.decode(g), config))
            .collect();
        let fitnesses: Vec<f64> = evaluations.iter().map(|e| e.fitness).collect();
        let champion_index = bezier::best_index(&fitnesses).expect("non-empty population");
        let breeding_seed = seed::derive(repeat_seed, breeding_stream(generation));
        let record = GenerationRecord {
            stats: GenerationStats::from_fitnesses(generation, &fitnesses),
            breeding_seed,
            champion_index,
            failed: evaluations.iter().enumerate().filter(|(_, e)| e.failed).map(|(i, _)| i).collect(),
        };
        let champion = B::wrap(&population[champion_index]);
        on_generation(repeat, &record, &champion)?;
        archive.generations.push(record);
        archive.champions.push(champion);

        if generation + 1 < config.generations {
            population = breeder.breed(&population, &fitnesses, &mut ChaCha8Rng::seed_from_u64(breeding_seed))?;
        }
    }
    Ok(archive)
}

/// Runs every repeat; `on_generation` sees each generation's record and
/// champion as soon as it is evaluated.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut on_generation: impl FnMut(usize, &GenerationRecord, &Genome) -> Result<(), Error>,
) -> Result<RunArchive, Error> {
    config.validate()?;
    let mut repeats = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let archive = match config.representation {
            Representation::Cppn => {
                let neat = Neat::new(NeatConfig { population_size: config.population, ..NeatConfig::default() })
                    .map_err(|e| Error::Evolution(e.to_string()))?;
                let method = config.constraint_method.expect("validated");
                run_repeat(CppnBreeder { neat, dims: config.grid, method }, r, config, &mut on_generation)?
            }
            Representation::Bezier => {
                let ga = GaConfig { population_size: config.population, ..GaConfig::for_dims(config.grid) };
                ga.validate().map_err(|e| Error::Evolution(e.to_string()))?;
                run_repeat(BezierBreeder { ga }, r, config, &mut on_generation)?
            }
        };
        repeats.push(archive);
    }
    Ok(RunArchive { config: config.clone(), repeats })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArchive, Error> {
    run_experiment_with(config, |_, _, _| Ok(()))
}

pub fn run_dir(out: &Path, repeat: usize) -> PathBuf {
    out.join(format!("run_{repeat}"))
}

pub fn generation_dir(out: &Path, repeat: usize, generation: usize) -> PathBuf {
    run_dir(out, repeat).join(format!("gen_{generation}"))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs an experiment and writes its archive under `out`:
///
/// ```text
/// out/config.json, archive.json, stats.csv, plot.svg
/// out/run_<r>/gen_<g>/champion.json
/// out/run_<r>/champion.stl, champion.obj
/// ```
///
/// Champion files are written as each generation completes.
pub fn run_to_dir(config: &ExperimentConfig, out: &Path) -> Result<RunArchive, Error> {
    config.validate()?;
    write_file(&out.join("config.json"), config.to_json())?;
    let archive = run_experiment_with(config, |repeat, record, champion| {
        write_file(&generation_dir(out, repeat, record.stats.generation).join("champion.json"), champion.to_json())
    })?;
    write_summary(&archive, out)?;
    Ok(archive)
}

/// Writes the archive-level files and final champion meshes.
pub fn write_summary(archive: &RunArchive, out: &Path) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(archive).expect("archive serialises");
    write_file(&out.join("archive.json"), json)?;
    let rows = archive.stats_rows();
    let csv_path = out.join("stats.csv");
    write_stats_csv(&rows, &csv_path)?;
    let c = &archive.config;
    let label = match c.constraint_method {
        Some(m) => format!("{:?} ({:?}), {}", c.representation, m, c.environment.name()).to_lowercase(),
        None => format!("{:?}, {}", c.representation, c.environment.name()).to_lowercase(),
    };
    let svg = render_fitness_plot(&[(label, rows)])?;
    write_file(&out.join("plot.svg"), svg)?;
    for r in &archive.repeats {
        let grid = decode(r.final_champion(), &archive.config);
        let mesh = voxel_to_mesh(&grid)?;
        let dir = run_dir(out, r.repeat);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_stl(&mesh, &dir.join("champion.stl"))?;
        write_obj(&mesh, &dir.join("champion.obj"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Environment;

    fn tiny(representation: Representation) -> ExperimentConfig {
        let method = (representation == Representation::Cppn).then_some(ConstraintMethod::Scale);
        ExperimentConfig {
            generations: 3,
            population: 6,
            repeats: 2,
            master_seed: 5,
            grid: GridDims::new(6, 12, 6, 5.0).unwrap(),
            ..ExperimentConfig::new(representation, method, Environment::Soil)
        }
    }

    #[test]
    fn archive_shape_and_elitism() {
        for rep in [Representation::Cppn, Representation::Bezier] {
            let archive = run_experiment(&tiny(rep)).unwrap();
            assert_eq!(archive.repeats.len(), 2);
            for r in &archive.repeats {
                assert_eq!(r.generations.len(), 3);
                assert_eq!(r.champions.len(), 3);
                for w in r.generations.windows(2) {
                    assert!(w[1].stats.best >= w[0].stats.best);
                }
                for g in &r.generations {
                    assert!(g.stats.worst <= g.stats.mean && g.stats.mean <= g.stats.best);
                }
            }
            assert_eq!(archive.stats_rows().len(), 6);
        }
    }

    #[test]
    fn runs_replay() {
        let c = tiny(Representation::Cppn);
        assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    }

    #[test]
    fn single_generation_evaluates_every_member() {
        let c = ExperimentConfig { generations: 1, population: 20, repeats: 1, ..tiny(Representation::Bezier) };
        let mut seen = 0;
        let archive = run_experiment_with(&c, |_, record, _| {
            seen += 1;
            assert!(record.champion_index < 20);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 1);
        assert_eq!(archive.repeats[0].generations.len(), 1);
    }
}
