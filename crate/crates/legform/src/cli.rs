//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! failures while running.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use legform_core::cppn::ConstraintMethod;
use legform_core::mesh::voxel_to_mesh;
use legform_core::sim::evaluate;
use legform_core::StepTrajectory;
use serde::Serialize;

use crate::config::{ConfigError, Environment, ExperimentConfig, Representation};
use crate::experiment::{decode, run_to_dir};
use crate::genome_json::{genome_from_json, Genome};
use crate::meshio::{write_obj, write_stl};
use crate::plot::render_fitness_plot;
use crate::report::{compare_runs, read_stats_csv, torque_trace_csv};
use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "legform", version, about = "Evolve, evaluate and export voxel robot legs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an evolutionary experiment and write its archive.
    Evolve(EvolveArgs),
    /// Evaluate one genome file and print its fitness as JSON.
    Evaluate(EvaluateArgs),
    /// Convert a genome file to STL and/or OBJ.
    ExportMesh(ExportArgs),
    /// Mann-Whitney U test on the final best fitnesses of two archives.
    Compare { a: PathBuf, b: PathBuf },
    /// Plot the fitness curves of one or more archives.
    Plot {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintArg {
    Threshold,
    Scale,
}

impl From<ConstraintArg> for ConstraintMethod {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::Threshold => ConstraintMethod::Threshold,
            ConstraintArg::Scale => ConstraintMethod::Scale,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    representation: Option<Representation>,
    #[arg(long, value_enum)]
    constraint: Option<ConstraintArg>,
    #[arg(long, value_enum)]
    env: Option<Environment>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Decoding and environment options shared by single-genome commands.
#[derive(Debug, Args)]
struct GenomeContext {
    /// JSON run configuration supplying grid, rig and medium.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    env: Option<Environment>,
    /// CPPN decoding method (default: scale).
    #[arg(long, value_enum)]
    constraint: Option<ConstraintArg>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    genome: PathBuf,
    #[command(flatten)]
    context: GenomeContext,
    /// Write the per-step joint torque trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    genome: PathBuf,
    #[command(flatten)]
    context: GenomeContext,
    #[arg(long)]
    stl: Option<PathBuf>,
    #[arg(long)]
    obj: Option<PathBuf>,
    /// Uniform scale factor applied to millimetre coordinates.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, value_enum, default_value = "y")]
    axis: AxisArg,
    /// Rotation about `--axis`, in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    angle: f64,
    /// Translation as `x,y,z` in millimetres.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    translate: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EvaluationReport {
    fitness: f64,
    mean_torque: f64,
    occupancy_percentage: f64,
    voxels: usize,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => Failure::Usage(c.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: legform <evolve|evaluate|export-mesh|compare|plot> [OPTIONS]; see legform --help");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Evolve(args) => evolve(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::ExportMesh(args) => export_mesh(args),
        Command::Compare { a, b } => {
            let report = compare_runs(&a, &b)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
            Ok(())
        }
        Command::Plot { dirs, out } => {
            let mut archives = Vec::with_capacity(dirs.len());
            for dir in &dirs {
                let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string());
                archives.push((label, read_stats_csv(&dir.join("stats.csv"))?));
            }
            let svg = render_fitness_plot(&archives)?;
            fs::write(&out, svg).map_err(|e| Error::io(&out, e))?;
            Ok(())
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn evolve(args: EvolveArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let (Some(rep), Some(env)) = (args.representation, args.env) else {
                return Err(Failure::Usage("evolve needs --representation and --env, or --config".into()));
            };
            ExperimentConfig::new(rep, None, env)
        }
    };
    if let Some(rep) = args.representation {
        config.representation = rep;
        if rep == Representation::Bezier {
            config.constraint_method = None;
        }
    }
    if let Some(c) = args.constraint {
        config.constraint_method = Some(c.into());
    }
    if let Some(env) = args.env {
        if env != config.environment {
            config.medium = None;
        }
        config.environment = env;
    }
    if let Some(g) = args.generations {
        config.generations = g;
    }
    if let Some(p) = args.population {
        config.population = p;
    }
    if let Some(r) = args.repeats {
        config.repeats = r;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(out) = args.out {
        config.output_dir = Some(out);
    }
    config.validate()?;
    let out = config.output_dir.clone().ok_or_else(|| Failure::Usage("evolve needs --out".into()))?;

    let archive = run_to_dir(&config, &out)?;
    for r in &archive.repeats {
        let last = r.generations.last().expect("at least one generation");
        println!("run {}: best fitness {:.6} after {} generations", r.repeat, last.stats.best, r.generations.len());
    }
    println!("archive written to {}", out.display());
    Ok(())
}

fn load_genome(path: &Path, context: &GenomeContext) -> Result<(Genome, ExperimentConfig), Failure> {
    let mut config = match &context.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::new(Representation::Cppn, Some(ConstraintMethod::Scale), Environment::Soil),
    };
    if let Some(env) = context.env {
        if env != config.environment {
            config.medium = None;
        }
        config.environment = env;
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let genome = genome_from_json(&text, config.grid).map_err(Error::from)?;
    match genome {
        Genome::Cppn(_) => {
            config.representation = Representation::Cppn;
            if let Some(c) = context.constraint {
                config.constraint_method = Some(c.into());
            } else if config.constraint_method.is_none() {
                config.constraint_method = Some(ConstraintMethod::Scale);
            }
        }
        Genome::Bezier(_) => {
            config.representation = Representation::Bezier;
            config.constraint_method = None;
        }
    }
    config.validate()?;
    Ok((genome, config))
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<(), Failure> {
    let (genome, config) = load_genome(&args.genome, &args.context)?;
    let grid = decode(&genome, &config);
    let (fitness, trace) = evaluate(&grid, &config.rig, &StepTrajectory::default(), &config.medium()).map_err(Error::from)?;
    if let Some(path) = &args.trace {
        let bytes = torque_trace_csv(&trace)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    }
    let report = EvaluationReport {
        fitness,
        mean_torque: trace.mean(),
        occupancy_percentage: grid.occupancy_percentage(),
        voxels: grid.occupied().count(),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    Ok(())
}

fn export_mesh(args: ExportArgs) -> Result<(), Failure> {
    if args.stl.is_none() && args.obj.is_none() {
        return Err(Failure::Usage("export-mesh needs --stl and/or --obj".into()));
    }
    let (genome, config) = load_genome(&args.genome, &args.context)?;
    let grid = decode(&genome, &config);
    let mut mesh = voxel_to_mesh(&grid).map_err(Error::from)?;
    let translation = match args.translate.as_deref() {
        Some([x, y, z]) => [*x, *y, *z],
        Some(_) => return Err(Failure::Usage("--translate takes three values: x,y,z".into())),
        None => [0.0; 3],
    };
    let axis = match args.axis {
        AxisArg::X => [1.0, 0.0, 0.0],
        AxisArg::Y => [0.0, 1.0, 0.0],
        AxisArg::Z => [0.0, 0.0, 1.0],
    };
    if args.scale != 1.0 || args.angle != 0.0 || translation != [0.0; 3] {
        mesh = mesh
            .transform([args.scale; 3], axis, args.angle.to_radians(), translation)
            .map_err(|e| Failure::Usage(format!("invalid transform: {e}")))?;
    }
    if let Some(path) = &args.stl {
        let n = write_stl(&mesh, path).map_err(Error::from)?;
        println!("wrote {} ({n} bytes, {} triangles)", path.display(), mesh.triangle_count());
    }
    if let Some(path) = &args.obj {
        write_obj(&mesh, path).map_err(Error::from)?;
        println!("wrote {} ({} vertices, {} triangles)", path.display(), mesh.vertex_count(), mesh.triangle_count());
    }
    Ok(())
}
