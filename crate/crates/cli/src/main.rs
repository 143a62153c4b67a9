//! `ffrestrict`: batch runner for the restriction, incidence and sum-product
//! experiments. Every command prints one JSON report.
//!
//! Exit codes: 0 success, 1 a validator failed (the report is still written),
//! 2 usage or configuration error (a JSON error goes to stderr).

mod commands;
mod config;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffrestrict::estimator::Caps;
use ffrestrict::{Exec, FieldCtx};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] ffrestrict::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Lib(_) => "config",
            CliError::Io { .. } => "io",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ffrestrict", version, about = "Finite-field restriction and incidence experiments")]
pub struct Cli {
    /// Field as `p`, `p^k` or `p^k/c_0,...,c_k`.
    #[arg(long, global = true, default_value = "7")]
    field: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 selects the sequential path.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file overriding the constant caps.
    #[arg(long, global = true)]
    caps_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fourier dimension, kernel closed form, Gauss sums, pseudo-conformal identity.
    Paraboloid(ParaboloidArgs),
    /// Incidence counts, the trivial bound, quadruple energy and the energy-to-incidence reduction.
    Incidence(IncidenceArgs),
    /// Grid extraction and subfield detection on a rich point-line configuration.
    Structure(StructureArgs),
    /// Extension-ratio searches, sharpness, exponent algebra and sweeps.
    Estimate(EstimateArgs),
    /// Dyadic level and regular slice decomposition of a function on F³.
    Regular(RegularArgs),
    /// Emit planted or random instances.
    Generate(GenerateArgs),
    /// Run a validator suite on the field.
    Verify(VerifyArgs),
    /// Run a JSON or key=value experiment config.
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParaboloidOp {
    Fdim,
    Kernel,
    Gauss,
    Pseudoconformal,
}

#[derive(Args, Debug, Serialize)]
pub struct ParaboloidArgs {
    #[arg(long, value_enum, default_value = "fdim")]
    pub op: ParaboloidOp,
    /// Random slices for `pseudoconformal`.
    #[arg(long, default_value_t = 20)]
    pub slices: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncidenceOp {
    Count,
    Bound,
    Energy,
    Reduction,
}

#[derive(Args, Debug, Serialize)]
pub struct IncidenceArgs {
    #[arg(long, value_enum, default_value = "count")]
    pub op: IncidenceOp,
    /// Point-line config JSON. Without it a random config is drawn.
    #[arg(long)]
    pub config_file: Option<PathBuf>,
    /// Random points (or paraboloid points for energy/reduction).
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 20)]
    pub lines: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct StructureArgs {
    /// Point-line config JSON. Without it the planted GF(81) grid is used.
    #[arg(long)]
    pub config_file: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub loss_factor: f64,
    /// Pair evaluations allowed in the bush search.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateOp {
    Search,
    Sharpness,
    Algebra,
    LocalSweep,
    MtSt,
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[arg(long, value_enum, default_value = "search")]
    pub op: EstimateOp,
    /// Source exponent, exact `a/b`.
    #[arg(long, default_value = "2")]
    pub p: String,
    /// Target exponent, exact `a/b`.
    #[arg(long, default_value = "4")]
    pub q: String,
    /// `all` or a comma list of constant, point, subspace, galilean, slices, grids, random, ascent.
    #[arg(long, default_value = "all")]
    pub family: String,
    #[arg(long, default_value_t = 64)]
    pub iters: usize,
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
    /// Primes for `local-sweep`.
    #[arg(long, value_delimiter = ',', default_value = "3,7,11,19")]
    pub primes: Vec<u32>,
}

#[derive(Args, Debug, Serialize)]
pub struct RegularArgs {
    /// GridFn JSON on F³. Without it a random function is drawn.
    #[arg(long)]
    pub config_file: Option<PathBuf>,
    /// Support density of the random function.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// Also run the regular L² bound on every piece.
    #[arg(long)]
    pub bound: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerateKind {
    SubfieldGrid,
    RegularSet,
    RandomPoints,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: GenerateKind,
    /// Order of G for `subfield-grid`; defaults to the largest proper subfield.
    #[arg(long)]
    pub subfield_order: Option<u32>,
    /// Points for `random-points`.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Lines for `random-points`.
    #[arg(long, default_value_t = 0)]
    pub lines: usize,
    /// Nonempty slices for `regular-set`.
    #[arg(long, default_value_t = 1)]
    pub slices: usize,
    /// Points per slice for `regular-set`.
    #[arg(long, default_value_t = 1)]
    pub slice_size: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Core,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "core")]
    pub suite: Suite,
    /// Random instances per randomized validator.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Shared state for one command.
pub struct Ctx {
    pub field: Arc<FieldCtx>,
    pub seed: u64,
    pub exec: Exec,
    pub caps: Caps,
    timings: BTreeMap<String, f64>,
}

impl Ctx {
    /// Runs `f` and records its wall time under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce(&Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

/// A command's result: the report body and whether every validator passed.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read_file(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn exec_for(threads: Option<usize>) -> CliResult<Exec> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // A second build in the same process (run inside tests) is harmless.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
        None => Ok(Exec::Parallel),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Paraboloid(_) => "paraboloid",
        Command::Incidence(_) => "incidence",
        Command::Structure(_) => "structure",
        Command::Estimate(_) => "estimate",
        Command::Regular(_) => "regular",
        Command::Generate(_) => "generate",
        Command::Verify(_) => "verify",
        Command::Run(_) => "run",
    }
}

fn command_args(c: &Command) -> Value {
    match c {
        Command::Paraboloid(a) => to_value(a),
        Command::Incidence(a) => to_value(a),
        Command::Structure(a) => to_value(a),
        Command::Estimate(a) => to_value(a),
        Command::Regular(a) => to_value(a),
        Command::Generate(a) => to_value(a),
        Command::Verify(a) => to_value(a),
        Command::Run(a) => to_value(a),
    }
}

fn execute(cli: Cli) -> CliResult<bool> {
    if let Command::Run(r) = &cli.command {
        let cfg = config::ExperimentConfig::parse(&read_file(&r.config)?)?;
        let inner = Cli::try_parse_from(cfg.to_args()).map_err(|e| CliError::Usage(e.to_string()))?;
        return execute(inner);
    }
    let field = Arc::new(FieldCtx::parse(&cli.field)?);
    let caps = match &cli.caps_file {
        Some(p) => read_json(p)?,
        None => Caps::default(),
    };
    let mut ctx = Ctx { field, seed: cli.seed, exec: exec_for(cli.threads)?, caps, timings: BTreeMap::new() };
    let generated = matches!(cli.command, Command::Generate(_));
    let outcome = match &cli.command {
        Command::Paraboloid(a) => commands::paraboloid(&mut ctx, a)?,
        Command::Incidence(a) => commands::incidence(&mut ctx, a)?,
        Command::Structure(a) => commands::structure(&mut ctx, a)?,
        Command::Estimate(a) => commands::estimate(&mut ctx, a)?,
        Command::Regular(a) => commands::regular(&mut ctx, a)?,
        Command::Generate(a) => commands::generate(&mut ctx, a)?,
        Command::Verify(a) => verify::verify(&mut ctx, a)?,
        Command::Run(_) => unreachable!("handled above"),
    };
    // Generated instances are written bare so other commands can read them back.
    let report = if generated {
        outcome.result
    } else {
        json!({
            "command": command_name(&cli.command),
            "version": env!("CARGO_PKG_VERSION"),
            "config": {
                "field": ctx.field.description(),
                "seed": ctx.seed,
                "threads": cli.threads,
                "caps": to_value(&ctx.caps),
                "args": command_args(&cli.command),
            },
            "passed": outcome.passed,
            "result": outcome.result,
            "timings": ctx.timings,
        })
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() })?,
        None => print!("{text}"),
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(2)
        }
    }
}
