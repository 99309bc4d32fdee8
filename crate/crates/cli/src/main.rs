//! Command-line front end. Three subcommands: `build-model` learns and
//! stores a feasibility model, `run` executes a benchmark experiment into a
//! result directory, `report` regenerates the derived files of an existing
//! one. Exit codes: 0 on success, 1 for usage problems, 2 for failures at
//! runtime.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ttmpc_core::dist::TtDistribution;
use ttmpc_core::harness::{self, config::WorldKind, emit, RunConfig};
use ttmpc_core::io;
use ttmpc_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "ttmpc",
    about = "Feasibility-aware sampling MPC benchmarks on tensor-train models",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a feasibility model for a world and write it with its sidecar
    BuildModel(BuildModelArgs),
    /// Run closed-loop benchmark trials and write a result directory
    Run(RunArgs),
    /// Regenerate summary, table, and chart from an existing result directory
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigSource {
    /// World to use with its built-in defaults: pngrid, sphere, sinusoid, online
    #[arg(long)]
    world: Option<String>,
    /// Config file; overrides --world
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BuildModelArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Directory for <world>.ttm and <world>.ttm.meta.toml
    #[arg(long)]
    out: PathBuf,
    /// Store the model as plain text instead of binary
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Methods to run (comma separated): mppi, proj_mppi, tt_poe_mppi
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Sample counts to sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    samples: Vec<usize>,
    /// Trials per (method, sample count) cell
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; fixes scenarios and controller noise
    #[arg(long)]
    seed: Option<u64>,
    /// Prebuilt model file from build-model (static worlds only)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Result directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Result directory written by run
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Failures while executing a resolved plan; bad inputs stay usage errors.
fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::Config(_) | CoreError::InvalidArgument(_) => usage(e),
        _ => runtime(e),
    }
}

fn resolve_config(source: &ConfigSource) -> Result<RunConfig, CliError> {
    let cfg = match (&source.config, &source.world) {
        (Some(path), _) => RunConfig::load(path).map_err(usage)?,
        (None, Some(world)) => RunConfig::default_for(WorldKind::parse(world).map_err(usage)?),
        (None, None) => {
            return Err(CliError::Usage(
                "pass --world <name> or --config <file>".into(),
            ))
        }
    };
    if let (Some(path), Some(world)) = (&source.config, &source.world) {
        if cfg.world.kind.name() != world {
            return Err(CliError::Usage(format!(
                "--world {world} conflicts with {} from {}",
                cfg.world.kind.name(),
                path.display()
            )));
        }
    }
    Ok(cfg)
}

fn build_model(args: &BuildModelArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&args.source)?;
    let bench = harness::base_world(&cfg);
    let built = harness::build_feasibility(bench.as_world(), &cfg.learn).map_err(classify)?;
    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    let ext = if args.text { "ttmt" } else { "ttm" };
    let path = args.out.join(format!("{}.{ext}", cfg.world.kind.name()));
    if args.text {
        io::write_model_text(built.dist.model(), &path).map_err(runtime)?;
    } else {
        io::write_model_binary(built.dist.model(), &path).map_err(runtime)?;
    }
    let meta = io::ModelMeta::from_grid(
        cfg.world.kind.name(),
        cfg.world.kind.state_dim(),
        cfg.learn.eps,
        cfg.learn.max_rank,
        built.seconds,
        built.dist.grid(),
    );
    io::write_meta(&meta, &path).map_err(runtime)?;
    println!(
        "wrote {} (ranks {:?}, built in {:.2}s)",
        path.display(),
        built.dist.model().ranks(),
        built.seconds
    );
    Ok(())
}

fn load_model(path: &Path, cfg: &RunConfig) -> Result<TtDistribution, CliError> {
    if cfg.world.kind == WorldKind::Online {
        return Err(CliError::Usage(
            "the online world rebuilds its model per trial; --model does not apply".into(),
        ));
    }
    let meta = io::read_meta(path).map_err(runtime)?;
    if meta.world != cfg.world.kind.name() {
        return Err(CliError::Usage(format!(
            "model was built for {}, run wants {}",
            meta.world,
            cfg.world.kind.name()
        )));
    }
    let model = io::read_model(path).map_err(runtime)?;
    let grid = meta.grid().map_err(runtime)?;
    TtDistribution::new(model, grid).map_err(runtime)
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = resolve_config(&args.source)?;
    if !args.method.is_empty() {
        cfg.experiment.methods = args.method.clone();
    }
    if !args.samples.is_empty() {
        cfg.experiment.samples = args.samples.clone();
    }
    if let Some(t) = args.trials {
        cfg.experiment.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.experiment.seed = s;
    }
    cfg.validate().map_err(usage)?;
    let preloaded = match &args.model {
        Some(path) => Some(load_model(path, &cfg)?),
        None => None,
    };
    let result = harness::run_experiment(&cfg, preloaded).map_err(classify)?;
    emit::write_outputs(&result, &args.out).map_err(runtime)?;
    print!("{}", emit::table_text(&harness::summarize(&result.records)));
    println!("results in {}", args.out.display());
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), CliError> {
    let result = emit::report(&args.out).map_err(runtime)?;
    print!("{}", emit::table_text(&harness::summarize(&result.records)));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes, not usage errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.cmd {
        Cmd::BuildModel(args) => build_model(args),
        Cmd::Run(args) => run(args),
        Cmd::Report(args) => report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}
