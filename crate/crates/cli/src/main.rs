//! `diracsea`: batch front end for the Dirac-sea laboratory.
//!
//! ```text
//! diracsea <fluct|fluct-sweep|evolve|ensemble|measure|check>
//!     [--config PATH] [--seed N] [--out DIR] [--workers N] [--format csv|json]
//! ```
//!
//! Exit codes: 0 ok, 1 numerical or acceptance failure, 2 usage or
//! configuration error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diracsea::Exec;

use config::{Format, ScenarioConfig, ScenarioKind};
use run::{Context, Failure};

#[derive(Parser)]
#[command(name = "diracsea", version, about = "Dirac-sea pilot-wave laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vacuum fermion-number statistics for one region.
    Fluct(Common),
    /// The same over a grid of radii and cut-offs.
    FluctSweep(Common),
    /// Evolve a state and export observables and grid fields.
    Evolve(Common),
    /// Trajectory ensemble with an equilibrium report.
    Ensemble(Common),
    /// Two-branch measurement scenario.
    Measure(Common),
    /// Run the invariant suite.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig, Failure> {
    let Some(path) = path else {
        return Ok(ScenarioConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn execute(kind: ScenarioKind, args: Common) -> Result<(), Failure> {
    let mut config = load(args.config.as_ref())?;
    if let Some(s) = config.scenario {
        if s != kind {
            return Err(Failure::Usage(format!(
                "config is for scenario `{}` but `{}` was requested",
                s.name(),
                kind.name()
            )));
        }
    }
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    let out = run::out_dir(args.out.as_deref(), config.output.dir.as_deref());
    let format = args.format.or(config.output.format).unwrap_or_else(|| run::default_format(kind));
    let seed = args.seed.or(config.seed).or(config.measure.as_ref().map(|m| m.seed)).unwrap_or(0);
    // The resolved config is what gets hashed and embedded; the output
    // directory is left out so that reruns elsewhere are byte-identical.
    config.scenario = Some(kind);
    config.seed = Some(seed);
    config.output.dir = None;
    config.output.format = Some(format);
    let hash = run::config_hash(&config);
    let ctx = Context { kind, config, out, format, seed, hash, exec: Exec::Parallel };
    let written = run::run(&ctx)?;
    println!("{}", run::display(&written));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Fluct(a) => (ScenarioKind::Fluct, a),
        Command::FluctSweep(a) => (ScenarioKind::FluctSweep, a),
        Command::Evolve(a) => (ScenarioKind::Evolve, a),
        Command::Ensemble(a) => (ScenarioKind::Ensemble, a),
        Command::Measure(a) => (ScenarioKind::Measure, a),
        Command::Check(a) => (ScenarioKind::Check, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
