use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fogmimo::acceptance::{self, KNOWN_GAPS};
use fogmimo::config::{parse_config_with, parse_sweep_flag, ConfigError, Measure, SweepSpec, SystemConfig};
use fogmimo::exit;
use fogmimo::output::emit;
use fogmimo::run::{run_grid, RunError};

#[derive(Parser)]
#[command(name = "fogmimo", version, about = "Fog massive MIMO and cellular massive MIMO analytics and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and semi-analytic fog quantities.
    FogAnalytic(RunArgs),
    /// Closed-form cellular quantities.
    CellAnalytic(RunArgs),
    /// Monte Carlo trials of the fog system.
    FogSim(RunArgs),
    /// Monte Carlo trials of the cellular system.
    CellSim(RunArgs),
    /// Every measure listed under `[sweep] measures`, over the sweep grid.
    Sweep(RunArgs),
    /// Runs the acceptance suite and prints one line per criterion.
    Validate {
        /// Run only these criteria (repeatable).
        #[arg(long, value_name = "ID")]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path; a manifest is written beside it. Prints to stdout
    /// when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep axis and values, replacing the configured axis.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,
    /// Scales SE outputs by the pilot-overhead factor 1 − L/T.
    #[arg(long, value_name = "T")]
    overhead: Option<usize>,
}

fn load(args: &RunArgs) -> Result<SystemConfig, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Io(format!("{}: {e}", args.config.display())))?;
    let mut overrides = args.set.clone();
    if let Some(t) = args.trials {
        overrides.push(format!("trials={t}"));
    }
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = args.overhead {
        overrides.push(format!("overhead_slots={t}"));
    }
    let mut cfg = parse_config_with(&text, &overrides)?;
    if let Some(flag) = &args.sweep {
        let (axis, values) = parse_sweep_flag(flag)?;
        let base = cfg.sweep.take();
        let series = base.as_ref().and_then(|s| s.series.clone()).filter(|(k, _)| *k != axis);
        let measures = base.map(|s| s.measures).unwrap_or_default();
        let spec = SweepSpec { axis, values, series, measures };
        for (series, value) in spec.points() {
            let mut point = cfg.clone();
            if let (Some((key, _)), Some(v)) = (&spec.series, series) {
                point = point.with_value(key, v)?;
            }
            point.with_value(&spec.axis, value)?;
        }
        cfg.sweep = Some(spec);
    }
    Ok(cfg)
}

fn run(name: &str, measure: Option<Measure>, args: &RunArgs) -> Result<u64, RunError> {
    let cfg = load(args)?;
    let measures = match measure {
        Some(m) => vec![m],
        None => {
            let sweep = cfg.sweep.as_ref().ok_or_else(|| ConfigError::Invalid("sweep: no `[sweep]` table or --sweep flag".into()))?;
            if sweep.measures.is_empty() {
                return Err(ConfigError::Invalid("sweep: `measures` is empty".into()).into());
            }
            sweep.measures.clone()
        }
    };
    let table = run_grid(&cfg, &measures, cfg.sweep.as_ref())?;
    emit(&table, &cfg, name, args.out.as_deref())?;
    Ok(table.numerical_errors)
}

fn validate(only: &[u8]) -> u8 {
    let ids = if only.is_empty() { acceptance::ids() } else { only.to_vec() };
    let mut failed = false;
    for id in ids {
        match acceptance::run_criterion(id) {
            Some(r) => {
                println!("{}", r.line());
                failed |= !r.passed;
                if let Some((_, note)) = KNOWN_GAPS.iter().find(|g| g.0 == id).filter(|_| !r.passed) {
                    println!("     known gap: {note}");
                }
            }
            None => {
                eprintln!("error: no criterion {id}");
                return exit::CONFIG;
            }
        }
    }
    if failed {
        exit::ACCEPTANCE
    } else {
        exit::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, measure, args) = match &cli.command {
        Command::Validate { only } => return ExitCode::from(validate(only)),
        Command::FogAnalytic(a) => ("fog-analytic", Some(Measure::FogAnalytic), a),
        Command::CellAnalytic(a) => ("cell-analytic", Some(Measure::CellAnalytic), a),
        Command::FogSim(a) => ("fog-sim", Some(Measure::FogSim), a),
        Command::CellSim(a) => ("cell-sim", Some(Measure::CellSim), a),
        Command::Sweep(a) => ("sweep", None, a),
    };
    let code = match run(name, measure, args) {
        Ok(0) => exit::SUCCESS,
        Ok(n) => {
            eprintln!("error: {n} numerical errors during the trials");
            exit::NUMERICAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => exit::CONFIG,
                RunError::Numerical(_) => exit::NUMERICAL,
                RunError::Io(_) => exit::IO,
            }
        }
    };
    ExitCode::from(code)
}
