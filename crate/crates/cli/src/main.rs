use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wpl_cli::config::{ExperimentConfig, ExperimentKind};
use wpl_cli::report::{read_points, write_points};
use wpl_cli::run::Runner;
use wpl_cli::CliError;
use wpl_core::diagnostics::{extract_level_set, hausdorff, LevelInterval};
use wpl_core::energy::{energy_report, PenaltyConfig};
use wpl_core::grid::read_snapshot;

#[derive(Parser)]
#[command(name = "wpl", version, about = "Phase-field Willmore experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run any experiment config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep config that has a [flow] section.
    Flow {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an `etheta` config.
    Etheta {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a `topo` config.
    Topo {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the energy report of a field snapshot as JSON.
    Energy { snapshot: PathBuf },
    /// Write the level cloud `u^{-1}([lo, hi])` of a snapshot as CSV.
    Levelset {
        snapshot: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff distance between two point CSV files.
    Hausdorff { a: PathBuf, b: PathBuf },
}

fn run_config(config: PathBuf, out: Option<PathBuf>, want: Option<ExperimentKind>) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&config)?;
    match want {
        Some(ExperimentKind::Sweep) if cfg.flow.is_none() => {
            return Err(CliError::Config { line: 0, key: "flow".into(), msg: "config has no [flow] section".into() });
        }
        Some(k) if k != ExperimentKind::Sweep && k != cfg.kind => {
            return Err(CliError::Config { line: 0, key: "experiment.kind".into(), msg: format!("expected {k:?}, found {:?}", cfg.kind) });
        }
        _ => {}
    }
    let runner = Runner::new(None);
    let dir = match out {
        Some(d) => d,
        None => runner.output_dir(&cfg),
    };
    let mut cfg = cfg;
    cfg.output_dir = Some(dir.clone());
    let report = runner.run_config(&cfg)?;
    for f in &report.failures {
        eprintln!("eps = {}: {}", f.eps, f.error);
    }
    println!("{}", dir.display());
    if report.rows.is_empty() && !report.failures.is_empty() {
        return Err(CliError::Runtime("every eps failed".into()));
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run { config, out } => run_config(config, out, None),
        Cmd::Flow { config, out } => run_config(config, out, Some(ExperimentKind::Sweep)),
        Cmd::Etheta { config, out } => run_config(config, out, Some(ExperimentKind::ETheta)),
        Cmd::Topo { config, out } => run_config(config, out, Some(ExperimentKind::Topo)),
        Cmd::Energy { snapshot } => {
            let f = read_snapshot(&snapshot)?;
            let r = energy_report(&f, &PenaltyConfig::none());
            println!("{}", serde_json::to_string_pretty(&r).map_err(|e| CliError::Runtime(e.to_string()))?);
            Ok(())
        }
        Cmd::Levelset { snapshot, lo, hi, out } => {
            let interval = LevelInterval::new(lo, hi).map_err(|e| CliError::Input(e.to_string()))?;
            let f = read_snapshot(&snapshot)?;
            let cloud = extract_level_set(&f, interval);
            let out = out.unwrap_or_else(|| snapshot.with_extension("levelset.csv"));
            write_points(&out, &cloud, f.grid().ndim())?;
            println!("{} points -> {}", cloud.len(), out.display());
            Ok(())
        }
        Cmd::Hausdorff { a, b } => {
            let (a, b) = (read_points(&a)?, read_points(&b)?);
            println!("{}", hausdorff(&a, &b).map_err(|e| CliError::Input(e.to_string()))?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
