//! Batch runner: `peclet-lab <experiment> --config run.json`.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 numerical failure (outputs
//! computed before the failure are still written).

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Experiment, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "peclet-lab",
    version,
    about = "Run enhanced-dissipation experiments on shear flows"
)]
struct Cli {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single viscosity instead of the configured list.
    #[arg(long)]
    nu: Option<f64>,
    /// Run a single wavenumber instead of the configured list.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<i64>,
    /// Leave the wall-clock time out of results.csv.
    #[arg(long)]
    no_timestamp: bool,
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&cli.config)?;
    cfg.apply(&Overrides {
        nu: cli.nu,
        k: cli.k,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out.clone(),
    });
    cfg.validate(cli.experiment)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: cannot start {} workers: {e}", cfg.workers);
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let artifacts = match pool.install(|| experiments::run(cli.experiment, &cfg)) {
        Ok(a) => a,
        // profile construction fails before any work is done
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let prov = output::Provenance {
        experiment: cli.experiment.name(),
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        timestamp: !cli.no_timestamp,
    };
    if let Err(e) = output::write(&cfg.out, &prov, &artifacts) {
        eprintln!("output error: {e:#}");
        return ExitCode::from(NUMERICAL_ERROR);
    }
    if let Some(e) = &artifacts.failure {
        eprintln!("numerical failure: {e}");
        return ExitCode::from(NUMERICAL_ERROR);
    }
    println!(
        "{}: {} rows written to {}",
        prov.experiment,
        artifacts.rows.len(),
        cfg.out.display()
    );
    ExitCode::SUCCESS
}
