//! Reproducible experiment runner for the `turbulight` library.
//!
//! A run reads one JSON config, validates it completely, executes a scenario
//! and writes CSV/JSON outputs plus a `manifest.json` that records everything
//! needed to reproduce them.

pub mod config;
pub mod error;
pub mod manifest;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

pub use config::{ExperimentConfig, Run, Scenario};
pub use error::{CliError, CliResult};
pub use manifest::{Outputs, RunManifest, MANIFEST_FILE};

/// Thread-count override for the worker pool.
pub const THREADS_ENV: &str = "TURBULIGHT_THREADS";

/// Loads the config at `config_path` and runs `scenario`.
pub fn run_file(
    scenario: Scenario,
    config_path: &Path,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> CliResult<RunManifest> {
    run_config(
        ExperimentConfig::load(config_path)?,
        scenario,
        seed,
        out_dir,
    )
}

pub fn run_config(
    cfg: ExperimentConfig,
    scenario: Scenario,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> CliResult<RunManifest> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let run = Run::resolve(cfg, scenario, seed, out_dir)?;
    let mut out = Outputs::create(&run.out_dir)?;
    let derived = scenarios::execute(&run, &mut out)?;
    let manifest = RunManifest::new(
        &run,
        derived,
        out.files().to_vec(),
        started,
        clock.elapsed(),
    );
    out.write_json(MANIFEST_FILE, &manifest)?;
    Ok(manifest)
}

/// Parses the thread-count override; `None` when unset.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::invalid(
                THREADS_ENV,
                format!("must be a positive integer, got `{v}`"),
            )),
        },
    }
}
