use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use turbulight_cli::{run_file, threads_from_env, CliError, Scenario};

/// Turbulent-channel quantum optics experiments.
///
/// Exit codes: 0 success, 1 I/O failure, 2 invalid config, 3 accuracy failure.
/// TURBULIGHT_THREADS sets the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "turbulight", version)]
struct Args {
    scenario: Scenario,
    /// JSON config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn setup_threads() -> Result<(), CliError> {
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::invalid("TURBULIGHT_THREADS", e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result =
        setup_threads().and_then(|()| run_file(args.scenario, &args.config, args.seed, args.out));
    match result {
        Ok(manifest) => {
            let dir = manifest
                .config
                .out_dir
                .as_deref()
                .unwrap_or_else(|| "out".as_ref());
            println!(
                "{}: wrote {} files to {} in {:.2} s",
                args.scenario.name(),
                manifest.outputs.len() + 1,
                dir.display(),
                manifest.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
