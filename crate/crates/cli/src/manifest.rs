//! Run provenance, and the output directory writer that feeds it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};
use turbulight::{homodyne, nonclassicality, pdtc, phase_space, reconstruct, seed, QuadOptions};

use crate::config::{ExperimentConfig, Run, Scenario};
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes files under one directory and remembers their names in order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// `name` may contain `/`; parent directories are created.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub seed_rule: String,
    /// How the scenario divides the master seed among its random streams.
    pub streams: String,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    /// Every numerical tolerance and limit that can affect the outputs.
    pub tolerances: Map<String, Value>,
    /// Values chosen at run time, such as the Fourier order after the noise gate.
    pub derived: Value,
    pub outputs: Vec<String>,
    /// The config with all defaults filled in; feeding this file back as the
    /// config reproduces every other output bit for bit.
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(
        run: &Run,
        derived: Value,
        outputs: Vec<String>,
        started: SystemTime,
        elapsed: Duration,
    ) -> Self {
        RunManifest {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: run.scenario,
            seed: run.seed,
            seed_rule: seed::SEED_RULE.to_string(),
            streams: streams(run.scenario).to_string(),
            threads: rayon::current_num_threads(),
            started_unix_seconds: started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_clock_seconds: elapsed.as_secs_f64(),
            tolerances: tolerances(),
            derived,
            outputs,
            config: run.echo.clone(),
        }
    }
}

fn streams(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::Fig2 | Scenario::Mandel | Scenario::Bound => "none (deterministic quadrature)",
        Scenario::Fig3 | Scenario::Reconstruct => {
            "record set for lattice point k (position in the full (m, n) listing, m outermost) uses derive_seed(seed, k)"
        }
        Scenario::Monitor => {
            "batch b uses s_b = derive_seed(seed, b); its lattice point k uses derive_seed(derive_seed(s_b, 0), k); \
             its LO phase j of the moment run uses derive_seed(derive_seed(s_b, 1), j)"
        }
    }
}

pub fn tolerances() -> Map<String, Value> {
    let q = QuadOptions::default();
    let v = json!({
        "quadrature_abs_tol": q.abs_tol,
        "quadrature_max_depth": q.max_depth,
        "quadrature_initial_splits": q.initial_splits,
        "quadrature_order": q.order,
        "normalisation_quadrature_abs_tol": pdtc::tight_tol::<f64>(),
        "pdtc_box_sigmas": pdtc::BOX_SIGMAS,
        "pdtc_closed_form_mass_limit": pdtc::CLOSED_FORM_MASS_LIMIT,
        "pdtc_min_sampling_acceptance": pdtc::MIN_ACCEPTANCE,
        "pdtc_disc_mass_warning": pdtc::DISC_MASS_WARNING,
        "pdtc_clip_limit": pdtc::CLIP_LIMIT,
        "output_p_transmission_floor": phase_space::TRANSMISSION_FLOOR,
        "laplace_sigmas": phase_space::LAPLACE_SIGMAS,
        "homodyne_phase_tolerance": homodyne::PHASE_TOLERANCE,
        "reconstruct_noise_gate": reconstruct::NOISE_GATE,
        "reconstruct_residual_gate": reconstruct::RESIDUAL_GATE,
        "reconstruct_default_m_max": reconstruct::DEFAULT_M_MAX,
        "bound_cross_check": nonclassicality::BOUND_CROSS_CHECK,
        "lambda_classical": nonclassicality::LAMBDA_CLASSICAL,
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}
