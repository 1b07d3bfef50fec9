//! Experiment configuration: a single JSON document, validated in full before
//! any computation starts.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use turbulight::homodyne::{records_from_csv, LocalOscillator};
use turbulight::reconstruct::{noise_gate_m_max, NOISE_GATE};
use turbulight::{
    classicality_bound, AnalyticP, HomodyneRecord, Lattice, ModelParams64, MomentMatrix64, Pdtc64,
    PdtcRecord, ReconstructionPlan, TurbulenceModelParams, C64,
};

use crate::error::{CliError, CliResult};

pub const FIG2_MODEL: (f64, f64, f64, f64) = (0.3, 0.1, 0.14, 0.01);
pub const FIG3_MODEL: (f64, f64, f64, f64) = (0.9, 0.2, 0.2, 0.01);
pub const FIG2_N_TH: f64 = 1.11;
pub const FIG2_GAMMAS: [f64; 3] = [1.0, 7.0, 20.0];
pub const FIG2_HALF_WIDTH: f64 = 6.0;
pub const FIG2_POINTS: usize = 1201;
/// Probe amplitude for the reconstruction scenarios. Large enough that the
/// full `m_max = 20` lattice passes the noise gate at 5×10³ events.
pub const PROBE_GAMMA: f64 = 20.0;
pub const N_EVENTS: usize = 5000;
pub const M_MAX: usize = 20;
pub const FIG3_SLICES: [f64; 2] = [0.0, 0.1];
pub const SLICE_POINTS: usize = 201;
pub const MAP_POINTS: usize = 201;
pub const LO_AMPLITUDE: f64 = 100.0;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const BOUND_PROBE_LARGE: f64 = 20.0;

/// Stored homodyne records keyed by lattice index `(m, n)`.
pub type RecordSets = HashMap<(i32, i32), Vec<HomodyneRecord<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig2,
    Fig3,
    Reconstruct,
    Mandel,
    Bound,
    Monitor,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Reconstruct => "reconstruct",
            Scenario::Mandel => "mandel",
            Scenario::Bound => "bound",
            Scenario::Monitor => "monitor",
        }
    }

    fn fields(self) -> &'static [&'static str] {
        match self {
            Scenario::Fig2 => &[
                "model",
                "channel",
                "spats_n_th",
                "gammas",
                "attenuation_t",
                "window_half_width",
                "window_points",
            ],
            Scenario::Fig3 => &[
                "model",
                "channel",
                "probe_gamma",
                "n_events",
                "m_max",
                "slices",
                "slice_points",
                "lo_amplitude",
                "simulate_from",
            ],
            Scenario::Reconstruct => &[
                "model",
                "channel",
                "probe_gamma",
                "n_events",
                "m_max",
                "grid",
                "lo_amplitude",
                "simulate_from",
                "records_in",
                "write_records",
            ],
            Scenario::Mandel => &["model", "channel", "input"],
            Scenario::Bound => &["model", "gammas"],
            Scenario::Monitor => &[
                "batches",
                "probe_gamma",
                "n_events",
                "m_max",
                "slice_points",
                "lo_amplitude",
                "simulate_from",
            ],
        }
    }
}

/// Which distribution the homodyne simulation draws `T` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationSource {
    /// A `model` channel is replaced by its moment-matched normal approximation;
    /// other channels are used as given.
    #[default]
    NormalApproximation,
    /// Draw from the configured channel itself.
    Model,
}

/// Input state of the `mandel` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MandelInput {
    /// Only `Q` and `⟨n⟩` are given.
    Stats {
        q_in: f64,
        mean_n: f64,
    },
    Coherent {
        gamma: [f64; 2],
    },
    DisplacedSpats {
        n_th: f64,
        gamma: [f64; 2],
    },
}

/// The config document. Every field is optional; the scenario supplies
/// defaults, and fields foreign to the scenario are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<PdtcRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_gamma: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spats_n_th: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_events: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Lattice<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate_from: Option<SimulationSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<MandelInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<Vec<PdtcRecord>>,
    /// Directory of per-β record CSVs to estimate from instead of simulating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records_in: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_records: Option<bool>,
}

impl ExperimentConfig {
    /// Parses a config document. A run manifest is accepted too: its `config`
    /// member is used.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::invalid("<document>", e.to_string()))?;
        if let Some(inner) = value.as_object_mut().and_then(|o| o.remove("config")) {
            value = inner;
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "<document>".to_string()
            } else {
                path
            };
            CliError::invalid(field, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}

/// File name of the record set for lattice point `(m, n)`.
pub fn record_file_name(m: i32, n: i32) -> String {
    format!("beta_m{m}_n{n}.csv")
}

#[derive(Debug, Clone)]
pub struct Fig2Plan {
    pub channel: Pdtc64,
    pub n_th: f64,
    pub gammas: Vec<f64>,
    pub attenuation_t: f64,
    pub half_width: f64,
    pub points: usize,
}

/// Shared settings of the scenarios that simulate homodyne data.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    /// The PDTC that generates the data, which is also the reference truth.
    pub source: Pdtc64,
    pub gamma: C64,
    pub n_events: usize,
    /// Order actually used after the noise gate.
    pub m_max: usize,
    pub lo_amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct Fig3Plan {
    pub sim: SimulationPlan,
    pub slices: Vec<f64>,
    pub slice_points: usize,
}

#[derive(Debug, Clone)]
pub struct MapPlan {
    pub sim: SimulationPlan,
    pub grid: Lattice<f64>,
    pub records: Option<RecordSets>,
    pub write_records: bool,
}

#[derive(Debug, Clone)]
pub struct MandelPlan {
    pub channel: Pdtc64,
    pub input: MomentMatrix64,
}

#[derive(Debug, Clone)]
pub struct BoundPlan {
    pub params: ModelParams64,
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MonitorPlan {
    /// Simulation source per batch.
    pub batches: Vec<Pdtc64>,
    pub gamma: C64,
    pub n_events: usize,
    pub m_max: usize,
    pub slice_points: usize,
    pub lo_amplitude: f64,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Fig2(Fig2Plan),
    Fig3(Fig3Plan),
    Reconstruct(MapPlan),
    Mandel(MandelPlan),
    Bound(BoundPlan),
    Monitor(MonitorPlan),
}

/// A validated run: the typed plan plus the config echo with every default
/// filled in.
#[derive(Debug, Clone)]
pub struct Run {
    pub scenario: Scenario,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub echo: ExperimentConfig,
    pub plan: Plan,
}

impl Run {
    /// Validates `cfg` for `scenario`. Command-line `seed` and `out_dir` take
    /// precedence over the document.
    pub fn resolve(
        cfg: ExperimentConfig,
        scenario: Scenario,
        seed: Option<u64>,
        out_dir: Option<PathBuf>,
    ) -> CliResult<Run> {
        if let Some(s) = cfg.scenario {
            if s != scenario {
                return Err(CliError::invalid(
                    "scenario",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        s.name(),
                        scenario.name()
                    ),
                ));
            }
        }
        reject_foreign_fields(&cfg, scenario)?;
        let mut echo = cfg.clone();
        echo.scenario = Some(scenario);
        let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
        echo.seed = Some(seed);
        let out_dir = out_dir
            .or(cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        echo.out_dir = Some(out_dir.clone());

        let plan = match scenario {
            Scenario::Fig2 => Plan::Fig2(fig2(&cfg, &mut echo)?),
            Scenario::Fig3 => Plan::Fig3(fig3(&cfg, &mut echo)?),
            Scenario::Reconstruct => Plan::Reconstruct(map(&cfg, &mut echo)?),
            Scenario::Mandel => Plan::Mandel(mandel(&cfg, &mut echo)?),
            Scenario::Bound => Plan::Bound(bound(&cfg, &mut echo)?),
            Scenario::Monitor => Plan::Monitor(monitor(&cfg, &mut echo)?),
        };
        Ok(Run {
            scenario,
            seed,
            out_dir,
            echo,
            plan,
        })
    }
}

fn reject_foreign_fields(cfg: &ExperimentConfig, scenario: Scenario) -> CliResult<()> {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let allowed = scenario.fields();
    for key in value.as_object().into_iter().flat_map(|o| o.keys()) {
        let common = matches!(key.as_str(), "scenario" | "seed" | "out_dir");
        if !common && !allowed.contains(&key.as_str()) {
            return Err(CliError::invalid(
                key.clone(),
                format!("not used by scenario `{}`", scenario.name()),
            ));
        }
    }
    Ok(())
}

fn model_params(tuple: (f64, f64, f64, f64)) -> ModelParams64 {
    TurbulenceModelParams::new(tuple.0, tuple.1, tuple.2, tuple.3)
        .expect("built-in parameters are valid")
}

/// `model` or `channel` (at most one), defaulting to the model `default`.
fn channel(
    cfg: &ExperimentConfig,
    echo: &mut ExperimentConfig,
    default: (f64, f64, f64, f64),
) -> CliResult<Pdtc64> {
    match (cfg.model, cfg.channel) {
        (Some(_), Some(_)) => Err(CliError::invalid(
            "channel",
            "give either `model` or `channel`, not both",
        )),
        (Some(p), None) => TurbulenceModelParams::new(p.theta_bar, p.sigma_theta, p.sigma_phi, p.s)
            .and_then(Pdtc64::model)
            .map_err(|e| CliError::at("model", e)),
        (None, Some(rec)) => Pdtc64::from_record(&rec).map_err(|e| CliError::at("channel", e)),
        (None, None) => {
            let p = model_params(default);
            echo.model = Some(p);
            Pdtc64::model(p).map_err(|e| CliError::at("model", e))
        }
    }
}

fn positive(field: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::invalid(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn at_least_one(field: &str, v: usize) -> CliResult<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::invalid(field, "must be >= 1"))
    }
}

fn complex_of(field: &str, v: [f64; 2]) -> CliResult<C64> {
    let z = Complex::new(v[0], v[1]);
    if !(z.norm_sqr() > 0.0 && z.norm_sqr().is_finite()) {
        return Err(CliError::invalid(field, "must be finite and non-zero"));
    }
    Ok(z)
}

fn fig2(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<Fig2Plan> {
    let channel = channel(cfg, echo, FIG2_MODEL)?;
    let n_th = positive("spats_n_th", cfg.spats_n_th.unwrap_or(FIG2_N_TH))?;
    let gammas = cfg.gammas.clone().unwrap_or_else(|| FIG2_GAMMAS.to_vec());
    if gammas.is_empty() {
        return Err(CliError::invalid("gammas", "must not be empty"));
    }
    for &g in &gammas {
        AnalyticP::displaced_spats(n_th, Complex::new(g, 0.0))
            .map_err(|e| CliError::at("gammas", e))?;
    }
    let attenuation_t = cfg.attenuation_t.unwrap_or((-FIG2_MODEL.0).exp());
    if !(attenuation_t > 0.0 && attenuation_t <= 1.0) {
        return Err(CliError::invalid("attenuation_t", "must lie in (0, 1]"));
    }
    let half_width = positive(
        "window_half_width",
        cfg.window_half_width.unwrap_or(FIG2_HALF_WIDTH),
    )?;
    let points = at_least_one("window_points", cfg.window_points.unwrap_or(FIG2_POINTS))?;
    echo.spats_n_th = Some(n_th);
    echo.gammas = Some(gammas.clone());
    echo.attenuation_t = Some(attenuation_t);
    echo.window_half_width = Some(half_width);
    echo.window_points = Some(points);
    Ok(Fig2Plan {
        channel,
        n_th,
        gammas,
        attenuation_t,
        half_width,
        points,
    })
}

/// The PDTC to draw homodyne data from.
fn simulation_source(channel: Pdtc64, from: SimulationSource, field: &str) -> CliResult<Pdtc64> {
    let source = match (from, channel) {
        (SimulationSource::NormalApproximation, Pdtc64::Model(_)) => Pdtc64::Gaussian(
            channel
                .normal_approximation()
                .map_err(|e| CliError::at(field, e))?,
        ),
        _ => channel,
    };
    source
        .check_sampling()
        .map_err(|e| CliError::at(field, e))?;
    Ok(source)
}

/// Probe, event count, gated order and LO amplitude; `n_events` is `None` when
/// the data come from files.
fn simulation(
    cfg: &ExperimentConfig,
    echo: &mut ExperimentConfig,
    source: Pdtc64,
    n_events: Option<usize>,
) -> CliResult<SimulationPlan> {
    let gamma_raw = cfg.probe_gamma.unwrap_or([PROBE_GAMMA, 0.0]);
    let gamma = complex_of("probe_gamma", gamma_raw)?;
    let n_events = match n_events {
        Some(n) => n,
        None => at_least_one("n_events", cfg.n_events.unwrap_or(N_EVENTS))?,
    };
    let requested = at_least_one("m_max", cfg.m_max.unwrap_or(M_MAX))?;
    let m_max =
        noise_gate_m_max(gamma, n_events, requested).map_err(|e| CliError::at("n_events", e))?;
    let lo_amplitude = cfg.lo_amplitude.unwrap_or(LO_AMPLITUDE);
    LocalOscillator::new(lo_amplitude, 0.0).map_err(|e| CliError::at("lo_amplitude", e))?;
    echo.probe_gamma = Some(gamma_raw);
    echo.m_max = Some(requested);
    echo.lo_amplitude = Some(lo_amplitude);
    echo.simulate_from = Some(cfg.simulate_from.unwrap_or_default());
    Ok(SimulationPlan {
        source,
        gamma,
        n_events,
        m_max,
        lo_amplitude,
    })
}

fn fig3(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<Fig3Plan> {
    let channel = channel(cfg, echo, FIG3_MODEL)?;
    let field = if cfg.channel.is_some() {
        "channel"
    } else {
        "model"
    };
    let source = simulation_source(channel, cfg.simulate_from.unwrap_or_default(), field)?;
    let sim = simulation(cfg, echo, source, None)?;
    echo.n_events = Some(sim.n_events);
    let slices = cfg.slices.clone().unwrap_or_else(|| FIG3_SLICES.to_vec());
    if slices.is_empty() {
        return Err(CliError::invalid("slices", "must not be empty"));
    }
    let slice_points = at_least_one("slice_points", cfg.slice_points.unwrap_or(SLICE_POINTS))?;
    for &ti in &slices {
        let line = Lattice::real_line(-1.0, 1.0, slice_points, ti)
            .map_err(|e| CliError::at("slices", e))?;
        ReconstructionPlan::new(sim.gamma, sim.m_max, line)
            .map_err(|e| CliError::at("slices", e))?;
    }
    echo.slices = Some(slices.clone());
    echo.slice_points = Some(slice_points);
    Ok(Fig3Plan {
        sim,
        slices,
        slice_points,
    })
}

fn map(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<MapPlan> {
    let channel = channel(cfg, echo, FIG3_MODEL)?;
    let field = if cfg.channel.is_some() {
        "channel"
    } else {
        "model"
    };
    let source = simulation_source(channel, cfg.simulate_from.unwrap_or_default(), field)?;
    let grid = match cfg.grid {
        Some(g) => Lattice::new(g.re_min, g.re_max, g.im_min, g.im_max, g.n_re, g.n_im)
            .map_err(|e| CliError::at("grid", e))?,
        None => Lattice::new(-1.0, 1.0, -1.0, 1.0, MAP_POINTS, MAP_POINTS)
            .expect("default grid is valid"),
    };
    let write_records = cfg.write_records.unwrap_or(false);
    let (sim, records) = match &cfg.records_in {
        None => {
            let sim = simulation(cfg, echo, source, None)?;
            echo.n_events = Some(sim.n_events);
            (sim, None)
        }
        Some(dir) => {
            if write_records {
                return Err(CliError::invalid(
                    "write_records",
                    "cannot be combined with `records_in`",
                ));
            }
            let gamma = complex_of("probe_gamma", cfg.probe_gamma.unwrap_or([PROBE_GAMMA, 0.0]))?;
            let m_max = at_least_one("m_max", cfg.m_max.unwrap_or(M_MAX))?;
            let probe =
                ReconstructionPlan::new(gamma, m_max, grid).map_err(|e| CliError::at("grid", e))?;
            let records = read_record_sets(dir, &probe)?;
            let fewest = records.values().map(Vec::len).min().unwrap_or(0);
            let gated = noise_gate_m_max(gamma, fewest, m_max)
                .map_err(|e| CliError::at("records_in", e))?;
            if gated < m_max {
                return Err(CliError::invalid(
                    "records_in",
                    format!("{fewest} records per point only support m_max = {gated} (noise gate {NOISE_GATE})"),
                ));
            }
            let sim = simulation(cfg, echo, source, Some(fewest))?;
            (sim, Some(records))
        }
    };
    ReconstructionPlan::new(sim.gamma, sim.m_max, grid).map_err(|e| CliError::at("grid", e))?;
    echo.grid = Some(grid);
    echo.write_records = Some(write_records);
    Ok(MapPlan {
        sim,
        grid,
        records,
        write_records,
    })
}

fn read_record_sets(dir: &Path, plan: &ReconstructionPlan<f64>) -> CliResult<RecordSets> {
    let mut out = HashMap::new();
    for b in plan.independent_points() {
        if (b.m, b.n) == (0, 0) {
            continue;
        }
        let path = dir.join(record_file_name(b.m, b.n));
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::invalid("records_in", format!("{}: {e}", path.display())))?;
        let recs = records_from_csv::<f64>(&text)
            .map_err(|e| CliError::invalid("records_in", format!("{}: {e}", path.display())))?;
        if recs.is_empty() {
            return Err(CliError::invalid(
                "records_in",
                format!("{}: no records", path.display()),
            ));
        }
        out.insert((b.m, b.n), recs);
    }
    Ok(out)
}

fn mandel(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<MandelPlan> {
    let channel = channel(cfg, echo, FIG3_MODEL)?;
    let input = cfg.input.unwrap_or(MandelInput::Stats {
        q_in: -1.0,
        mean_n: 1.0,
    });
    let moments = match input {
        MandelInput::Stats { q_in, mean_n } => {
            if !(mean_n.is_finite() && mean_n >= 0.0 && q_in.is_finite()) {
                return Err(CliError::invalid(
                    "input",
                    "q_in and mean_n must be finite, mean_n >= 0",
                ));
            }
            let m22 = q_in * mean_n + mean_n * mean_n;
            if m22 < 0.0 {
                return Err(CliError::invalid(
                    "input",
                    "q_in < -mean_n gives a negative second factorial moment",
                ));
            }
            MomentMatrix64::from_fn(2, |n, m| match (n, m) {
                (0, 0) => Complex::new(1.0, 0.0),
                (1, 1) => Complex::new(mean_n, 0.0),
                (2, 2) => Complex::new(m22, 0.0),
                _ => Complex::new(0.0, 0.0),
            })
        }
        MandelInput::Coherent { gamma } => {
            AnalyticP::coherent(Complex::new(gamma[0], gamma[1])).map(|s| s.moments(2))
        }
        MandelInput::DisplacedSpats { n_th, gamma } => {
            AnalyticP::displaced_spats(n_th, Complex::new(gamma[0], gamma[1])).map(|s| s.moments(2))
        }
    }
    .map_err(|e| CliError::at("input", e))?;
    echo.input = Some(input);
    Ok(MandelPlan {
        channel,
        input: moments,
    })
}

fn bound(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<BoundPlan> {
    let params = match cfg.model {
        Some(p) => TurbulenceModelParams::new(p.theta_bar, p.sigma_theta, p.sigma_phi, p.s)
            .map_err(|e| CliError::at("model", e))?,
        None => model_params(FIG2_MODEL),
    };
    echo.model = Some(params);
    let gammas = match &cfg.gammas {
        Some(g) => g.clone(),
        None => {
            let b = classicality_bound(&params).map_err(|e| CliError::at("model", e))?;
            vec![0.5 * b, b, 1.05 * b, BOUND_PROBE_LARGE]
        }
    };
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(CliError::invalid("gammas", "must be finite"));
    }
    echo.gammas = Some(gammas.clone());
    Ok(BoundPlan { params, gammas })
}

fn monitor(cfg: &ExperimentConfig, echo: &mut ExperimentConfig) -> CliResult<MonitorPlan> {
    let records = cfg.batches.clone().unwrap_or_else(|| {
        [FIG2_MODEL, FIG3_MODEL]
            .iter()
            .map(|p| {
                Pdtc64::model(model_params(*p))
                    .expect("built-in")
                    .to_record()
            })
            .collect()
    });
    if records.is_empty() {
        return Err(CliError::invalid("batches", "must not be empty"));
    }
    let from = cfg.simulate_from.unwrap_or_default();
    let batches = records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let field = format!("batches[{k}]");
            let ch = Pdtc64::from_record(rec).map_err(|e| CliError::at(field.clone(), e))?;
            simulation_source(ch, from, &field)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let placeholder = batches[0];
    let sim = simulation(cfg, echo, placeholder, None)?;
    let slice_points = at_least_one("slice_points", cfg.slice_points.unwrap_or(SLICE_POINTS))?;
    echo.batches = Some(records);
    echo.n_events = Some(sim.n_events);
    echo.slice_points = Some(slice_points);
    Ok(MonitorPlan {
        batches,
        gamma: sim.gamma,
        n_events: sim.n_events,
        m_max: sim.m_max,
        slice_points,
        lo_amplitude: sim.lo_amplitude,
    })
}
