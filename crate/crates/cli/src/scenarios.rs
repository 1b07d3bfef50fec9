//! The scenario runners. Each writes its data files and returns the values
//! recorded under `derived` in the manifest.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use turbulight::homodyne::{
    records_to_csv, simulate_moment_records, LocalOscillator, PhotonMomentEstimate,
};
use turbulight::nonclassicality::mandel_report;
use turbulight::reconstruct::estimate_char_values;
use turbulight::seed::derive_seed;
use turbulight::{
    attenuate_p, estimate_char_fn, estimate_photon_moments, negativity_scan, output_p, reconstruct,
    simulate_records, verify_bound_numerically, AnalyticP, Lattice, PField64, PdtcEstimate,
    ReconstructionPlan, C64,
};

use crate::config::{
    record_file_name, BoundPlan, Fig2Plan, Fig3Plan, MandelPlan, MapPlan, MonitorPlan, Plan, Run,
    SimulationPlan,
};
use crate::error::CliResult;
use crate::manifest::Outputs;

pub fn execute(run: &Run, out: &mut Outputs) -> CliResult<Value> {
    match &run.plan {
        Plan::Fig2(p) => fig2(p, out),
        Plan::Fig3(p) => fig3(p, run.seed, out),
        Plan::Reconstruct(p) => map(p, run.seed, out),
        Plan::Mandel(p) => mandel(p, out),
        Plan::Bound(p) => bound(p, out),
        Plan::Monitor(p) => monitor(p, run.seed, out),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `f` formatted with three decimals, for file names.
fn tag(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveStats {
    pub min: f64,
    pub min_at: f64,
    pub peak: f64,
    pub peak_at: f64,
}

impl CurveStats {
    fn of(field: &PField64) -> CliResult<Self> {
        let (min, at) = negativity_scan(field)?;
        let k = field
            .values
            .iter()
            .enumerate()
            .fold(0, |b, (k, &v)| if v > field.values[b] { k } else { b });
        Ok(CurveStats {
            min,
            min_at: at.re,
            peak: field.values[k],
            peak_at: field.grid.point(k).re,
        })
    }

    /// Depth of the most negative value relative to the peak; zero when the
    /// curve is non-negative.
    pub fn negativity(&self) -> f64 {
        (-self.min).max(0.0) / self.peak
    }
}

fn fig2(plan: &Fig2Plan, out: &mut Outputs) -> CliResult<Value> {
    let t = C64::new(plan.attenuation_t, 0.0);
    let mut rows = Vec::new();
    for &g in &plan.gammas {
        let state = AnalyticP::displaced_spats(plan.n_th, C64::new(g, 0.0))?;
        let centre = g * plan.attenuation_t;
        let line = Lattice::real_line(
            centre - plan.half_width,
            centre + plan.half_width,
            plan.points,
            0.0,
        )?;
        let standard = PField64::evaluate(line, |a| attenuate_p(&state, t, a))?;
        let turbulent = PField64::evaluate(line, |a| output_p(&state, &plan.channel, a))?;

        let mut csv = String::from("re_alpha,p_standard,p_turbulent\n");
        for k in 0..line.len() {
            let _ = writeln!(
                csv,
                "{},{},{}",
                num(line.re_at(k)),
                num(standard.values[k]),
                num(turbulent.values[k])
            );
        }
        out.write(&format!("fig2_gamma_{}.csv", tag(g)), &csv)?;

        let s = CurveStats::of(&standard)?;
        let u = CurveStats::of(&turbulent)?;
        let relative = if s.negativity() > 0.0 {
            Some(u.negativity() / s.negativity())
        } else {
            None
        };
        rows.push(json!({
            "gamma": g,
            "standard": s,
            "turbulent": u,
            "relative_negativity": relative,
        }));
    }
    let summary = json!({
        "attenuation_t": plan.attenuation_t,
        "spats_n_th": plan.n_th,
        "channel": plan.channel.to_record(),
        "curves": rows,
    });
    out.write_json("fig2_summary.json", &summary)?;
    Ok(json!({}))
}

/// `Φ` estimates for every lattice point, with the origin set to 1.
fn simulated_char_values(sim: &SimulationPlan, seed: u64) -> CliResult<HashMap<(i32, i32), C64>> {
    let probe = Lattice::real_line(0.0, 0.0, 1, 0.0)?;
    let plan = ReconstructionPlan::new(sim.gamma, sim.m_max, probe)?;
    let mut map: HashMap<(i32, i32), C64> =
        estimate_char_values(&plan, &sim.source, sim.lo_amplitude, sim.n_events, seed)?
            .into_iter()
            .map(|(b, e)| ((b.m, b.n), e.value))
            .collect();
    map.insert((0, 0), C64::new(1.0, 0.0));
    Ok(map)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SliceReport {
    pub t_i: f64,
    /// `None` when the source has no density (point mass).
    pub linf_error: Option<f64>,
    pub true_peak: Option<f64>,
    pub true_peak_t_r: Option<f64>,
    pub relative_linf_error: Option<f64>,
    pub estimated_peak: f64,
    pub estimated_peak_t_r: f64,
    pub residual_imag: f64,
}

/// Reconstructs the `T_i = t_i` line and writes `t_r,p_true,p_est`.
fn slice(
    sim: &SimulationPlan,
    chars: &HashMap<(i32, i32), C64>,
    t_i: f64,
    points: usize,
) -> CliResult<(SliceReport, String)> {
    let line = Lattice::real_line(-1.0, 1.0, points, t_i)?;
    let est = reconstruct(&ReconstructionPlan::new(sim.gamma, sim.m_max, line)?, chars)?;
    let truth: Vec<Option<f64>> = line.points().map(|t| sim.source.density(t)).collect();
    let mut csv = String::from("t_r,p_true,p_est\n");
    for (k, v) in est.values.iter().enumerate() {
        let p_true = truth[k].map(num).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", num(line.re_at(k)), p_true, num(*v));
    }
    let (estimated_peak, at) = est.peak();
    let (mut linf, mut peak, mut peak_at) = (None, None, None);
    if truth.iter().all(Option::is_some) {
        let t: Vec<f64> = truth.iter().flatten().copied().collect();
        let k = (0..t.len()).fold(0, |b, k| if t[k] > t[b] { k } else { b });
        linf = Some(
            t.iter()
                .zip(&est.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        peak = Some(t[k]);
        peak_at = Some(line.re_at(k));
    }
    let report = SliceReport {
        t_i,
        linf_error: linf,
        true_peak: peak,
        true_peak_t_r: peak_at,
        relative_linf_error: linf.zip(peak).map(|(l, p)| l / p),
        estimated_peak,
        estimated_peak_t_r: at.re,
        residual_imag: est.residual_imag,
    };
    Ok((report, csv))
}

fn simulation_summary(sim: &SimulationPlan) -> Value {
    json!({
        "source": sim.source.to_record(),
        "probe_gamma": [sim.gamma.re, sim.gamma.im],
        "n_events": sim.n_events,
        "m_max_used": sim.m_max,
        "lo_amplitude": sim.lo_amplitude,
    })
}

fn fig3(plan: &Fig3Plan, seed: u64, out: &mut Outputs) -> CliResult<Value> {
    let chars = simulated_char_values(&plan.sim, seed)?;
    let mut reports = Vec::new();
    for &t_i in &plan.slices {
        let (report, csv) = slice(&plan.sim, &chars, t_i, plan.slice_points)?;
        out.write(&format!("fig3_ti_{}.csv", tag(t_i)), &csv)?;
        reports.push(report);
    }
    out.write_json(
        "fig3_summary.json",
        &json!({ "simulation": simulation_summary(&plan.sim), "slices": reports }),
    )?;
    Ok(json!({ "m_max_used": plan.sim.m_max }))
}

fn map(plan: &MapPlan, seed: u64, out: &mut Outputs) -> CliResult<Value> {
    let sim = &plan.sim;
    let rplan = ReconstructionPlan::new(sim.gamma, sim.m_max, plan.grid)?;
    let jobs: Vec<(u64, i32, i32, C64)> = rplan
        .beta_grid()
        .into_iter()
        .enumerate()
        .filter(|(_, b)| b.is_independent() && (b.m, b.n) != (0, 0))
        .map(|(k, b)| (derive_seed(seed, k as u64), b.m, b.n, b.beta))
        .collect();
    let mut chars: HashMap<(i32, i32), C64> = if let Some(records) = &plan.records {
        jobs.par_iter()
            .map(|&(_, m, n, beta)| Ok(((m, n), estimate_char_fn(&records[&(m, n)], beta)?.value)))
            .collect::<CliResult<_>>()?
    } else if plan.write_records {
        let sets = jobs
            .par_iter()
            .map(|&(s, m, n, beta)| {
                let lo = LocalOscillator::for_beta(sim.lo_amplitude, beta)?;
                let recs = simulate_records(sim.gamma, &sim.source, lo, sim.n_events, s)?;
                let value = estimate_char_fn(&recs, beta)?.value;
                Ok(((m, n), value, records_to_csv(&recs)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut chars = HashMap::new();
        for ((m, n), value, csv) in sets {
            out.write(&format!("records/{}", record_file_name(m, n)), &csv)?;
            chars.insert((m, n), value);
        }
        chars
    } else {
        estimate_char_values(&rplan, &sim.source, sim.lo_amplitude, sim.n_events, seed)?
            .into_iter()
            .map(|(b, e)| ((b.m, b.n), e.value))
            .collect()
    };
    chars.insert((0, 0), C64::new(1.0, 0.0));
    let est = reconstruct(&rplan, &chars)?;
    let density = |t: C64| sim.source.density(t).unwrap_or(f64::NAN);
    let known = sim.source.density(C64::new(0.0, 0.0)).is_some();
    let truth: Option<&dyn Fn(C64) -> f64> = if known { Some(&density) } else { None };
    out.write("reconstruction.csv", &est.to_csv(truth))?;
    out.write_json("reconstruct_summary.json", &map_summary(sim, &est, truth))?;
    Ok(json!({ "m_max_used": sim.m_max }))
}

fn map_summary(
    sim: &SimulationPlan,
    est: &PdtcEstimate<f64>,
    truth: Option<&dyn Fn(C64) -> f64>,
) -> Value {
    let (peak, at) = est.peak();
    let linf = truth.map(|f| {
        est.grid
            .points()
            .zip(&est.values)
            .map(|(t, v)| (f(t) - v).abs())
            .fold(0.0, f64::max)
    });
    json!({
        "simulation": simulation_summary(sim),
        "grid": est.grid,
        "estimated_peak": peak,
        "estimated_peak_at": [at.re, at.im],
        "riemann_mass": est.riemann_mass(),
        "residual_imag": est.residual_imag,
        "linf_error": linf,
    })
}

fn mandel(plan: &MandelPlan, out: &mut Outputs) -> CliResult<Value> {
    let report = mandel_report(&plan.input, &plan.channel)?;
    let stats = plan.channel.eta_stats()?;
    let applicable = report.threshold_n.is_some();
    let infinite = report.threshold_n.is_some_and(|t| t.is_infinite());
    let summary = json!({
        "channel": plan.channel.to_record(),
        "eta": stats,
        "q_in": report.q_in,
        "mean_n_in": report.mean_n_in,
        "q_out": report.q_out,
        "threshold_applicable": applicable,
        "threshold_n": report.threshold_n.filter(|t| t.is_finite()),
        "threshold_infinite": infinite,
    });
    out.write_json("mandel_report.json", &summary)?;
    Ok(json!({}))
}

fn bound(plan: &BoundPlan, out: &mut Outputs) -> CliResult<Value> {
    let gammas: Vec<C64> = plan.gammas.iter().map(|&g| Complex::new(g, 0.0)).collect();
    let report = verify_bound_numerically(&plan.params, &gammas)?;
    out.write_json(
        "bound_report.json",
        &json!({ "model": plan.params, "report": report }),
    )?;
    Ok(json!({ "bound": report.bound }))
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub index: usize,
    pub seed: u64,
    pub source: turbulight::PdtcRecord,
    pub true_mean_eta: f64,
    pub true_mean_eta_sq: f64,
    pub moments: PhotonMomentEstimate<f64>,
    pub slice: SliceReport,
}

fn monitor(plan: &MonitorPlan, seed: u64, out: &mut Outputs) -> CliResult<Value> {
    let mut reports = Vec::new();
    for (b, source) in plan.batches.iter().enumerate() {
        let batch_seed = derive_seed(seed, b as u64);
        let sim = SimulationPlan {
            source: *source,
            gamma: plan.gamma,
            n_events: plan.n_events,
            m_max: plan.m_max,
            lo_amplitude: plan.lo_amplitude,
        };
        let chars = simulated_char_values(&sim, derive_seed(batch_seed, 0))?;
        let (report, csv) = slice(&sim, &chars, 0.0, plan.slice_points)?;
        out.write(&format!("monitor_batch_{b}.csv"), &csv)?;
        let records = simulate_moment_records(
            plan.gamma,
            source,
            plan.lo_amplitude,
            0.0,
            plan.n_events,
            derive_seed(batch_seed, 1),
        )?;
        let moments = estimate_photon_moments(&records, plan.gamma)?;
        let truth = source.eta_stats()?;
        reports.push(BatchReport {
            index: b,
            seed: batch_seed,
            source: source.to_record(),
            true_mean_eta: truth.mean_eta,
            true_mean_eta_sq: truth.mean_eta_sq,
            moments,
            slice: report,
        });
    }
    out.write_json(
        "monitor.json",
        &json!({
            "probe_gamma": [plan.gamma.re, plan.gamma.im],
            "n_events": plan.n_events,
            "m_max_used": plan.m_max,
            "batches": reports,
        }),
    )?;
    Ok(json!({ "m_max_used": plan.m_max }))
}
