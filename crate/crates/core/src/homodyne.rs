//! Balanced homodyne detection of a coherent probe sent through the channel.
//!
//! Quadrature convention: `x(θ) = â e^{iθ} + â† e^{-iθ}` with unit vacuum
//! variance, and the recorded photocount difference is `Δn = r·x`. With the LO
//! phase locked to `π/2 − arg β`, `E[e^{i|β|x}] = e^{-|β|²/2} Φ(β)` for
//! `Φ(β) = E[exp(β T* γ* − β* T γ)]`, so the estimator below is unbiased.

use std::fmt::Write as _;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pdtc::Pdtc;
use crate::quadrature::QuadOptions;
use crate::scalar::Real;
use crate::seed::rng_from_seed;

/// Largest LO-phase deviation tolerated by [`estimate_char_fn`], radians.
pub const PHASE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator<F> {
    pub amplitude_r: F,
    pub phase: F,
}

impl<F: Real> LocalOscillator<F> {
    pub fn new(amplitude_r: F, phase: F) -> Result<Self> {
        if !(amplitude_r.is_finite() && amplitude_r > F::zero()) {
            return Err(Error::invalid("amplitude_r", "must be finite and > 0"));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        Ok(LocalOscillator { amplitude_r, phase })
    }

    /// The LO setting that probes `Φ(β)`: phase `π/2 − arg β`.
    pub fn for_beta(amplitude_r: F, beta: Complex<F>) -> Result<Self> {
        Self::new(amplitude_r, lo_phase_for(beta))
    }
}

pub fn lo_phase_for<F: Real>(beta: Complex<F>) -> F {
    F::FRAC_PI_2() - beta.arg()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord<F> {
    pub delta_n: F,
    pub lo: LocalOscillator<F>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFnEstimate<F> {
    pub beta: Complex<F>,
    pub value: Complex<F>,
    pub std_error: F,
    pub n_samples: usize,
}

/// One quadrature value `x` for probe amplitude `γ`, with `rot = e^{iθ}`.
fn draw_quadrature<F: Real, R: Rng + ?Sized>(
    pdtc: &Pdtc<F>,
    gamma: Complex<F>,
    rot: Complex<F>,
    rng: &mut R,
) -> F {
    let t = pdtc.draw(rng);
    let mean = F::of(2.0) * (t * gamma * rot).re;
    mean + F::standard_normal(rng)
}

/// `n` photocount-difference records; deterministic in `(seed, n)`.
pub fn simulate_records<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    lo: LocalOscillator<F>,
    n: usize,
    seed: u64,
) -> Result<Vec<HomodyneRecord<F>>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    pdtc.check_sampling()?;
    let mut rng = rng_from_seed(seed);
    let rot = Complex::from_polar(F::one(), lo.phase);
    Ok((0..n)
        .map(|_| HomodyneRecord {
            delta_n: lo.amplitude_r * draw_quadrature(pdtc, gamma, rot, &mut rng),
            lo,
        })
        .collect())
}

fn wrapped_deviation<F: Real>(a: F, b: F) -> F {
    let d = (a - b) % F::TAU();
    if d > F::PI() {
        d - F::TAU()
    } else if d <= -F::PI() {
        d + F::TAU()
    } else {
        d
    }
}

/// Running sum of `exp(i|β|Δn/r)`; shared by the record-list and streaming paths
/// so both give bit-identical results.
struct PhaseSum<F> {
    k: F,
    r: F,
    sum: Complex<F>,
    n: usize,
}

impl<F: Real> PhaseSum<F> {
    fn new(beta: Complex<F>, r: F) -> Self {
        PhaseSum {
            k: beta.norm(),
            r,
            sum: Complex::new(F::zero(), F::zero()),
            n: 0,
        }
    }

    fn push(&mut self, delta_n: F) {
        let (s, c) = (self.k * delta_n / self.r).sin_cos();
        self.sum += Complex::new(c, s);
        self.n += 1;
    }

    fn finish(self, beta: Complex<F>) -> CharFnEstimate<F> {
        let nf = F::from_usize(self.n).unwrap();
        let gain = (beta.norm_sqr() / F::of(2.0)).exp();
        CharFnEstimate {
            beta,
            value: self.sum * (gain / nf),
            std_error: gain / nf.sqrt(),
            n_samples: self.n,
        }
    }
}

fn exact_unit<F: Real>(beta: Complex<F>, n: usize) -> CharFnEstimate<F> {
    CharFnEstimate {
        beta,
        value: Complex::new(F::one(), F::zero()),
        std_error: F::zero(),
        n_samples: n,
    }
}

/// Estimates `Φ(β)` from records taken at LO phase `π/2 − arg β`.
pub fn estimate_char_fn<F: Real>(
    records: &[HomodyneRecord<F>],
    beta: Complex<F>,
) -> Result<CharFnEstimate<F>> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("records", "must not be empty"))?;
    if beta.norm_sqr() == F::zero() {
        return Ok(exact_unit(beta, records.len()));
    }
    let r = first.lo.amplitude_r;
    let want = lo_phase_for(beta);
    let tol = F::of(PHASE_TOLERANCE);
    let mut acc = PhaseSum::new(beta, r);
    for (j, rec) in records.iter().enumerate() {
        if rec.lo.amplitude_r != r {
            return Err(Error::Protocol(format!(
                "record {j} has LO amplitude {} (expected {r})",
                rec.lo.amplitude_r
            )));
        }
        if wrapped_deviation(rec.lo.phase, want).abs() > tol {
            return Err(Error::Protocol(format!(
                "record {j} has LO phase {} but beta requires {want}",
                rec.lo.phase
            )));
        }
        acc.push(rec.delta_n);
    }
    Ok(acc.finish(beta))
}

/// Simulates `n` records at the LO setting for `β` and estimates `Φ(β)` without
/// storing them. Equal, bit for bit, to [`simulate_records`] followed by
/// [`estimate_char_fn`] with the same seed.
pub fn simulate_char_fn<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    amplitude_r: F,
    beta: Complex<F>,
    n: usize,
    seed: u64,
) -> Result<CharFnEstimate<F>> {
    let lo = LocalOscillator::for_beta(amplitude_r, beta)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if beta.norm_sqr() == F::zero() {
        return Ok(exact_unit(beta, n));
    }
    pdtc.check_sampling()?;
    let mut rng = rng_from_seed(seed);
    let rot = Complex::from_polar(F::one(), lo.phase);
    let mut acc = PhaseSum::new(beta, amplitude_r);
    for _ in 0..n {
        acc.push(amplitude_r * draw_quadrature(pdtc, gamma, rot, &mut rng));
    }
    Ok(acc.finish(beta))
}

/// Exact `Φ(β) = E[exp(β T* γ* − β* T γ)]` over the PDTC.
pub fn char_fn_exact<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    beta: Complex<F>,
) -> Result<Complex<F>> {
    char_fn_exact_with(gamma, pdtc, beta, &QuadOptions::default())
}

pub fn char_fn_exact_with<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    beta: Complex<F>,
    opts: &QuadOptions,
) -> Result<Complex<F>> {
    if beta.norm_sqr() == F::zero() {
        return Ok(Complex::new(F::one(), F::zero()));
    }
    let c = beta * gamma.conj();
    let phase = |t: Complex<F>| Complex::from_polar(F::one(), F::of(2.0) * (c * t.conj()).im);
    match pdtc {
        Pdtc::PointMass(t0) => Ok(phase(*t0)),
        _ => pdtc.expect(opts, phase),
    }
}

/// LO phases `θ0 + kπ/4`, `k = 0..4`, used for photon-moment estimation.
pub fn moment_phases<F: Real>(theta0: F) -> [F; 4] {
    let q = F::FRAC_PI_4();
    [theta0, theta0 + q, theta0 + q + q, theta0 + q + q + q]
}

/// `n_per_phase` records at each of the four [`moment_phases`]; phase `k` uses
/// the seed stream `derive_seed(seed, k)`.
pub fn simulate_moment_records<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    amplitude_r: F,
    theta0: F,
    n_per_phase: usize,
    seed: u64,
) -> Result<Vec<HomodyneRecord<F>>> {
    let mut out = Vec::with_capacity(4 * n_per_phase);
    for (k, phase) in moment_phases(theta0).into_iter().enumerate() {
        let lo = LocalOscillator::new(amplitude_r, phase)?;
        let s = crate::seed::derive_seed(seed, k as u64);
        out.extend(simulate_records(gamma, pdtc, lo, n_per_phase, s)?);
    }
    Ok(out)
}

/// Normally ordered photon moments of the transmitted probe and the implied
/// efficiency moments, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonMomentEstimate<F> {
    pub m11: F,
    pub m11_se: F,
    pub m22: F,
    pub m22_se: F,
    pub mean_eta: F,
    pub mean_eta_se: F,
    pub mean_eta_sq: F,
    pub mean_eta_sq_se: F,
}

/// Estimates `M_11` and `M_22` of the transmitted probe from records taken at
/// equally many shots on a set of LO phases whose second and fourth harmonics
/// cancel (such as [`moment_phases`]), then divides out `|γ|²`, `|γ|⁴`.
///
/// Phase averaging gives `⟨x²⟩ = 2M_11 + 1` and `⟨x⁴⟩ = 6M_22 + 12M_11 + 3`.
pub fn estimate_photon_moments<F: Real>(
    records: &[HomodyneRecord<F>],
    gamma: Complex<F>,
) -> Result<PhotonMomentEstimate<F>> {
    let g2 = gamma.norm_sqr();
    if g2 == F::zero() {
        return Err(Error::DegenerateScaling);
    }
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("records", "must not be empty"))?;
    let r = first.lo.amplitude_r;
    let tol = F::of(PHASE_TOLERANCE);
    let mut bins: Vec<(F, Vec<F>)> = Vec::new();
    for rec in records {
        if rec.lo.amplitude_r != r {
            return Err(Error::Protocol("records mix LO amplitudes".into()));
        }
        let x = rec.delta_n / r;
        match bins
            .iter_mut()
            .find(|(p, _)| wrapped_deviation(*p, rec.lo.phase).abs() <= tol)
        {
            Some((_, xs)) => xs.push(x),
            None => bins.push((rec.lo.phase, vec![x])),
        }
    }
    let n0 = bins[0].1.len();
    if bins.iter().any(|(_, xs)| xs.len() != n0) {
        return Err(Error::Protocol(
            "LO phases must carry equal record counts".into(),
        ));
    }
    if n0 < 2 {
        return Err(Error::invalid(
            "records",
            "need at least two records per phase",
        ));
    }
    let harmonic = |k: F| {
        bins.iter()
            .fold(Complex::new(F::zero(), F::zero()), |acc, (p, _)| {
                acc + Complex::from_polar(F::one(), k * *p)
            })
            .norm()
    };
    let cancel_tol = F::of(1e-9);
    if harmonic(F::of(2.0)) > cancel_tol || harmonic(F::of(4.0)) > cancel_tol {
        return Err(Error::Protocol(
            "LO phases do not cancel the second and fourth harmonics (use theta0 + k*pi/4)".into(),
        ));
    }
    let nb = F::from_usize(bins.len()).unwrap();
    let nf = F::from_usize(n0).unwrap();
    let (mut m11, mut m22, mut v11, mut v22) = (F::zero(), F::zero(), F::zero(), F::zero());
    let half = F::of(0.5);
    let sixth = F::one() / F::of(6.0);
    for (_, xs) in &bins {
        let g1 = |x: F| (x * x - F::one()) * half;
        let g2f = |x: F| (x * x * x * x - F::of(6.0) * x * x + F::of(3.0)) * sixth;
        let (a, va) = mean_var(xs.iter().map(|&x| g1(x)), nf);
        let (b, vb) = mean_var(xs.iter().map(|&x| g2f(x)), nf);
        m11 += a;
        m22 += b;
        v11 += va / nf;
        v22 += vb / nf;
    }
    m11 /= nb;
    m22 /= nb;
    let m11_se = v11.sqrt() / nb;
    let m22_se = v22.sqrt() / nb;
    Ok(PhotonMomentEstimate {
        m11,
        m11_se,
        m22,
        m22_se,
        mean_eta: m11 / g2,
        mean_eta_se: m11_se / g2,
        mean_eta_sq: m22 / (g2 * g2),
        mean_eta_sq_se: m22_se / (g2 * g2),
    })
}

fn mean_var<F: Real>(xs: impl Iterator<Item = F> + Clone, n: F) -> (F, F) {
    let mean = xs.clone().sum::<F>() / n;
    let ss = xs.map(|x| (x - mean) * (x - mean)).sum::<F>();
    (mean, ss / (n - F::one()))
}

/// CSV with header `delta_n,r,lo_phase`, 17 significant digits.
pub fn records_to_csv<F: Real>(records: &[HomodyneRecord<F>]) -> String {
    let mut s = String::from("delta_n,r,lo_phase\n");
    for rec in records {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e}",
            rec.delta_n.as_f64(),
            rec.lo.amplitude_r.as_f64(),
            rec.lo.phase.as_f64()
        );
    }
    s
}

pub fn records_from_csv<F: Real>(text: &str) -> Result<Vec<HomodyneRecord<F>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("records", "empty CSV"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let pos = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::invalid("records", format!("missing column `{name}`")))
    };
    let (i_dn, i_r, i_ph) = (pos("delta_n")?, pos("r")?, pos("lo_phase")?);
    lines
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |i: usize| -> Result<F> {
                fields
                    .get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .map(F::of)
                    .ok_or_else(|| Error::invalid("records", format!("malformed row {}", k + 2)))
            };
            Ok(HomodyneRecord {
                delta_n: get(i_dn)?,
                lo: LocalOscillator::new(get(i_r)?, get(i_ph)?)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn mean_var_of(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (
            m,
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
        )
    }

    #[test]
    fn vacuum_records_are_standard_normal() {
        let p = Pdtc::point_mass(c(0.0, 0.0)).unwrap();
        let lo = LocalOscillator::new(3.0, 0.4).unwrap();
        let recs = simulate_records(c(2.0, 1.0), &p, lo, 100_000, 5).unwrap();
        let xs: Vec<f64> = recs.iter().map(|r| r.delta_n / 3.0).collect();
        let (m, v) = mean_var_of(&xs);
        let n = xs.len() as f64;
        assert!(m.abs() < 5.0 / n.sqrt());
        assert!((v - 1.0).abs() < 5.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn identity_channel_mean_quadrature() {
        let p = Pdtc::point_mass(c(1.0, 0.0)).unwrap();
        let lo = LocalOscillator::new(1.0, 0.0).unwrap();
        let recs = simulate_records(c(2.0, 0.0), &p, lo, 100_000, 9).unwrap();
        let xs: Vec<f64> = recs.iter().map(|r| r.delta_n).collect();
        let (m, _) = mean_var_of(&xs);
        assert!((m - 4.0).abs() < 5.0 / (xs.len() as f64).sqrt());
    }

    #[test]
    fn zero_beta_is_exact() {
        let p = Pdtc::point_mass(c(0.5, 0.0)).unwrap();
        let recs = simulate_records(
            c(1.0, 0.0),
            &p,
            LocalOscillator::new(1.0, 2.0).unwrap(),
            10,
            1,
        )
        .unwrap();
        let e = estimate_char_fn(&recs, c(0.0, 0.0)).unwrap();
        assert_eq!(e.value, c(1.0, 0.0));
        assert_eq!(e.std_error, 0.0);
        assert_eq!(
            char_fn_exact(c(1.0, 0.0), &p, c(0.0, 0.0)).unwrap(),
            c(1.0, 0.0)
        );
    }

    #[test]
    fn coherent_probe_estimate() {
        let gamma = c(1.2, -0.4);
        let p = Pdtc::point_mass(c(1.0, 0.0)).unwrap();
        for beta in [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, -0.7)] {
            let lo = LocalOscillator::for_beta(2.0, beta).unwrap();
            let recs = simulate_records(gamma, &p, lo, 100_000, 77).unwrap();
            let e = estimate_char_fn(&recs, beta).unwrap();
            let exact = (beta * gamma.conj() - beta.conj() * gamma).exp();
            assert!((exact.norm() - 1.0).abs() < 1e-14);
            assert!((e.value - exact).norm() < 4.0 * e.std_error, "{beta}");
        }
    }

    #[test]
    fn protocol_violations() {
        let p = Pdtc::point_mass(c(1.0, 0.0)).unwrap();
        let beta = c(0.3, 0.3);
        let wrong = LocalOscillator::new(1.0, 0.0).unwrap();
        let recs = simulate_records(c(1.0, 0.0), &p, wrong, 10, 1).unwrap();
        assert!(matches!(
            estimate_char_fn(&recs, beta),
            Err(Error::Protocol(_))
        ));
        let lo = LocalOscillator::for_beta(1.0, beta).unwrap();
        let mut recs = simulate_records(c(1.0, 0.0), &p, lo, 10, 1).unwrap();
        assert!(estimate_char_fn(&recs, beta).is_ok());
        recs[3].lo.amplitude_r = 2.0;
        assert!(matches!(
            estimate_char_fn(&recs, beta),
            Err(Error::Protocol(_))
        ));
        // a full turn of the LO phase is the same setting
        let turned: Vec<_> = simulate_records(
            c(1.0, 0.0),
            &p,
            LocalOscillator::new(1.0, lo.phase + std::f64::consts::TAU).unwrap(),
            4,
            1,
        )
        .unwrap();
        assert!(estimate_char_fn(&turned, beta).is_ok());
    }

    #[test]
    fn streaming_matches_record_path_bitwise() {
        let p = Pdtc::gaussian([0.4, 0.05], [[0.004, 0.0005], [0.0005, 0.006]]).unwrap();
        let beta = c(0.2, -0.35);
        let gamma = c(3.0, 0.0);
        let lo = LocalOscillator::for_beta(1.5, beta).unwrap();
        let recs = simulate_records(gamma, &p, lo, 5000, 1234).unwrap();
        let a = estimate_char_fn(&recs, beta).unwrap();
        let b = simulate_char_fn(gamma, &p, 1.5, beta, 5000, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn records_are_deterministic() {
        let p = Pdtc::gaussian([0.4, 0.0], [[0.004, 0.0], [0.0, 0.004]]).unwrap();
        let lo = LocalOscillator::new(1.0, 0.3).unwrap();
        let a = simulate_records(c(2.0, 0.0), &p, lo, 200, 8).unwrap();
        let b = simulate_records(c(2.0, 0.0), &p, lo, 200, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn point_mass_char_fn_is_pure_phase() {
        let t0 = c(0.6, 0.2);
        let gamma = c(2.0, 0.5);
        let beta = c(0.4, -0.3);
        let v = char_fn_exact(gamma, &Pdtc::point_mass(t0).unwrap(), beta).unwrap();
        let expected = (beta * (t0 * gamma).conj() - beta.conj() * t0 * gamma).exp();
        assert!((v - expected).norm() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let p = Pdtc::gaussian([0.4, 0.0], [[0.004, 0.0], [0.0, 0.004]]).unwrap();
        let lo = LocalOscillator::new(1.7, -0.3).unwrap();
        let recs = simulate_records(c(2.0, 0.0), &p, lo, 50, 8).unwrap();
        let text = records_to_csv(&recs);
        assert!(text.starts_with("delta_n,r,lo_phase\n"));
        assert_eq!(records_from_csv::<f64>(&text).unwrap(), recs);
        assert!(records_from_csv::<f64>("delta_n,r\n1,2\n").is_err());
    }

    #[test]
    fn photon_moments_from_four_phases() {
        let params = crate::pdtc::TurbulenceModelParams::new(0.3, 0.1, 0.14, 0.01).unwrap();
        let p = Pdtc::model(params).unwrap();
        let gamma = c(3.0, 0.0);
        let recs = simulate_moment_records(gamma, &p, 1.0, 0.2, 50_000, 3).unwrap();
        let est = estimate_photon_moments(&recs, gamma).unwrap();
        let eta = p.eta_stats().unwrap();
        assert!((est.mean_eta - eta.mean_eta).abs() < 4.0 * est.mean_eta_se);
        assert!((est.mean_eta_sq - eta.mean_eta_sq).abs() < 4.0 * est.mean_eta_sq_se);
        let lop: Vec<_> = recs.iter().filter(|r| r.lo.phase == 0.2).cloned().collect();
        assert!(matches!(
            estimate_photon_moments(&lop, gamma),
            Err(Error::Protocol(_))
        ));
    }
}
