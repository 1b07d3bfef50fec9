//! Photon-statistics and P-function nonclassicality criteria through the channel.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Sym2;
use crate::pdtc::{EtaStats, Pdtc, TurbulenceModelParams};
use crate::phase_space::MomentMatrix;
use crate::scalar::Real;

/// Agreement required between the moment-matched and linearised `λ_min` at the bound.
pub const BOUND_CROSS_CHECK: f64 = 0.05;

/// `λ_min` of the scaled PDTC at or above which the output is classical.
pub const LAMBDA_CLASSICAL: f64 = 2.0;

/// `Q = (M_22 − M_11²)/M_11`.
pub fn mandel_q<F: Real>(m: &MomentMatrix<F>) -> Result<F> {
    if m.order() < 2 {
        return Err(Error::OrderMismatch(m.order(), 2));
    }
    let m11 = m.get(1, 1).re;
    if m11 == F::zero() {
        return Err(Error::VacuumMandel);
    }
    Ok((m.get(2, 2).re - m11 * m11) / m11)
}

/// Output Mandel parameter `(⟨η²⟩/⟨η⟩) Q_in + (⟨Δη²⟩/⟨η⟩) ⟨n⟩_in`.
pub fn mandel_out<F: Real>(q_in: F, mean_n_in: F, stats: &EtaStats<F>) -> Result<F> {
    if !(mean_n_in >= F::zero()) {
        return Err(Error::invalid("mean_n_in", "must be >= 0"));
    }
    if stats.mean_eta == F::zero() {
        return Err(Error::DegenerateChannel);
    }
    Ok((stats.mean_eta_sq * q_in + stats.var_eta * mean_n_in) / stats.mean_eta)
}

/// Mean input photon number above which a sub-Poissonian input (`q_in < 0`)
/// always leaves the channel super-Poissonian; `+∞` for a channel without
/// efficiency fluctuations.
pub fn super_poisson_threshold<F: Real>(q_in: F, stats: &EtaStats<F>) -> Result<F> {
    if !(q_in < F::zero()) {
        return Err(Error::NotApplicable(format!(
            "threshold needs a sub-Poissonian input, got Q_in = {q_in}"
        )));
    }
    if stats.var_eta <= F::zero() {
        return Ok(F::infinity());
    }
    Ok(-stats.mean_eta_sq / stats.var_eta * q_in)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MandelReport<F> {
    pub q_in: F,
    pub q_out: F,
    pub mean_n_in: F,
    /// `None` for a non-negative `q_in`; may be `+∞`.
    pub threshold_n: Option<F>,
}

pub fn mandel_report<F: Real>(m_in: &MomentMatrix<F>, pdtc: &Pdtc<F>) -> Result<MandelReport<F>> {
    let q_in = mandel_q(m_in)?;
    let mean_n_in = m_in.mean_photon_number()?;
    let stats = pdtc.eta_stats()?;
    let q_out = mandel_out(q_in, mean_n_in, &stats)?;
    let threshold_n = if q_in < F::zero() {
        Some(super_poisson_threshold(q_in, &stats)?)
    } else {
        None
    };
    Ok(MandelReport {
        q_in,
        q_out,
        mean_n_in,
        threshold_n,
    })
}

fn bound_radicand<F: Real>(p: &TurbulenceModelParams<F>) -> F {
    let a = p.sigma_theta * p.sigma_theta;
    let b = p.sigma_phi * p.sigma_phi;
    let four = F::of(4.0);
    a + b - ((a - b) * (a - b) + four * p.s * p.s * a * b).sqrt()
}

/// Real displacement beyond which the Gaussian-approximated output P function
/// is classical: `2 e^{θ̄} / √R`, with `R` twice the smallest eigenvalue of the
/// `(θ, φ)` covariance.
pub fn classicality_bound<F: Real>(params: &TurbulenceModelParams<F>) -> Result<F> {
    let r = bound_radicand(params);
    if !(r > F::zero()) {
        return Err(Error::Unbounded(format!(
            "(theta, phi) covariance is singular (radicand {r})"
        )));
    }
    params.validate()?;
    Ok(F::of(2.0) * params.theta_bar.exp() / r.sqrt())
}

/// First-order covariance of `(T_r, T_i)`: `e^{−2θ̄}[[σ_θ², −sσ_θσ_φ], [−sσ_θσ_φ, σ_φ²]]`.
pub fn linearized_covariance<F: Real>(params: &TurbulenceModelParams<F>) -> [[F; 2]; 2] {
    let w = (-F::of(2.0) * params.theta_bar).exp();
    let c = -params.s * params.sigma_theta * params.sigma_phi * w;
    [
        [params.sigma_theta * params.sigma_theta * w, c],
        [c, params.sigma_phi * params.sigma_phi * w],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCheck<F> {
    pub gamma: F,
    /// From the moment-matched normal approximation.
    pub lambda_min: F,
    pub lambda_linearized: F,
    pub classical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<F> {
    pub bound: F,
    /// Moment-matched `λ_min` at `γ = bound` (the linearised value there is 2).
    pub lambda_at_bound: F,
    pub cross_check_rel_error: F,
    pub cross_check_passed: bool,
    pub checks: Vec<LambdaCheck<F>>,
}

/// Evaluates `λ_min` of the `γ`-scaled PDTC at each real `γ` and cross-checks
/// the closed-form bound against the moment-matched covariance.
pub fn verify_bound_numerically<F: Real>(
    params: &TurbulenceModelParams<F>,
    gamma_values: &[Complex<F>],
) -> Result<BoundReport<F>> {
    if let Some(g) = gamma_values.iter().find(|g| g.im != F::zero()) {
        return Err(Error::NotImplemented(format!(
            "classicality bound for complex gamma ({g})"
        )));
    }
    let bound = classicality_bound(params)?;
    let pdtc = Pdtc::model(*params)?;
    let lam_mm = pdtc
        .normal_approximation()?
        .cov_sym()
        .min_eigenvalue()
        .max(F::zero());
    let lam_lin = Sym2::from_array(linearized_covariance(params)).min_eigenvalue();
    let two = F::of(LAMBDA_CLASSICAL);
    let lambda_at_bound = bound * bound * lam_mm;
    let rel = ((lambda_at_bound - two) / two).abs();
    let checks = gamma_values
        .iter()
        .map(|g| {
            let g2 = g.re * g.re;
            let lambda_min = g2 * lam_mm;
            LambdaCheck {
                gamma: g.re,
                lambda_min,
                lambda_linearized: g2 * lam_lin,
                classical: lambda_min >= two,
            }
        })
        .collect();
    Ok(BoundReport {
        bound,
        lambda_at_bound,
        cross_check_rel_error: rel,
        cross_check_passed: rel <= F::of(BOUND_CROSS_CHECK),
        checks,
    })
}
