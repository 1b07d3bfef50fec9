//! PDTC reconstruction from the characteristic function on the lattice
//! `β_mn = π(m + in)/(2γ*)`.
//!
//! At those points `Φ_mn = E[e^{iπ(n T_r − m T_i)}]` are (four times) the Fourier
//! coefficients of the PDTC on the period square `[−1, 1]²`, so
//! `𝒫(T_r, T_i) = ¼ Σ_mn Φ_mn e^{iπ(m T_i − n T_r)}`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::homodyne::{char_fn_exact_with, simulate_char_fn, CharFnEstimate};
use crate::pdtc::Pdtc;
use crate::phase_space::PField;
use crate::quadrature::QuadOptions;
use crate::scalar::Real;
use crate::seed::derive_seed;

/// `e^{|β|²/2}/√N` may not exceed this at any lattice point used.
pub const NOISE_GATE: f64 = 0.2;

/// Largest accepted `max|Im| / max Re` of a reconstruction.
pub const RESIDUAL_GATE: f64 = 0.05;

pub const DEFAULT_M_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPlan<F> {
    pub gamma: Complex<F>,
    pub m_max: usize,
    pub grid: Lattice<F>,
}

impl<F: Real> ReconstructionPlan<F> {
    pub fn new(gamma: Complex<F>, m_max: usize, grid: Lattice<F>) -> Result<Self> {
        if gamma.norm_sqr() == F::zero() || !gamma.norm_sqr().is_finite() {
            return Err(Error::invalid(
                "gamma",
                "probe amplitude must be finite and non-zero",
            ));
        }
        if m_max == 0 {
            return Err(Error::invalid("m_max", "must be >= 1"));
        }
        let one = F::one();
        if grid.re_min < -one || grid.re_max > one || grid.im_min < -one || grid.im_max > one {
            return Err(Error::invalid("grid", "must lie within [-1, 1]^2"));
        }
        Ok(ReconstructionPlan { gamma, m_max, grid })
    }

    /// The full `(2 m_max + 1)²` lattice, `m` outermost.
    pub fn beta_grid(&self) -> Vec<BetaPoint<F>> {
        let k = self.m_max as i32;
        (-k..=k)
            .flat_map(|m| (-k..=k).map(move |n| (m, n)))
            .map(|(m, n)| BetaPoint::new(self.gamma, m, n))
            .collect()
    }

    /// One representative of each conjugate pair `(m, n) ~ (−m, −n)`.
    pub fn independent_points(&self) -> Vec<BetaPoint<F>> {
        self.beta_grid()
            .into_iter()
            .filter(|b| b.is_independent())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint<F> {
    pub m: i32,
    pub n: i32,
    pub beta: Complex<F>,
}

impl<F: Real> BetaPoint<F> {
    pub fn new(gamma: Complex<F>, m: i32, n: i32) -> Self {
        let num = Complex::new(F::from_i32(m).unwrap(), F::from_i32(n).unwrap()) * F::FRAC_PI_2();
        BetaPoint {
            m,
            n,
            beta: num / gamma.conj(),
        }
    }

    pub fn is_independent(&self) -> bool {
        self.m > 0 || (self.m == 0 && self.n >= 0)
    }
}

/// All `(m, n, β_mn)` with `|m|, |n| ≤ m_max`.
pub fn beta_grid<F: Real>(plan: &ReconstructionPlan<F>) -> Vec<BetaPoint<F>> {
    plan.beta_grid()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdtcEstimate<F> {
    pub grid: Lattice<F>,
    pub values: Vec<F>,
    /// Largest `|Im|` of the series before it was discarded.
    pub residual_imag: F,
    pub m_max_used: usize,
}

impl<F: Real> PdtcEstimate<F> {
    pub fn peak(&self) -> (F, Complex<F>) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, F::neg_infinity()),
                |b, (k, &v)| if v > b.1 { (k, v) } else { b },
            );
        (v, self.grid.point(k))
    }

    /// Riemann sum times the lattice cell area.
    pub fn riemann_mass(&self) -> F {
        self.values.iter().copied().sum::<F>() * self.grid.cell_area()
    }

    pub fn into_field(self) -> PField<F> {
        PField {
            grid: self.grid,
            values: self.values,
        }
    }

    /// CSV with header `t_r,t_i,p_est,p_true_if_known`; the last column is empty
    /// when `truth` is `None`.
    pub fn to_csv(&self, truth: Option<&dyn Fn(Complex<F>) -> F>) -> String {
        let mut s = String::from("t_r,t_i,p_est,p_true_if_known\n");
        for (k, v) in self.values.iter().enumerate() {
            let t = self.grid.point(k);
            let _ = write!(
                s,
                "{:.16e},{:.16e},{:.16e},",
                t.re.as_f64(),
                t.im.as_f64(),
                v.as_f64()
            );
            if let Some(f) = truth {
                let _ = write!(s, "{:.16e}", f(t).as_f64());
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluates the truncated Fourier series on the plan's grid. Missing indices
/// are completed from their conjugate partners.
pub fn reconstruct<F: Real>(
    plan: &ReconstructionPlan<F>,
    char_values: &HashMap<(i32, i32), Complex<F>>,
) -> Result<PdtcEstimate<F>> {
    let k = plan.m_max as i32;
    let side = (2 * k + 1) as usize;
    let mut coeffs = vec![Complex::new(F::zero(), F::zero()); side * side];
    let mut missing = Vec::new();
    for m in -k..=k {
        for n in -k..=k {
            let v = match (char_values.get(&(m, n)), char_values.get(&(-m, -n))) {
                (Some(v), _) => *v,
                (None, Some(v)) => v.conj(),
                (None, None) => {
                    missing.push((m, n));
                    continue;
                }
            };
            coeffs[((m + k) as usize) * side + (n + k) as usize] = v;
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteData(missing));
    }

    let grid = plan.grid;
    let pi = F::PI();
    let idx = |j: i32| F::from_i32(j).unwrap();
    // A[m][i] = Σ_n Φ_mn e^{−iπ n T_r(i)}
    let mut partial = vec![Complex::new(F::zero(), F::zero()); side * grid.n_re];
    for mi in 0..side {
        for i in 0..grid.n_re {
            let tr = grid.re_at(i);
            let mut acc = Complex::new(F::zero(), F::zero());
            for n in -k..=k {
                let c = coeffs[mi * side + (n + k) as usize];
                acc += c * Complex::from_polar(F::one(), -pi * idx(n) * tr);
            }
            partial[mi * grid.n_re + i] = acc;
        }
    }
    let quarter = F::of(0.25);
    let rows: Vec<Vec<Complex<F>>> = (0..grid.n_im)
        .into_par_iter()
        .map(|j| {
            let ti = grid.im_at(j);
            let phases: Vec<Complex<F>> = (-k..=k)
                .map(|m| Complex::from_polar(F::one(), pi * idx(m) * ti))
                .collect();
            (0..grid.n_re)
                .map(|i| {
                    let mut acc = Complex::new(F::zero(), F::zero());
                    for (mi, ph) in phases.iter().enumerate() {
                        acc += partial[mi * grid.n_re + i] * ph;
                    }
                    acc * quarter
                })
                .collect()
        })
        .collect();
    let flat: Vec<Complex<F>> = rows.into_iter().flatten().collect();
    let residual_imag = flat.iter().map(|z| z.im.abs()).fold(F::zero(), F::max);
    let values: Vec<F> = flat.iter().map(|z| z.re).collect();
    let peak = values.iter().copied().fold(F::zero(), F::max);
    if residual_imag > F::of(RESIDUAL_GATE) * peak {
        return Err(Error::Accuracy {
            residual: residual_imag.as_f64(),
            tolerance: RESIDUAL_GATE * peak.as_f64(),
        });
    }
    Ok(PdtcEstimate {
        grid,
        values,
        residual_imag,
        m_max_used: plan.m_max,
    })
}

/// Exact `Φ_mn` for the independent half of the lattice.
pub fn exact_char_values<F: Real>(
    plan: &ReconstructionPlan<F>,
    pdtc: &Pdtc<F>,
    opts: &QuadOptions,
) -> Result<HashMap<(i32, i32), Complex<F>>> {
    let pts = plan.independent_points();
    let vals = pts
        .par_iter()
        .map(|b| char_fn_exact_with(plan.gamma, pdtc, b.beta, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(pts.iter().map(|b| (b.m, b.n)).zip(vals).collect())
}

/// Largest order `≤ m_max` whose corner point `β_{M,M}` passes the noise gate.
pub fn noise_gate_m_max<F: Real>(
    gamma: Complex<F>,
    n_events: usize,
    m_max: usize,
) -> Result<usize> {
    let sqrt_n = (n_events as f64).sqrt();
    let g = gamma.norm().as_f64();
    let ok = |m: usize| {
        let b = std::f64::consts::FRAC_PI_2 * (m as f64) * std::f64::consts::SQRT_2 / g;
        (b * b / 2.0).exp() / sqrt_n <= NOISE_GATE
    };
    (1..=m_max).rev().find(|&m| ok(m)).ok_or_else(|| {
        Error::invalid(
            "n_events",
            format!(
                "too few events for any Fourier order at |gamma| = {g} (noise gate {NOISE_GATE})"
            ),
        )
    })
}

/// Simulated estimates of `Φ` at every independent lattice point except the
/// origin. Point `k` of [`ReconstructionPlan::beta_grid`] uses the seed stream
/// `derive_seed(seed, k)`.
pub fn estimate_char_values<F: Real>(
    plan: &ReconstructionPlan<F>,
    pdtc: &Pdtc<F>,
    lo_amplitude: F,
    n_events: usize,
    seed: u64,
) -> Result<Vec<(BetaPoint<F>, CharFnEstimate<F>)>> {
    let jobs: Vec<(u64, BetaPoint<F>)> = plan
        .beta_grid()
        .into_iter()
        .enumerate()
        .filter(|(_, b)| b.is_independent() && (b.m, b.n) != (0, 0))
        .map(|(k, b)| (derive_seed(seed, k as u64), b))
        .collect();
    jobs.par_iter()
        .map(|&(s, b)| {
            Ok((
                b,
                simulate_char_fn(plan.gamma, pdtc, lo_amplitude, b.beta, n_events, s)?,
            ))
        })
        .collect()
}

/// Simulate the homodyne data for every needed `β`, estimate `Φ`, and evaluate
/// the series. `m_max` is lowered as far as the noise gate requires.
#[allow(clippy::too_many_arguments)]
pub fn end_to_end<F: Real>(
    gamma: Complex<F>,
    pdtc: &Pdtc<F>,
    lo_amplitude: F,
    n_events: usize,
    m_max: usize,
    grid: Lattice<F>,
    seed: u64,
) -> Result<PdtcEstimate<F>> {
    let used = noise_gate_m_max(gamma, n_events, m_max)?;
    let plan = ReconstructionPlan::new(gamma, used, grid)?;
    let estimates = estimate_char_values(&plan, pdtc, lo_amplitude, n_events, seed)?;
    let mut map: HashMap<(i32, i32), Complex<F>> = estimates
        .into_iter()
        .map(|(b, e)| ((b.m, b.n), e.value))
        .collect();
    map.insert((0, 0), Complex::new(F::one(), F::zero()));
    reconstruct(&plan, &map)
}
