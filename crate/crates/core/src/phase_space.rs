//! Glauber–Sudarshan P functions, normally ordered moment matrices, and their
//! transformation through a fluctuating channel.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::pdtc::Pdtc;
use crate::quadrature::{integrate_2d, QuadOptions, Rect};
use crate::scalar::Real;

/// Smallest `|T|` kept when averaging P functions over a PDTC.
pub const TRANSMISSION_FLOOR: f64 = 1e-3;

/// Half-width, in standard deviations, of the Laplace-approximation box.
pub const LAPLACE_SIGMAS: f64 = 9.0;

/// Input states with a closed-form P function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticP<F> {
    /// Coherent state `|γ⟩`: a point mass, handled only through moments and homodyne statistics.
    Coherent { gamma: Complex<F> },
    /// Single-photon-added thermal state with mean thermal occupation `n_th`, displaced by `γ`.
    DisplacedSpats { n_th: F, gamma: Complex<F> },
}

impl<F: Real> AnalyticP<F> {
    pub fn coherent(gamma: Complex<F>) -> Result<Self> {
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        Ok(AnalyticP::Coherent { gamma })
    }

    pub fn displaced_spats(n_th: F, gamma: Complex<F>) -> Result<Self> {
        if !(n_th.is_finite() && n_th > F::zero()) {
            return Err(Error::invalid("n_th", "must be finite and > 0"));
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        Ok(AnalyticP::DisplacedSpats { n_th, gamma })
    }

    /// Coherent amplitude `⟨â⟩`.
    pub fn displacement(&self) -> Complex<F> {
        match *self {
            AnalyticP::Coherent { gamma } | AnalyticP::DisplacedSpats { gamma, .. } => gamma,
        }
    }

    fn spats(&self) -> Result<(F, Complex<F>)> {
        match *self {
            AnalyticP::DisplacedSpats { n_th, gamma } => Ok((n_th, gamma)),
            AnalyticP::Coherent { .. } => Err(Error::UnsupportedRepresentation(
                "coherent state (P function is a point mass)",
            )),
        }
    }

    /// Normally ordered moments `⟨â†ⁿ âᵐ⟩` up to `order`.
    pub fn moments(&self, order: usize) -> MomentMatrix<F> {
        match *self {
            AnalyticP::Coherent { gamma } => moments_coherent(gamma, order),
            AnalyticP::DisplacedSpats { n_th, gamma } => {
                moments_displaced_spats(n_th, gamma, order)
            }
        }
    }
}

/// P function of the undisplaced SPATS at offset `u`.
fn spats_centred<F: Real>(n_th: F, u: Complex<F>) -> F {
    let r2 = u.norm_sqr();
    ((F::one() + n_th) * r2 - n_th) * (-r2 / n_th).exp() / (F::PI() * n_th * n_th * n_th)
}

/// Input P function at `alpha`.
pub fn eval_p_in<F: Real>(state: &AnalyticP<F>, alpha: Complex<F>) -> Result<F> {
    let (n_th, gamma) = state.spats()?;
    Ok(spats_centred(n_th, alpha - gamma))
}

/// P function after a fixed transmission coefficient `t`: `P_in(α/T)/|T|²`.
pub fn attenuate_p<F: Real>(state: &AnalyticP<F>, t: Complex<F>, alpha: Complex<F>) -> Result<F> {
    let (n_th, gamma) = state.spats()?;
    let eta = t.norm_sqr();
    if eta == F::zero() {
        return Err(Error::SingularChannel);
    }
    if eta > F::one() {
        return Err(Error::invalid("T", "|T| must be <= 1"));
    }
    Ok(spats_centred(n_th, alpha / t - gamma) / eta)
}

/// Output P function of the fluctuating channel at `alpha`, with default quadrature settings.
pub fn output_p<F: Real>(state: &AnalyticP<F>, pdtc: &Pdtc<F>, alpha: Complex<F>) -> Result<F> {
    output_p_with(state, pdtc, alpha, &QuadOptions::default())
}

pub fn output_p_with<F: Real>(
    state: &AnalyticP<F>,
    pdtc: &Pdtc<F>,
    alpha: Complex<F>,
    opts: &QuadOptions,
) -> Result<F> {
    let (n_th, gamma) = state.spats()?;
    if let Pdtc::PointMass(t0) = pdtc {
        return attenuate_p(state, *t0, alpha);
    }
    let v = pdtc.expect_clipped(Some(F::of(TRANSMISSION_FLOOR)), opts, |t| {
        Complex::new(
            spats_centred(n_th, alpha / t - gamma) / t.norm_sqr(),
            F::zero(),
        )
    })?;
    Ok(v.re)
}

/// First-order Laplace approximation of the output P function: the input P
/// function attenuated by `t_o`, convolved with the `γ`-scaled Gaussian
/// approximation of the PDTC.
pub fn laplace_output_p<F: Real>(
    state: &AnalyticP<F>,
    pdtc: &Pdtc<F>,
    t_o: Complex<F>,
    alpha: Complex<F>,
) -> Result<F> {
    laplace_output_p_with(state, pdtc, t_o, alpha, &QuadOptions::default())
}

pub fn laplace_output_p_with<F: Real>(
    state: &AnalyticP<F>,
    pdtc: &Pdtc<F>,
    t_o: Complex<F>,
    alpha: Complex<F>,
    opts: &QuadOptions,
) -> Result<F> {
    let (n_th, gamma) = state.spats()?;
    if gamma.norm_sqr() == F::zero() {
        return Err(Error::DegenerateScaling);
    }
    let eta_o = t_o.norm_sqr();
    if eta_o == F::zero() {
        return Err(Error::SingularChannel);
    }
    let kernel = |t: Complex<F>| spats_centred(n_th, (alpha - gamma * t) / t_o) / eta_o;
    let g = pdtc.normal_approximation()?;
    let mu = g.mean_complex();
    if g.is_point() {
        return Ok(kernel(mu));
    }
    let cov = g.cov_sym();
    if cov.min_eigenvalue() <= F::zero() || cov.det() <= F::zero() {
        return Err(Error::DegenerateCovariance(
            "Laplace approximation needs a full-rank covariance".into(),
        ));
    }
    let l = cov.sqrt_factor();
    let k = F::of(LAPLACE_SIGMAS);
    let norm = F::one() / F::TAU();
    let v = integrate_2d(Rect::new(-k, k, -k, k), opts, |z0, z1| {
        let t = mu + Complex::new(l[0][0] * z0 + l[0][1] * z1, l[1][0] * z0 + l[1][1] * z1);
        let w = (-(z0 * z0 + z1 * z1) / F::of(2.0)).exp() * norm;
        Complex::new(w * kernel(t), F::zero())
    })?;
    Ok(v.value.re)
}

/// Finite matrix of normally ordered moments `M_nm = ⟨â†ⁿ âᵐ⟩`, `0 ≤ n, m ≤ order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrix<F> {
    order: usize,
    entries: Vec<Complex<F>>,
}

impl<F: Real> MomentMatrix<F> {
    /// `entries` is row-major with `(order + 1)²` elements.
    pub fn new(order: usize, entries: Vec<Complex<F>>) -> Result<Self> {
        let k = order + 1;
        if entries.len() != k * k {
            return Err(Error::invalid(
                "entries",
                format!("expected {} entries", k * k),
            ));
        }
        let m = MomentMatrix { order, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn from_fn(order: usize, f: impl Fn(usize, usize) -> Complex<F>) -> Result<Self> {
        let k = order + 1;
        let entries = (0..k * k).map(|i| f(i / k, i % k)).collect();
        Self::new(order, entries)
    }

    fn validate(&self) -> Result<()> {
        let tol = F::epsilon() * F::of(64.0);
        let m00 = self.get(0, 0);
        if (m00 - Complex::new(F::one(), F::zero())).norm() > tol {
            return Err(Error::invalid("M_00", "must equal 1"));
        }
        let k = self.order + 1;
        for n in 0..k {
            for m in n..k {
                let a = self.get(n, m);
                let b = self.get(m, n).conj();
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::invalid("entries", "must be finite"));
                }
                if (a - b).norm() > tol * a.norm().max(F::one()) {
                    return Err(Error::invalid(
                        "entries",
                        format!("not Hermitian at ({n}, {m})"),
                    ));
                }
            }
        }
        if self.order >= 1 && self.get(1, 1).re < F::zero() {
            return Err(Error::invalid("M_11", "mean photon number must be >= 0"));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `M_nm`; panics outside `0..=order`.
    pub fn get(&self, n: usize, m: usize) -> Complex<F> {
        assert!(
            n <= self.order && m <= self.order,
            "moment index out of range"
        );
        self.entries[n * (self.order + 1) + m]
    }

    pub fn entries(&self) -> &[Complex<F>] {
        &self.entries
    }

    /// `⟨n̂⟩ = M_11`.
    pub fn mean_photon_number(&self) -> Result<F> {
        if self.order < 1 {
            return Err(Error::OrderMismatch(self.order, 1));
        }
        Ok(self.get(1, 1).re)
    }
}

/// Moments `γ*ⁿ γᵐ` of a coherent state.
pub fn moments_coherent<F: Real>(gamma: Complex<F>, order: usize) -> MomentMatrix<F> {
    let k = order + 1;
    let entries = (0..k * k)
        .map(|i| gamma.conj().powu((i / k) as u32) * gamma.powu((i % k) as u32))
        .collect();
    MomentMatrix { order, entries }
}

/// Closed-form moments of the displaced SPATS.
///
/// With `α = γ + u`, the centred P function is isotropic, so only `⟨|u|^{2k}⟩`
/// survive: `k!·n^{k-1}·(k + n(k+1))`.
pub fn moments_displaced_spats<F: Real>(
    n_th: F,
    gamma: Complex<F>,
    order: usize,
) -> MomentMatrix<F> {
    let k1 = order + 1;
    let mut radial = vec![F::one(); k1];
    let mut fact = F::one();
    for (k, c) in radial.iter_mut().enumerate().skip(1) {
        let kf = F::from_usize(k).unwrap();
        fact *= kf;
        *c = fact * n_th.powi(k as i32 - 1) * (kf + n_th * (kf + F::one()));
    }
    let binom = |n: usize, k: usize| -> F {
        (0..k).fold(F::one(), |acc, i| {
            acc * F::from_usize(n - i).unwrap() / F::from_usize(i + 1).unwrap()
        })
    };
    let entries = (0..k1 * k1)
        .map(|i| {
            let (n, m) = (i / k1, i % k1);
            (0..=n.min(m)).fold(Complex::new(F::zero(), F::zero()), |acc, k| {
                acc + gamma.conj().powu((n - k) as u32)
                    * gamma.powu((m - k) as u32)
                    * (binom(n, k) * binom(m, k) * radial[k])
            })
        })
        .collect();
    MomentMatrix { order, entries }
}

/// `M_nm^out = ⟨T*ⁿ Tᵐ⟩ · M_nm^in`.
pub fn transform_moments<F: Real>(
    m_in: &MomentMatrix<F>,
    pdtc: &Pdtc<F>,
) -> Result<MomentMatrix<F>> {
    let k = m_in.order + 1;
    let mut entries = Vec::with_capacity(k * k);
    for n in 0..k {
        for m in 0..k {
            entries.push(pdtc.moment(n as u32, m as u32)? * m_in.get(n, m));
        }
    }
    Ok(MomentMatrix {
        order: m_in.order,
        entries,
    })
}

/// Entrywise ratio `M_nm^out / M_nm^in`, i.e. the PDTC moments `⟨T*ⁿ Tᵐ⟩`.
pub fn estimate_pdtc_moments<F: Real>(
    m_out: &MomentMatrix<F>,
    m_in: &MomentMatrix<F>,
) -> Result<Vec<Vec<Complex<F>>>> {
    if m_out.order != m_in.order {
        return Err(Error::OrderMismatch(m_out.order, m_in.order));
    }
    let k = m_in.order + 1;
    (0..k)
        .map(|n| {
            (0..k)
                .map(|m| {
                    let d = m_in.get(n, m);
                    if d.norm_sqr() == F::zero() {
                        Err(Error::UndefinedRatio { n, m })
                    } else {
                        Ok(m_out.get(n, m) / d)
                    }
                })
                .collect()
        })
        .collect()
}

/// Real-valued function sampled on a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct PField<F> {
    pub grid: Lattice<F>,
    pub values: Vec<F>,
}

impl<F: Real> PField<F> {
    pub fn new(grid: Lattice<F>, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid("values", "length must match the grid"));
        }
        Ok(PField { grid, values })
    }

    /// Evaluates `f` at every lattice point in parallel; the result does not
    /// depend on scheduling.
    pub fn evaluate<G>(grid: Lattice<F>, f: G) -> Result<Self>
    where
        G: Fn(Complex<F>) -> Result<F> + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.point(k)))
            .collect::<Result<Vec<F>>>()?;
        Ok(PField { grid, values })
    }

    /// Riemann sum of the values times the cell area.
    pub fn riemann_mass(&self) -> F {
        self.values.iter().copied().sum::<F>() * self.grid.cell_area()
    }

    pub fn max_value(&self) -> F {
        self.values.iter().copied().fold(F::neg_infinity(), F::max)
    }

    /// CSV with header `re_alpha,im_alpha,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_alpha,im_alpha,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let z = self.grid.point(k);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                z.re.as_f64(),
                z.im.as_f64(),
                v.as_f64()
            )?;
        }
        Ok(())
    }
}

/// Minimum of the field and where it occurs (first occurrence on ties).
pub fn negativity_scan<F: Real>(field: &PField<F>) -> Result<(F, Complex<F>)> {
    let (k, v) = field
        .values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, F)>, (k, &v)| match best {
            Some((_, b)) if !(v < b) => best,
            _ => Some((k, v)),
        })
        .ok_or(Error::EmptyGrid)?;
    Ok((v, field.grid.point(k)))
}
