//! Probability distributions of the complex transmission coefficient (PDTC).
//!
//! Three representations are supported:
//!
//! * [`LogNormalPdtc`]: the small-fluctuation turbulence model, bivariate normal in
//!   `θ = -ln|T|` and `φ = arg T`, truncated to `0 < |T| ≤ 1`, `|φ| ≤ π` and
//!   renormalized to unit mass;
//! * [`GaussianPdtc`]: bivariate normal in `(Re T, Im T)`, truncated to the unit
//!   disc and renormalized;
//! * a point mass (deterministic channel).
//!
//! Expectations are taken by adaptive Gauss–Legendre quadrature on a box that
//! covers ±10 standard deviations. The truncation boundaries are box edges, so the
//! integrand is smooth inside every cell.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Sym2;
use crate::quadrature::{integrate_2d, QuadOptions, Rect};
use crate::scalar::Real;
use crate::seed::rng_from_seed;

/// Half-width of integration boxes, in standard deviations.
pub const BOX_SIGMAS: f64 = 10.0;

/// Truncated mass below which closed-form model moments are used.
pub const CLOSED_FORM_MASS_LIMIT: f64 = 1e-6;

/// Rejection sampling refuses distributions with less than this mass inside the support.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// A Gaussian PDTC keeping less than this mass on the unit disc is flagged.
pub const DISC_MASS_WARNING: f64 = 0.99;

/// Largest mass an expectation may drop below a transmission floor.
pub const CLIP_LIMIT: f64 = 1e-10;

/// Tolerance used for normalisation and moment quadratures.
pub fn tight_tol<F: Real>() -> f64 {
    (F::epsilon().as_f64() * 1e3).max(1e-11)
}

pub(crate) fn tight_opts<F: Real>() -> QuadOptions {
    QuadOptions::default().with_tol(tight_tol::<F>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidityWarning {
    /// `σ_θ ≥ θ̄`: the log-normal small-fluctuation picture is questionable.
    SigmaThetaNotSmall,
    /// `σ_φ ≥ 1`: phase spread is not small against `2π`.
    SigmaPhiNotSmall,
}

/// Parameters of the log-normal turbulence model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceModelParams<F> {
    /// Mean of `θ = -ln t`.
    pub theta_bar: F,
    pub sigma_theta: F,
    /// Standard deviation of the phase, radians.
    pub sigma_phi: F,
    /// Correlation coefficient of `θ` and `φ`.
    pub s: F,
}

impl<F: Real> TurbulenceModelParams<F> {
    /// Accepts any point of the parameter space; see [`Self::warnings`] for the
    /// model's validity domain.
    pub fn new(theta_bar: F, sigma_theta: F, sigma_phi: F, s: F) -> Result<Self> {
        let p = TurbulenceModelParams {
            theta_bar,
            sigma_theta,
            sigma_phi,
            s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_bar.is_finite() && self.theta_bar >= F::zero()) {
            return Err(Error::invalid("theta_bar", "must be finite and >= 0"));
        }
        if !(self.sigma_theta.is_finite() && self.sigma_theta > F::zero()) {
            return Err(Error::invalid("sigma_theta", "must be finite and > 0"));
        }
        if !(self.sigma_phi.is_finite() && self.sigma_phi > F::zero()) {
            return Err(Error::invalid("sigma_phi", "must be finite and > 0"));
        }
        if !(self.s.abs() < F::one()) {
            return Err(Error::invalid("s", "must lie in (-1, 1)"));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<ValidityWarning> {
        let mut w = Vec::new();
        if self.sigma_theta >= self.theta_bar {
            w.push(ValidityWarning::SigmaThetaNotSmall);
        }
        if self.sigma_phi >= F::one() {
            w.push(ValidityWarning::SigmaPhiNotSmall);
        }
        w
    }

    pub fn in_validity_domain(&self) -> bool {
        self.warnings().is_empty()
    }

    /// Joint normal density of `(θ, φ)`.
    pub fn theta_phi_density(&self, theta: F, phi: F) -> F {
        let one = F::one();
        let x = (theta - self.theta_bar) / self.sigma_theta;
        let y = phi / self.sigma_phi;
        let rho2 = one - self.s * self.s;
        let q = (x * x - F::of(2.0) * self.s * x * y + y * y) / (F::of(2.0) * rho2);
        (-q).exp() / (F::TAU() * self.sigma_theta * self.sigma_phi * rho2.sqrt())
    }

    /// `E[e^{-pθ + iqφ}]` of the untruncated bivariate normal.
    pub fn mgf(&self, p: F, q: F) -> Complex<F> {
        let half = F::of(0.5);
        let st = self.sigma_theta;
        let sp = self.sigma_phi;
        let re = -p * self.theta_bar + half * (p * p * st * st - q * q * sp * sp);
        let im = -p * q * self.s * st * sp;
        Complex::new(re, im).exp()
    }
}

/// Density of the turbulence model in `(t, φ)` with respect to `dt dφ`,
/// without truncation renormalisation.
pub fn density_model<F: Real>(t: F, phi: F, params: &TurbulenceModelParams<F>) -> Result<F> {
    if !(t > F::zero()) {
        return Err(Error::Domain(format!("t = {} must be > 0", t)));
    }
    Ok(params.theta_phi_density(-t.ln(), phi) / t)
}

/// The log-normal model truncated to its physical support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalPdtc<F> {
    params: TurbulenceModelParams<F>,
    mass: F,
}

impl<F: Real> LogNormalPdtc<F> {
    pub fn new(params: TurbulenceModelParams<F>) -> Result<Self> {
        params.validate()?;
        let mut pdtc = LogNormalPdtc {
            params,
            mass: F::one(),
        };
        let raw = integrate_2d(pdtc.box_rect(), &tight_opts::<F>(), |th, ph| {
            Complex::new(params.theta_phi_density(th, ph), F::zero())
        })?;
        pdtc.mass = raw.value.re;
        if !(pdtc.mass > F::zero()) {
            return Err(Error::invalid(
                "model",
                "no probability mass inside 0 < t <= 1, |phi| <= pi",
            ));
        }
        Ok(pdtc)
    }

    pub fn params(&self) -> &TurbulenceModelParams<F> {
        &self.params
    }

    /// Probability mass of the untruncated model inside the support.
    pub fn mass(&self) -> F {
        self.mass
    }

    /// Probability mass removed by truncation, `1 - mass`.
    pub fn truncated_mass(&self) -> F {
        (F::one() - self.mass).max(F::zero())
    }

    pub fn uses_closed_form(&self) -> bool {
        self.truncated_mass() < F::of(CLOSED_FORM_MASS_LIMIT)
    }

    fn box_rect(&self) -> Rect<F> {
        let k = F::of(BOX_SIGMAS);
        let p = &self.params;
        let th0 = (p.theta_bar - k * p.sigma_theta).max(F::zero());
        let th1 = p.theta_bar + k * p.sigma_theta;
        let ph = (k * p.sigma_phi).min(F::PI());
        Rect::new(th0, th1, -ph, ph)
    }

    /// Renormalised density with respect to `d²T`.
    pub fn density(&self, t: Complex<F>) -> F {
        let r = t.norm();
        if !(r > F::zero()) || r > F::one() {
            return F::zero();
        }
        self.params.theta_phi_density(-r.ln(), t.arg()) / (r * r * self.mass)
    }
}

/// Bivariate normal in `(Re T, Im T)`, truncated to `|T| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPdtc<F> {
    mean: [F; 2],
    cov: Sym2<F>,
    factor: [[F; 2]; 2],
    disc_mass: F,
}

impl<F: Real> GaussianPdtc<F> {
    /// `cov` must be symmetric positive semidefinite.
    pub fn new(mean: [F; 2], cov: [[F; 2]; 2]) -> Result<Self> {
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(Error::invalid("mean", "must be finite"));
        }
        let scale = cov[0][0].abs() + cov[1][1].abs() + cov[0][1].abs();
        if (cov[0][1] - cov[1][0]).abs() > F::epsilon() * F::of(16.0) * scale {
            return Err(Error::invalid("cov", "must be symmetric"));
        }
        let cov = Sym2::from_array(cov);
        let lo = cov.min_eigenvalue();
        if !(lo >= -F::epsilon() * F::of(16.0) * scale) {
            return Err(Error::invalid("cov", "must be positive semidefinite"));
        }
        let mut g = GaussianPdtc {
            mean,
            cov,
            factor: cov.sqrt_factor(),
            disc_mass: F::one(),
        };
        g.disc_mass = match g.domain(None)? {
            GaussDomain::Point => {
                if g.mean_complex().norm() <= F::one() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            d => {
                g.integrate_raw(&d, &tight_opts::<F>(), |_| {
                    Complex::new(F::one(), F::zero())
                })?
                .re
            }
        };
        Ok(g)
    }

    pub fn mean(&self) -> [F; 2] {
        self.mean
    }

    pub fn mean_complex(&self) -> Complex<F> {
        Complex::new(self.mean[0], self.mean[1])
    }

    pub fn cov(&self) -> [[F; 2]; 2] {
        self.cov.to_array()
    }

    pub(crate) fn cov_sym(&self) -> Sym2<F> {
        self.cov
    }

    /// Probability mass of the untruncated Gaussian on the unit disc.
    pub fn disc_mass(&self) -> F {
        self.disc_mass
    }

    /// Set when the disc holds less than [`DISC_MASS_WARNING`] of the mass.
    pub fn low_disc_mass(&self) -> bool {
        self.disc_mass < F::of(DISC_MASS_WARNING)
    }

    pub fn is_point(&self) -> bool {
        self.cov.eigen().values[1] <= F::zero()
    }

    /// Untruncated plane density at `t`.
    pub fn plane_density(&self, t: Complex<F>) -> F {
        let dx = t.re - self.mean[0];
        let dy = t.im - self.mean[1];
        let q = self.cov.inv_quad(dx, dy);
        (-q / F::of(2.0)).exp() / (F::TAU() * self.cov.det().sqrt())
    }

    /// Renormalised density on the unit disc with respect to `d²T`.
    pub fn density(&self, t: Complex<F>) -> F {
        if t.norm() > F::one() {
            return F::zero();
        }
        self.plane_density(t) / self.disc_mass
    }

    fn domain(&self, floor: Option<F>) -> Result<GaussDomain<F>> {
        let e = self.cov.eigen();
        if e.values[1] <= F::zero() {
            return Ok(GaussDomain::Point);
        }
        if e.values[0] <= F::zero() || self.cov.det() <= F::zero() {
            return Err(Error::DegenerateCovariance(
                "rank-deficient covariance has no density".into(),
            ));
        }
        let k = F::of(BOX_SIGMAS);
        let reach = k * e.values[1].sqrt();
        let centre = self.mean_complex().norm();
        let clear_of_floor = floor.is_none_or(|f| centre - reach >= f);
        if centre + reach <= F::one() && clear_of_floor {
            return Ok(GaussDomain::Whitened {
                rect: Rect::new(-k, k, -k, k),
                factor: self.factor,
            });
        }
        let r0 = (centre - reach)
            .max(floor.unwrap_or(F::zero()))
            .max(F::zero());
        let r1 = (centre + reach).min(F::one());
        if r0 >= r1 {
            return Ok(GaussDomain::Empty);
        }
        let (p0, p1) = if centre > reach {
            let half = (reach / centre).asin();
            let a = self.mean[1].atan2(self.mean[0]);
            (a - half, a + half)
        } else {
            (-F::PI(), F::PI())
        };
        Ok(GaussDomain::Polar {
            rect: Rect::new(r0, r1, p0, p1),
        })
    }

    fn integrate_raw<G>(
        &self,
        domain: &GaussDomain<F>,
        opts: &QuadOptions,
        g: G,
    ) -> Result<Complex<F>>
    where
        G: Fn(Complex<F>) -> Complex<F>,
    {
        let zero = Complex::new(F::zero(), F::zero());
        match domain {
            GaussDomain::Point => Ok(g(self.mean_complex())),
            GaussDomain::Empty => Ok(zero),
            GaussDomain::Whitened { rect, factor } => {
                let mu = self.mean;
                let l = *factor;
                let norm = F::one() / F::TAU();
                Ok(integrate_2d(*rect, opts, |z0, z1| {
                    let w = (-(z0 * z0 + z1 * z1) / F::of(2.0)).exp() * norm;
                    let t = Complex::new(
                        mu[0] + l[0][0] * z0 + l[0][1] * z1,
                        mu[1] + l[1][0] * z0 + l[1][1] * z1,
                    );
                    g(t) * w
                })?
                .value)
            }
            GaussDomain::Polar { rect } => Ok(integrate_2d(*rect, opts, |r, phi| {
                let t = Complex::from_polar(r, phi);
                g(t) * (self.plane_density(t) * r)
            })?
            .value),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum GaussDomain<F> {
    Point,
    Empty,
    Whitened { rect: Rect<F>, factor: [[F; 2]; 2] },
    Polar { rect: Rect<F> },
}

/// `⟨η⟩`, `⟨η²⟩` and their difference for `η = |T|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaStats<F> {
    pub mean_eta: F,
    pub mean_eta_sq: F,
    pub var_eta: F,
}

impl<F: Real> EtaStats<F> {
    pub fn from_moments(mean_eta: F, mean_eta_sq: F) -> Self {
        EtaStats {
            mean_eta,
            mean_eta_sq,
            var_eta: mean_eta_sq - mean_eta * mean_eta,
        }
    }
}

/// A PDTC in one of the supported representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pdtc<F> {
    Model(LogNormalPdtc<F>),
    Gaussian(GaussianPdtc<F>),
    PointMass(Complex<F>),
}

impl<F: Real> Pdtc<F> {
    pub fn model(params: TurbulenceModelParams<F>) -> Result<Self> {
        Ok(Pdtc::Model(LogNormalPdtc::new(params)?))
    }

    pub fn gaussian(mean: [F; 2], cov: [[F; 2]; 2]) -> Result<Self> {
        Ok(Pdtc::Gaussian(GaussianPdtc::new(mean, cov)?))
    }

    pub fn point_mass(t0: Complex<F>) -> Result<Self> {
        if !(t0.norm() <= F::one()) {
            return Err(Error::invalid("t0", "|T0| must be <= 1"));
        }
        Ok(Pdtc::PointMass(t0))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Pdtc::Model(_) => "model",
            Pdtc::Gaussian(_) => "gaussian",
            Pdtc::PointMass(_) => "point_mass",
        }
    }

    /// Density with respect to `d²T`; `None` for a point mass.
    pub fn density(&self, t: Complex<F>) -> Option<F> {
        match self {
            Pdtc::Model(m) => Some(m.density(t)),
            Pdtc::Gaussian(g) => Some(g.density(t)),
            Pdtc::PointMass(_) => None,
        }
    }

    /// Fraction of the untruncated distribution inside the support.
    pub fn support_mass(&self) -> F {
        match self {
            Pdtc::Model(m) => m.mass(),
            Pdtc::Gaussian(g) => g.disc_mass(),
            Pdtc::PointMass(_) => F::one(),
        }
    }

    /// `E[g(T)]` over the truncated, renormalised distribution.
    pub fn expect<G>(&self, opts: &QuadOptions, g: G) -> Result<Complex<F>>
    where
        G: Fn(Complex<F>) -> Complex<F>,
    {
        self.expect_clipped(None, opts, g)
    }

    /// As [`Self::expect`], excluding `|T| < floor` from the domain. Fails with
    /// [`Error::ClippedMass`] if the excluded region holds more than [`CLIP_LIMIT`].
    pub fn expect_clipped<G>(
        &self,
        floor: Option<F>,
        opts: &QuadOptions,
        g: G,
    ) -> Result<Complex<F>>
    where
        G: Fn(Complex<F>) -> Complex<F>,
    {
        match self {
            Pdtc::PointMass(t0) => Ok(g(*t0)),
            Pdtc::Model(m) => {
                let p = *m.params();
                let mut rect = m.box_rect();
                if let Some(floor) = floor {
                    let theta_cut = -floor.ln();
                    if theta_cut < rect.x1 {
                        let tail_rect =
                            Rect::new(theta_cut.max(rect.x0), rect.x1, rect.y0, rect.y1);
                        let tail = integrate_2d(tail_rect, &tight_opts::<F>(), |th, ph| {
                            Complex::new(p.theta_phi_density(th, ph), F::zero())
                        })?
                        .value
                        .re / m.mass();
                        if tail > F::of(CLIP_LIMIT) {
                            return Err(Error::ClippedMass {
                                mass: tail.as_f64(),
                                limit: CLIP_LIMIT,
                            });
                        }
                        rect.x1 = theta_cut.max(rect.x0);
                    }
                }
                let raw = integrate_2d(rect, opts, |th, ph| {
                    let t = Complex::from_polar((-th).exp(), ph);
                    g(t) * p.theta_phi_density(th, ph)
                })?;
                Ok(raw.value / m.mass())
            }
            Pdtc::Gaussian(gp) => {
                if let Some(floor) = floor {
                    if !gp.is_point() {
                        let inner = Rect::new(F::zero(), floor, -F::PI(), F::PI());
                        let clipped = integrate_2d(inner, &tight_opts::<F>(), |r, phi| {
                            Complex::new(
                                gp.plane_density(Complex::from_polar(r, phi)) * r,
                                F::zero(),
                            )
                        })?
                        .value
                        .re / gp.disc_mass();
                        if clipped > F::of(CLIP_LIMIT) {
                            return Err(Error::ClippedMass {
                                mass: clipped.as_f64(),
                                limit: CLIP_LIMIT,
                            });
                        }
                    }
                }
                let domain = gp.domain(floor)?;
                Ok(gp.integrate_raw(&domain, opts, g)? / gp.disc_mass())
            }
        }
    }

    /// `⟨T*ⁿ Tᵐ⟩` over the truncated support.
    pub fn moment(&self, n: u32, m: u32) -> Result<Complex<F>> {
        if n == 0 && m == 0 {
            return Ok(Complex::new(F::one(), F::zero()));
        }
        if n > m {
            return Ok(self.moment(m, n)?.conj());
        }
        match self {
            Pdtc::PointMass(t0) => Ok(point_moment(*t0, n, m)),
            Pdtc::Model(model) if model.uses_closed_form() => {
                let p = F::from_u32(n + m).unwrap();
                let q = F::from_u32(m).unwrap() - F::from_u32(n).unwrap();
                Ok(model.params().mgf(p, q))
            }
            _ => self.expect(&tight_opts::<F>(), |t| t.conj().powu(n) * t.powu(m)),
        }
    }

    pub fn eta_stats(&self) -> Result<EtaStats<F>> {
        Ok(EtaStats::from_moments(
            self.moment(1, 1)?.re,
            self.moment(2, 2)?.re,
        ))
    }

    /// Bivariate Gaussian whose first and second moments match this PDTC's.
    pub fn normal_approximation(&self) -> Result<GaussianPdtc<F>> {
        match self {
            Pdtc::Gaussian(g) => Ok(*g),
            Pdtc::PointMass(t0) => GaussianPdtc::new([t0.re, t0.im], [[F::zero(); 2]; 2]),
            Pdtc::Model(_) => {
                let m01 = self.moment(0, 1)?;
                let m11 = self.moment(1, 1)?.re;
                let m02 = self.moment(0, 2)?;
                let half = F::of(0.5);
                let (mr, mi) = (m01.re, m01.im);
                let mut crr = half * (m11 + m02.re) - mr * mr;
                let mut cii = half * (m11 - m02.re) - mi * mi;
                let cri = half * m02.im - mr * mi;
                crr = crr.max(F::zero());
                cii = cii.max(F::zero());
                GaussianPdtc::new([mr, mi], [[crr, cri], [cri, cii]])
            }
        }
    }

    /// Smallest eigenvalue of the covariance of `γ T` under the normal approximation.
    pub fn lambda_min_scaled(&self, gamma: Complex<F>) -> Result<F> {
        let g = self.normal_approximation()?;
        Ok((gamma.norm_sqr() * g.cov_sym().min_eigenvalue()).max(F::zero()))
    }

    /// Fails when rejection sampling would accept less than [`MIN_ACCEPTANCE`].
    pub fn check_sampling(&self) -> Result<()> {
        let acc = self.support_mass();
        if acc < F::of(MIN_ACCEPTANCE) {
            return Err(Error::LowAcceptance {
                acceptance: acc.as_f64(),
                minimum: MIN_ACCEPTANCE,
            });
        }
        Ok(())
    }

    /// One draw by rejection from the untruncated distribution. Call
    /// [`Self::check_sampling`] first.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex<F> {
        match self {
            Pdtc::PointMass(t0) => *t0,
            Pdtc::Model(m) => {
                let p = m.params();
                let c = (F::one() - p.s * p.s).sqrt();
                loop {
                    let z0 = F::standard_normal(rng);
                    let z1 = F::standard_normal(rng);
                    let theta = p.theta_bar + p.sigma_theta * z0;
                    let phi = p.sigma_phi * (p.s * z0 + c * z1);
                    if theta >= F::zero() && phi.abs() <= F::PI() {
                        return Complex::from_polar((-theta).exp(), phi);
                    }
                }
            }
            Pdtc::Gaussian(g) => {
                let l = g.factor;
                loop {
                    let z0 = F::standard_normal(rng);
                    let z1 = F::standard_normal(rng);
                    let t = Complex::new(
                        g.mean[0] + l[0][0] * z0 + l[0][1] * z1,
                        g.mean[1] + l[1][0] * z0 + l[1][1] * z1,
                    );
                    if t.norm_sqr() <= F::one() {
                        return t;
                    }
                }
            }
        }
    }

    /// `n` i.i.d. draws; deterministic in `(seed, n)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Complex<F>>> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        self.check_sampling()?;
        let mut rng = rng_from_seed(seed);
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }

    pub fn to_record(&self) -> PdtcRecord {
        match self {
            Pdtc::Model(m) => {
                let p = m.params();
                PdtcRecord::Model {
                    theta_bar: p.theta_bar.as_f64(),
                    sigma_theta: p.sigma_theta.as_f64(),
                    sigma_phi: p.sigma_phi.as_f64(),
                    s: p.s.as_f64(),
                }
            }
            Pdtc::Gaussian(g) => {
                let c = g.cov();
                PdtcRecord::Gaussian {
                    mean_re: g.mean[0].as_f64(),
                    mean_im: g.mean[1].as_f64(),
                    cov_rr: c[0][0].as_f64(),
                    cov_ri: c[0][1].as_f64(),
                    cov_ii: c[1][1].as_f64(),
                }
            }
            Pdtc::PointMass(t0) => PdtcRecord::PointMass {
                t0_re: t0.re.as_f64(),
                t0_im: t0.im.as_f64(),
            },
        }
    }

    pub fn from_record(rec: &PdtcRecord) -> Result<Self> {
        match *rec {
            PdtcRecord::Model {
                theta_bar,
                sigma_theta,
                sigma_phi,
                s,
            } => Pdtc::model(TurbulenceModelParams::new(
                F::of(theta_bar),
                F::of(sigma_theta),
                F::of(sigma_phi),
                F::of(s),
            )?),
            PdtcRecord::Gaussian {
                mean_re,
                mean_im,
                cov_rr,
                cov_ri,
                cov_ii,
            } => Pdtc::gaussian(
                [F::of(mean_re), F::of(mean_im)],
                [
                    [F::of(cov_rr), F::of(cov_ri)],
                    [F::of(cov_ri), F::of(cov_ii)],
                ],
            ),
            PdtcRecord::PointMass { t0_re, t0_im } => {
                Pdtc::point_mass(Complex::new(F::of(t0_re), F::of(t0_im)))
            }
        }
    }
}

fn point_moment<F: Real>(t0: Complex<F>, n: u32, m: u32) -> Complex<F> {
    // |T0|^{2n} · T0^{m-n} keeps η-moments exact powers of |T0|²
    let eta = t0.norm_sqr();
    t0.powu(m - n) * eta.powi(n as i32)
}

/// `⟨T*ⁿ Tᵐ⟩`.
pub fn pdtc_moments<F: Real>(pdtc: &Pdtc<F>, n: u32, m: u32) -> Result<Complex<F>> {
    pdtc.moment(n, m)
}

/// Moment-matched Gaussian approximation of the turbulence model.
pub fn normal_approximation<F: Real>(params: &TurbulenceModelParams<F>) -> Result<GaussianPdtc<F>> {
    Pdtc::model(*params)?.normal_approximation()
}

/// Flat key-value form of a PDTC, as stored in configs and manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdtcRecord {
    Model {
        theta_bar: f64,
        sigma_theta: f64,
        sigma_phi: f64,
        s: f64,
    },
    Gaussian {
        mean_re: f64,
        mean_im: f64,
        cov_rr: f64,
        cov_ri: f64,
        cov_ii: f64,
    },
    PointMass {
        t0_re: f64,
        t0_im: f64,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> TurbulenceModelParams<f64> {
        TurbulenceModelParams::new(0.9, 0.2, 0.2, 0.01).unwrap()
    }

    fn fig2() -> TurbulenceModelParams<f64> {
        TurbulenceModelParams::new(0.3, 0.1, 0.14, 0.01).unwrap()
    }

    #[test]
    fn density_at_exponent_zero_point() {
        let t = (-0.9_f64).exp();
        let v = density_model(t, 0.0, &fig3()).unwrap();
        let expected = 1.0 / (std::f64::consts::TAU * t * 0.04 * (1.0 - 1e-4_f64).sqrt());
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 9.787).abs() < 1e-3);
    }

    #[test]
    fn density_rejects_nonpositive_t() {
        assert!(matches!(
            density_model(0.0, 0.0, &fig3()),
            Err(Error::Domain(_))
        ));
        assert!(density_model(-0.1, 0.0, &fig3()).is_err());
    }

    #[test]
    fn zero_correlation_factorises() {
        let p = TurbulenceModelParams::new(0.5, 0.1, 0.3, 0.0).unwrap();
        for &(t, phi) in &[(0.6_f64, 0.1_f64), (0.3, -0.4), (0.9, 0.05)] {
            let lnt: f64 = t.ln();
            let logn = (-(lnt + 0.5).powi(2) / (2.0 * 0.01)).exp()
                / (t * 0.1 * (std::f64::consts::TAU).sqrt());
            let norm = (-(phi * phi) / (2.0 * 0.09)).exp() / (0.3 * std::f64::consts::TAU.sqrt());
            let v = density_model(t, phi, &p).unwrap();
            assert!((v - logn * norm).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn warnings_flag_validity_domain() {
        let p = TurbulenceModelParams::new(0.1, 0.2, 1.5, 0.0).unwrap();
        assert_eq!(
            p.warnings(),
            vec![
                ValidityWarning::SigmaThetaNotSmall,
                ValidityWarning::SigmaPhiNotSmall
            ]
        );
        assert!(fig3().in_validity_domain());
        assert!(TurbulenceModelParams::new(0.1, 0.0, 0.1, 0.0).is_err());
        assert!(TurbulenceModelParams::new(0.1, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn point_mass_moments_and_sampling() {
        let t0 = Complex::new((-0.3_f64).exp(), 0.0);
        let p = Pdtc::point_mass(t0).unwrap();
        assert!((p.moment(1, 1).unwrap().re - (-0.6_f64).exp()).abs() < 1e-15);
        assert!((p.moment(1, 1).unwrap().re - 0.5488).abs() < 1e-4);
        assert_eq!(p.eta_stats().unwrap().var_eta, 0.0);
        assert!(p.sample(10, 3).unwrap().iter().all(|t| *t == t0));
        assert!(Pdtc::point_mass(Complex::new(1.0, 0.1)).is_err());
    }

    #[test]
    fn zeroth_moment_is_exactly_one() {
        for p in [Pdtc::model(fig2()).unwrap(), Pdtc::model(fig3()).unwrap()] {
            assert_eq!(p.moment(0, 0).unwrap(), Complex::new(1.0, 0.0));
        }
    }

    #[test]
    fn closed_form_gate_follows_truncated_mass() {
        let a =
            LogNormalPdtc::new(TurbulenceModelParams::new(0.9, 0.15, 0.2, 0.01).unwrap()).unwrap();
        assert!(a.uses_closed_form());
        let b = LogNormalPdtc::new(fig2()).unwrap();
        assert!(!b.uses_closed_form());
        assert!((b.truncated_mass() - 1.349898e-3).abs() < 1e-8);
    }

    #[test]
    fn degenerate_limit_of_normal_approximation() {
        let p = TurbulenceModelParams::new(0.4, 1e-6, 1e-6, 0.0).unwrap();
        let g = normal_approximation(&p).unwrap();
        assert!((g.mean()[0] - (-0.4_f64).exp()).abs() < 1e-9);
        assert!(g.mean()[1].abs() < 1e-12);
        let c = g.cov();
        assert!(c[0][0].abs() < 1e-11 && c[1][1].abs() < 1e-11 && c[0][1].abs() < 1e-11);
    }

    #[test]
    fn gaussian_rejects_bad_covariances() {
        assert!(GaussianPdtc::new([0.5, 0.0], [[0.01, 0.02], [0.0, 0.01]]).is_err());
        assert!(GaussianPdtc::new([0.5, 0.0], [[0.01, 0.02], [0.02, 0.01]]).is_err());
        let g = GaussianPdtc::new([0.5, 0.0], [[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(g.is_point());
        assert_eq!(g.disc_mass(), 1.0);
    }

    #[test]
    fn wide_gaussian_sets_warning_state() {
        let g = GaussianPdtc::new([0.9, 0.0], [[0.04, 0.0], [0.0, 0.04]]).unwrap();
        assert!(g.low_disc_mass());
        let tight = GaussianPdtc::new([0.4, 0.0], [[0.007, 0.0], [0.0, 0.007]]).unwrap();
        assert!(!tight.low_disc_mass());
    }

    #[test]
    fn sampling_refuses_hopeless_support() {
        let g = Pdtc::gaussian([30.0, 0.0], [[0.01, 0.0], [0.0, 0.01]]).unwrap();
        assert!(matches!(g.sample(5, 1), Err(Error::LowAcceptance { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = Pdtc::model(fig3()).unwrap();
        assert_eq!(p.sample(100, 42).unwrap(), p.sample(100, 42).unwrap());
        assert_ne!(p.sample(100, 42).unwrap(), p.sample(100, 43).unwrap());
    }

    #[test]
    fn lambda_min_isotropic_and_zero() {
        let s2 = 0.003_f64;
        let p = Pdtc::gaussian([0.3, 0.1], [[s2, 0.0], [0.0, s2]]).unwrap();
        assert_eq!(p.lambda_min_scaled(Complex::new(0.0, 0.0)).unwrap(), 0.0);
        for g in [Complex::new(2.0, 0.0), Complex::new(-1.0, 3.0)] {
            let l = p.lambda_min_scaled(g).unwrap();
            assert!((l - g.norm_sqr() * s2).abs() < 1e-15);
        }
    }

    #[test]
    fn record_round_trip() {
        let p = Pdtc::model(fig3()).unwrap();
        let json = serde_json::to_string(&p.to_record()).unwrap();
        assert!(json.contains("\"kind\":\"model\""));
        let back: PdtcRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Pdtc::<f64>::from_record(&back).unwrap(), p);
    }

    #[test]
    fn single_precision_model() {
        let p = Pdtc::model(TurbulenceModelParams::new(0.9_f32, 0.2, 0.2, 0.01).unwrap()).unwrap();
        let eta = p.moment(1, 1).unwrap().re;
        assert!((eta - (-1.72_f32).exp()).abs() < 1e-4);
    }
}
