use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{PI, TAU};
use turbulight::quadrature::{integrate_2d, Rect};
use turbulight::{density_model, normal_approximation, Pdtc64, QuadOptions, TurbulenceModelParams};

fn model(tb: f64, st: f64, sp: f64, s: f64) -> Pdtc64 {
    Pdtc64::model(TurbulenceModelParams::<f64>::new(tb, st, sp, s).unwrap()).unwrap()
}

fn fig2() -> Pdtc64 {
    model(0.3, 0.1, 0.14, 0.01)
}

fn fig3() -> Pdtc64 {
    model(0.9, 0.2, 0.2, 0.01)
}

/// `∫ density d²T` over the unit disc in polar coordinates.
fn disc_mass(p: &Pdtc64) -> f64 {
    let opts = QuadOptions::default()
        .with_tol(1e-10)
        .with_initial_splits(8);
    integrate_2d(Rect::new(0.0, 1.0, -PI, PI), &opts, |r, phi| {
        Complex::new(r * p.density(Complex::from_polar(r, phi)).unwrap(), 0.0)
    })
    .unwrap()
    .value
    .re
}

#[test]
fn densities_normalise_on_the_disc() {
    for p in [
        fig2(),
        fig3(),
        Pdtc64::gaussian([0.5, 0.05], [[0.004, 0.0005], [0.0005, 0.006]]).unwrap(),
    ] {
        let m = disc_mass(&p);
        assert!((m - 1.0).abs() < 1e-6, "{} mass {m}", p.kind());
    }
}

#[test]
fn raw_model_density_example() {
    let p = TurbulenceModelParams::<f64>::new(0.9, 0.2, 0.2, 0.01).unwrap();
    let t = (-0.9_f64).exp();
    let want = 1.0 / (TAU * t * 0.04 * (1.0 - 1e-4_f64).sqrt());
    let got = density_model(t, 0.0, &p).unwrap();
    assert!((got - want).abs() < 1e-12 * want);
    assert!((got - 9.787).abs() < 1e-3);
}

#[test]
fn eta_statistics_golden_values() {
    let s = fig3().eta_stats().unwrap();
    // Untruncated log-normal values; truncation at θ < 0 removes Φ(−4.5) ≈ 3.4e-6.
    assert!((s.mean_eta - (-1.72_f64).exp()).abs() < 1e-5);
    assert!((s.mean_eta_sq - (-3.28_f64).exp()).abs() < 1e-5);
    assert!((s.mean_eta - 0.1791).abs() < 5e-5);
    assert!((s.mean_eta_sq - 0.0376).abs() < 5e-5);
    assert_eq!(s.var_eta, s.mean_eta_sq - s.mean_eta * s.mean_eta);

    let s2 = fig2().eta_stats().unwrap();
    assert!((s2.mean_eta - 0.5599).abs() / 0.5599 < 1.5e-3);
    assert!((s2.mean_eta - 0.5592226468172152).abs() < 1e-12);

    let pm = Pdtc64::point_mass(Complex::new((-0.3_f64).exp(), 0.0)).unwrap();
    assert!((pm.moment(1, 1).unwrap().re - (-0.6_f64).exp()).abs() < 1e-15);
    assert_eq!(pm.eta_stats().unwrap().var_eta, 0.0);
}

#[test]
fn normal_approximation_golden_values() {
    let g = normal_approximation(&TurbulenceModelParams::<f64>::new(0.9, 0.2, 0.2, 0.01).unwrap())
        .unwrap();
    let [mr, mi] = g.mean();
    let c = g.cov();
    assert!((mr - 0.406567536679707).abs() < 1e-12);
    assert!((mi + 1.62595689118059e-4).abs() < 1e-14);
    assert!((c[0][0] - 6.88227883274392e-3).abs() < 1e-14);
    assert!((c[0][1] + 6.61011347873431e-5).abs() < 1e-15);
    assert!((c[1][1] - 6.88359009713523e-3).abs() < 1e-14);

    let g = normal_approximation(&TurbulenceModelParams::<f64>::new(0.3, 0.1, 0.14, 0.01).unwrap())
        .unwrap();
    let c = g.cov();
    assert!((g.mean()[0] - 0.736889936515262).abs() < 1e-12);
    assert!((c[0][0] - 5.46714015135163e-3).abs() < 1e-14);
    assert!((c[1][1] - 1.07487187170261e-2).abs() < 1e-13);
}

/// Monte Carlo over `(θ, φ)` with the support cut applied, drawn without the
/// library's sampler.
fn mc_moments(
    tb: f64,
    st: f64,
    sp: f64,
    s: f64,
    n: usize,
    seed: u64,
) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (1.0 - s * s).sqrt();
    let (mut sr, mut si, mut srr, mut sri, mut sii) = (0.0_f64, 0.0, 0.0, 0.0, 0.0);
    let mut k = 0usize;
    while k < n {
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        let theta = tb + st * z0;
        let phi = sp * (s * z0 + c * z1);
        if theta < 0.0 || phi.abs() > PI {
            continue;
        }
        let t = Complex::from_polar((-theta).exp(), phi);
        sr += t.re;
        si += t.im;
        srr += t.re * t.re;
        sri += t.re * t.im;
        sii += t.im * t.im;
        k += 1;
    }
    let nf = n as f64;
    let (mr, mi) = (sr / nf, si / nf);
    let cov = [
        [srr / nf - mr * mr, sri / nf - mr * mi],
        [sri / nf - mr * mi, sii / nf - mi * mi],
    ];
    let se = (cov[0][0] / nf).sqrt();
    ([mr, mi], cov, se)
}

#[test]
fn normal_approximation_matches_monte_carlo() {
    let g = normal_approximation(&TurbulenceModelParams::<f64>::new(0.3, 0.1, 0.14, 0.01).unwrap())
        .unwrap();
    let (mean, cov, se) = mc_moments(0.3, 0.1, 0.14, 0.01, 10_000_000, 11);
    assert!((mean[0] - g.mean()[0]).abs() < 5.0 * se);
    assert!((mean[1] - g.mean()[1]).abs() < 5.0 * (cov[1][1] / 1e7).sqrt());
    for (i, (row, want)) in cov.iter().zip(g.cov()).enumerate() {
        for (j, (v, w)) in row.iter().zip(want).enumerate() {
            assert!((v - w).abs() < 2e-5, "cov[{i}][{j}]");
        }
    }
}

#[test]
fn uncorrelated_isotropic_model_has_axis_aligned_covariance() {
    let g = normal_approximation(&TurbulenceModelParams::<f64>::new(0.5, 0.15, 0.15, 0.0).unwrap())
        .unwrap();
    let (_, cov, _) = mc_moments(0.5, 0.15, 0.15, 0.0, 1_000_000, 5);
    let stat = (cov[0][0] * cov[1][1] / 1e6).sqrt();
    assert!(g.cov()[0][1].abs() < stat);
    assert!(cov[0][1].abs() < 5.0 * stat);
}

#[test]
fn degenerate_limit_is_a_point_mass() {
    let g = normal_approximation(&TurbulenceModelParams::<f64>::new(0.4, 1e-6, 1e-6, 0.0).unwrap())
        .unwrap();
    assert!((g.mean()[0] - (-0.4_f64).exp()).abs() < 1e-9);
    assert!(g.cov().iter().flatten().all(|c| c.abs() < 1e-11));
}

#[test]
fn tight_gaussian_sample_mean() {
    let p = Pdtc64::gaussian([0.5, 0.0], [[1e-6, 0.0], [0.0, 1e-6]]).unwrap();
    let n = 100_000;
    let xs = p.sample(n, 3).unwrap();
    let m = xs.iter().sum::<Complex<f64>>() / n as f64;
    let tol = 4.0 * 1e-3 / (n as f64).sqrt();
    assert!((m.re - 0.5).abs() < tol && m.im.abs() < tol);
}

#[test]
fn point_mass_samples_are_constant() {
    let t0 = Complex::new(0.3, -0.2);
    let xs = Pdtc64::point_mass(t0).unwrap().sample(100, 1).unwrap();
    assert!(xs.iter().all(|&t| t == t0));
}

/// Empirical `⟨T*ⁿ Tᵐ⟩` from `n_samples` draws agree with the analytic moments
/// within five standard errors, for every `n + m ≤ 4`.
fn check_sampled_moments(p: &Pdtc64, seed: u64) {
    let n_samples = 1_000_000;
    let xs = p.sample(n_samples, seed).unwrap();
    assert!(xs.iter().all(|t| t.norm_sqr() <= 1.0));
    for n in 0..=4u32 {
        for m in 0..=(4 - n) {
            let f = |t: &Complex<f64>| t.conj().powu(n) * t.powu(m);
            let mean = xs.iter().map(f).sum::<Complex<f64>>() / n_samples as f64;
            let var =
                xs.iter().map(|t| (f(t) - mean).norm_sqr()).sum::<f64>() / (n_samples - 1) as f64;
            let se = (var / n_samples as f64).sqrt().max(1e-15);
            let exact = p.moment(n, m).unwrap();
            assert!(
                (mean - exact).norm() < 5.0 * se,
                "{} ({n},{m}): {mean} vs {exact}, se {se}",
                p.kind()
            );
        }
    }
}

#[test]
fn sampling_agrees_with_analytic_moments() {
    check_sampled_moments(&fig3(), 21);
    check_sampled_moments(&fig2(), 22);
    check_sampled_moments(
        &fig3().normal_approximation().map(Pdtc64::Gaussian).unwrap(),
        23,
    );
}

fn params() -> impl Strategy<Value = Pdtc64> {
    prop_oneof![
        (0.05..1.5f64, 0.01..0.3f64, 0.01..0.5f64, -0.9..0.9f64)
            .prop_map(|(tb, st, sp, s)| model(tb, st, sp, s)),
        (
            0.1..0.7f64,
            -0.2..0.2f64,
            0.001..0.01f64,
            0.001..0.01f64,
            -0.5..0.5f64
        )
            .prop_map(|(mr, mi, a, b, r)| {
                let c = r * (a * b).sqrt();
                Pdtc64::gaussian([mr, mi], [[a, c], [c, b]]).unwrap()
            }),
        (0.0..1.0f64, -PI..PI)
            .prop_map(|(r, phi)| Pdtc64::point_mass(Complex::from_polar(r, phi)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moments_are_conjugate_symmetric_and_bounded(p in params()) {
        for n in 0..=4u32 {
            for m in 0..=4u32 {
                let a = p.moment(n, m).unwrap();
                let b = p.moment(m, n).unwrap();
                prop_assert!((a - b.conj()).norm() <= 1e-12, "({n},{m}) {a} vs {b}");
                prop_assert!(a.norm() <= 1.0 + 1e-12);
            }
        }
        prop_assert_eq!(p.moment(0, 0).unwrap(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn efficiency_moments_do_not_increase(p in params()) {
        let mut prev = 1.0;
        for k in 1..=4u32 {
            let v = p.moment(k, k).unwrap().re;
            prop_assert!(v <= prev + 1e-14, "k = {k}: {v} > {prev}");
            prev = v;
        }
        let s = p.eta_stats().unwrap();
        prop_assert!(s.mean_eta_sq >= s.mean_eta * s.mean_eta - 1e-15);
    }

    #[test]
    fn records_round_trip(p in params()) {
        let back = Pdtc64::from_record(&p.to_record()).unwrap();
        prop_assert_eq!(back, p);
    }
}

/// Truncated-normal oracle: `E[e^{−kθ} | θ ≥ 0]` for `θ ~ N(θ̄, σ²)`, whose
/// phase marginal stays far inside `|φ| ≤ π`.
fn truncated_lognormal_moment(k: f64, tb: f64, st: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0).unwrap();
    let shifted = tb - k * st * st;
    (-k * tb + 0.5 * k * k * st * st).exp() * z.cdf(shifted / st) / z.cdf(tb / st)
}

#[test]
fn truncation_matches_the_truncated_normal() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0).unwrap();
    for (tb, st, sp) in [(0.3, 0.1, 0.14), (0.9, 0.2, 0.2)] {
        let p = model(tb, st, sp, 0.01);
        let Pdtc64::Model(m) = &p else { unreachable!() };
        assert!((m.truncated_mass() - z.cdf(-tb / st)).abs() < 1e-9, "{tb}");
        let eta = p.eta_stats().unwrap();
        assert!((eta.mean_eta - truncated_lognormal_moment(2.0, tb, st)).abs() < 1e-9);
        assert!((eta.mean_eta_sq - truncated_lognormal_moment(4.0, tb, st)).abs() < 1e-9);
    }
}
