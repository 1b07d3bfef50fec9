use num_complex::Complex;
use proptest::prelude::*;
use std::f64::consts::PI;
use turbulight::homodyne::{char_fn_exact_with, simulate_char_fn};
use turbulight::reconstruct::BetaPoint;
use turbulight::{
    char_fn_exact, estimate_char_fn, simulate_records, LocalOscillator, Pdtc64, QuadOptions,
    TurbulenceModelParams, C64,
};

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn fig3() -> Pdtc64 {
    Pdtc64::model(TurbulenceModelParams::new(0.9, 0.2, 0.2, 0.01).unwrap()).unwrap()
}

fn fig3_gaussian() -> Pdtc64 {
    Pdtc64::Gaussian(fig3().normal_approximation().unwrap())
}

fn tight() -> QuadOptions {
    QuadOptions::default().with_tol(1e-12)
}

#[test]
fn gaussian_channel_matches_closed_form() {
    let (mean, cov) = ([0.5, 0.1], [[1.2e-3, 3e-4], [3e-4, 8e-4]]);
    let p = Pdtc64::gaussian(mean, cov).unwrap();
    let gamma = c(3.0, -1.0);
    for beta in [c(0.4, 0.0), c(-1.0, 0.7), c(0.3, 2.2), c(2.5, -2.0)] {
        let a = beta * gamma.conj();
        let k = [2.0 * a.im, -2.0 * a.re];
        let km = k[0] * mean[0] + k[1] * mean[1];
        let kck = k[0] * k[0] * cov[0][0] + 2.0 * k[0] * k[1] * cov[0][1] + k[1] * k[1] * cov[1][1];
        let want = Complex::from_polar((-0.5 * kck).exp(), km);
        let got = char_fn_exact_with(gamma, &p, beta, &tight()).unwrap();
        assert!((got - want).norm() < 1e-8, "{beta}: {got} vs {want}");
    }
}

#[test]
fn lattice_points_probe_fourier_phases() {
    let p = fig3();
    let gamma = c(20.0, 0.0);
    for (m, n) in [(1, 0), (0, 1), (3, -2), (5, 7)] {
        let b = BetaPoint::new(gamma, m, n);
        let via_beta = char_fn_exact(gamma, &p, b.beta).unwrap();
        let (mf, nf) = (m as f64, n as f64);
        let direct = p
            .expect(&QuadOptions::default(), |t| {
                Complex::from_polar(1.0, PI * (nf * t.re - mf * t.im))
            })
            .unwrap();
        assert!((via_beta - direct).norm() < 1e-12, "({m},{n})");
    }
    let t0 = c(0.3, -0.2);
    let b = BetaPoint::new(c(2.0, 1.0), 2, 3);
    let got = char_fn_exact(c(2.0, 1.0), &Pdtc64::point_mass(t0).unwrap(), b.beta).unwrap();
    let want = Complex::from_polar(1.0, PI * (3.0 * t0.re - 2.0 * t0.im));
    assert!((got - want).norm() < 1e-14);
}

#[test]
fn mean_quadrature_tracks_mean_transmission() {
    let p = fig3();
    let gamma = 20.0;
    let n = 200_000;
    let recs = simulate_records(
        c(gamma, 0.0),
        &p,
        LocalOscillator::new(50.0, 0.0).unwrap(),
        n,
        9,
    )
    .unwrap();
    let xs: Vec<f64> = recs.iter().map(|r| r.delta_n / r.lo.amplitude_r).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let want = 2.0 * gamma * p.moment(0, 1).unwrap().re;
    assert!(
        (mean - want).abs() < 5.0 * (var / n as f64).sqrt(),
        "{mean} vs {want}"
    );
}

/// Estimates at `N = 10⁴` over 200 seeds average to the exact value within four
/// propagated standard errors of the mean.
#[test]
fn estimator_is_unbiased() {
    let p = fig3_gaussian();
    let gamma = c(20.0, 0.0);
    let n = 10_000;
    for beta in [c(0.5, 0.0), c(0.6, 0.8), BetaPoint::new(gamma, 3, 4).beta] {
        let exact = char_fn_exact(gamma, &p, beta).unwrap();
        let ests: Vec<_> = (0..200)
            .map(|s| simulate_char_fn(gamma, &p, 100.0, beta, n, s).unwrap())
            .collect();
        let mean = ests.iter().map(|e| e.value).sum::<C64>() / 200.0;
        let se = ests[0].std_error / 200f64.sqrt();
        assert!(
            (mean.re - exact.re).abs() < 4.0 * se,
            "{beta} re: {mean} vs {exact}"
        );
        assert!(
            (mean.im - exact.im).abs() < 4.0 * se,
            "{beta} im: {mean} vs {exact}"
        );
    }
}

/// The spread of repeated estimates follows `e^{|β|²/2}/√N` within a factor of 2.
#[test]
fn error_scales_like_the_propagated_bound() {
    let p = fig3_gaussian();
    let gamma = c(20.0, 0.0);
    for (k, n) in [(0.5, 10_000), (1.0, 10_000), (2.0, 20_000)] {
        let beta = c(0.0, k);
        let exact = char_fn_exact(gamma, &p, beta).unwrap();
        let ests: Vec<_> = (0..200)
            .map(|s| simulate_char_fn(gamma, &p, 100.0, beta, n, 1000 + s).unwrap())
            .collect();
        let rms = (ests
            .iter()
            .map(|e| (e.value - exact).norm_sqr())
            .sum::<f64>()
            / 200.0)
            .sqrt();
        let bound = (k * k / 2.0).exp() / (n as f64).sqrt();
        assert_eq!(ests[0].std_error, bound);
        let ratio = rms / bound;
        assert!((0.5..=2.0).contains(&ratio), "|beta| = {k}: ratio {ratio}");
    }
}

#[test]
fn stored_records_give_the_streamed_estimate() {
    let p = fig3_gaussian();
    let gamma = c(20.0, 0.0);
    let beta = BetaPoint::new(gamma, -2, 5).beta;
    let lo = LocalOscillator::for_beta(100.0, beta).unwrap();
    let recs = simulate_records(gamma, &p, lo, 4000, 77).unwrap();
    assert_eq!(
        estimate_char_fn(&recs, beta).unwrap(),
        simulate_char_fn(gamma, &p, 100.0, beta, 4000, 77).unwrap()
    );
}

fn channel() -> impl Strategy<Value = Pdtc64> {
    prop_oneof![
        (0.1..1.2f64, 0.02..0.25f64, 0.02..0.4f64, -0.5..0.5f64).prop_map(|(tb, st, sp, s)| {
            Pdtc64::model(TurbulenceModelParams::new(tb, st, sp, s).unwrap()).unwrap()
        }),
        (0.2..0.6f64, -0.1..0.1f64, 0.0005..0.005f64).prop_map(|(mr, mi, v)| Pdtc64::gaussian(
            [mr, mi],
            [[v, 0.2 * v], [0.2 * v, 1.5 * v]]
        )
        .unwrap()),
        (0.0..1.0f64, -PI..PI)
            .prop_map(|(r, a)| Pdtc64::point_mass(Complex::from_polar(r, a)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn char_fn_is_hermitian(p in channel(), g in (0.5..5.0f64, -2.0..2.0f64), b in (-2.0..2.0f64, -2.0..2.0f64)) {
        let gamma = c(g.0, g.1);
        let beta = c(b.0, b.1);
        let plus = char_fn_exact(gamma, &p, beta).unwrap();
        let minus = char_fn_exact(gamma, &p, -beta).unwrap();
        prop_assert!((plus - minus.conj()).norm() <= 1e-12, "{plus} vs {minus}");
        prop_assert!(plus.norm() <= 1.0 + 1e-12);
    }
}
