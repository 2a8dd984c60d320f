use std::f64::consts::PI;

use proptest::prelude::*;
use qprep::hamiltonian::AffineNormalizer;
use qprep::linalg::C64;
use qprep::refine::{
    coarse_qpe_postselect, erf_chebyshev, gaussian_case_study, qetu_filter, qetu_params, symmetric_filter, xi_exact,
    CaseStudyConfig, Parity, QetuFrame, RefineError,
};
use qprep::spectra::SpectralMeasure;

fn measure(pairs: &[(f64, f64)]) -> SpectralMeasure {
    SpectralMeasure::from_weights(pairs, AffineNormalizer::IDENTITY).unwrap()
}

/// Probability of outcome `x` from textbook QPE on eigenphase `e`.
fn circuit_prob(k: u32, e: f64, x: u64) -> f64 {
    let n = 1u64 << k;
    let amp: C64 = (0..n).map(|j| C64::from_polar(1.0 / n as f64, 2.0 * PI * j as f64 * (e - x as f64 / n as f64))).sum();
    amp.norm_sqr()
}

/// `Σ_j c_j T_j(x)` via `T_j(cos t) = cos(j t)`.
fn chebyshev_sum(c: &[f64], x: f64) -> f64 {
    let t = x.clamp(-1.0, 1.0).acos();
    c.iter().enumerate().map(|(j, cj)| cj * (j as f64 * t).cos()).sum()
}

/// `e^{−z} I_j(z)` from the power series, summed in log space.
fn scaled_bessel(j: usize, z: f64) -> f64 {
    let half = (0.5 * z).ln();
    (0..4000)
        .map(|m| {
            let log_term = (2 * m + j) as f64 * half - libm::lgamma(m as f64 + 1.0) - libm::lgamma((m + j) as f64 + 1.0) - z;
            log_term.exp()
        })
        .sum()
}

/// Sum of the absolute Chebyshev coefficients dropped when the erf expansion at
/// steepness `k` is cut at odd degree `n`; bounds the sup-norm error on `[−1, 1]`.
fn erf_truncation_bound(k: f64, n: usize) -> f64 {
    let z = 0.5 * k * k;
    let j0 = (n - 1) / 2 + 1;
    let pref = 2.0 * k / PI.sqrt();
    (j0..j0 + 400).map(|j| pref * scaled_bessel(j, z) * (1.0 / (2 * j + 1) as f64 + 1.0 / (2 * j - 1) as f64)).sum()
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| -1.0 + 2.0 * i as f64 / n as f64)
}

#[test]
fn postselection_is_bayes_update() {
    let pairs = [(0.02, 0.3), (0.11, 0.4), (0.4, 0.3)];
    let m = measure(&pairs);
    let accepted = [0u64, 1, 15];
    let r = coarse_qpe_postselect(&m, 4, &accepted).unwrap();
    let likelihood: Vec<f64> = pairs.iter().map(|&(e, _)| accepted.iter().map(|&x| circuit_prob(4, e, x)).sum()).collect();
    let evidence: f64 = pairs.iter().zip(&likelihood).map(|(p, l)| p.1 * l).sum();
    assert!((r.success_prob - evidence).abs() < 1e-12);
    for ((l, p), lk) in r.posterior.levels().iter().zip(&pairs).zip(&likelihood) {
        assert!((l.weight - p.1 * lk / evidence).abs() < 1e-12);
    }
    assert_eq!(r.query_cost, 16);
}

#[test]
fn accepting_everything_changes_nothing() {
    let m = measure(&[(0.13, 0.5), (0.77, 0.5)]);
    let all: Vec<u64> = (0..32).collect();
    let r = coarse_qpe_postselect(&m, 5, &all).unwrap();
    assert!((r.success_prob - 1.0).abs() < 1e-12);
    for (a, b) in r.posterior.levels().iter().zip(m.levels()) {
        assert!((a.weight - b.weight).abs() < 1e-12);
    }
    let dup = coarse_qpe_postselect(&m, 5, &[3, 3, 3]).unwrap();
    let single = coarse_qpe_postselect(&m, 5, &[3]).unwrap();
    assert_eq!(dup.success_prob, single.success_prob);
}

#[test]
fn postselection_errors() {
    let m = measure(&[(5.0 / 16.0, 1.0)]);
    assert!(matches!(coarse_qpe_postselect(&m, 0, &[0]), Err(RefineError::InvalidParameter(_))));
    assert!(matches!(coarse_qpe_postselect(&m, 4, &[16]), Err(RefineError::InvalidParameter(_))));
    assert!(matches!(coarse_qpe_postselect(&m, 4, &[]), Err(RefineError::PosteriorUndefined)));
}

#[test]
fn erf_approximant_converges() {
    for (k, n) in [(2.0, 9), (2.0, 21), (5.0, 41), (10.0, 81), (20.0, 121)] {
        let p = erf_chebyshev(k, n).unwrap();
        assert_eq!(p.parity, Parity::Odd);
        assert_eq!(p.degree(), n);
        let worst = grid(2000).map(|x| (p.eval(x) - libm::erf(k * x)).abs()).fold(0.0, f64::max);
        let bound = erf_truncation_bound(k, n);
        assert!(worst <= bound * (1.0 + 1e-6) + 1e-14, "k={k} n={n}: {worst} > {bound}");
        for x in grid(50) {
            assert!((p.eval(x) + p.eval(-x)).abs() < 1e-14);
            assert!((p.eval(x) - chebyshev_sum(&p.chebyshev_coeffs, x)).abs() < 1e-12);
        }
    }
    assert!(erf_chebyshev(2.0, 20).is_err());
    assert!(erf_chebyshev(0.0, 21).is_err());
}

#[test]
fn erf_error_decreases_with_degree() {
    let k = 8.0;
    let errs: Vec<f64> = [11, 21, 41, 61]
        .iter()
        .map(|&n| {
            let p = erf_chebyshev(k, n).unwrap();
            grid(1000).map(|x| (p.eval(x) - libm::erf(k * x)).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn symmetric_filter_tracks_the_window_function() {
    let (k, mu) = (12.0, 0.55);
    let p = symmetric_filter(k, mu, 160).unwrap();
    assert_eq!(p.parity, Parity::Even);
    assert!(p.chebyshev_coeffs.iter().skip(1).step_by(2).all(|c| *c == 0.0));
    let worst = grid(2000).map(|x| (p.eval(x) - xi_exact(k, mu, x)).abs()).fold(0.0, f64::max);
    let bound = erf_truncation_bound(2.0 * k, 161);
    assert!(worst <= bound * (1.0 + 1e-6) + 1e-13, "{worst} > {bound}");
    assert!(grid(2000).all(|x| p.eval(x).abs() <= 1.0 + bound + 1e-13));
    assert!(symmetric_filter(k, mu, 161).is_err());
    assert!(symmetric_filter(k, 1.5, 160).is_err());
}

#[test]
fn window_function_shape() {
    let (k, mu) = (40.0, 0.5);
    assert!((xi_exact(k, mu, 0.0) - 1.0).abs() < 1e-12);
    assert!(xi_exact(k, mu, 0.95).abs() < 1e-12);
    assert!((xi_exact(k, mu, mu) - 0.5).abs() < 1e-12);
    assert_eq!(xi_exact(k, mu, 0.3), xi_exact(k, mu, -0.3));
}

#[test]
fn qetu_parameters_closed_form() {
    let frame = QetuFrame { eta: 0.1 };
    assert!((frame.theta(0.0) - (-PI + 0.1)).abs() < 1e-15);
    assert!((frame.theta(1.0) + 0.1).abs() < 1e-15);
    let (tl, tu) = (frame.theta(0.2), frame.theta(0.4));
    let p = qetu_params(tl, tu, 2.0).unwrap();
    let (cl, cu) = ((tl / 2.0).cos(), (tu / 2.0).cos());
    assert!((p.mu - (cl + cu) / 2.0).abs() < 1e-15);
    assert!((1.0 / p.k_steep - (cu - cl)).abs() < 1e-15);
    assert!(matches!(qetu_params(tl, tl, 1.0), Err(RefineError::DegenerateWindow)));
    assert!(qetu_params(tu, tl, 1.0).is_err());
    assert!(qetu_params(tl, tu, 0.0).is_err());
}

#[test]
fn qetu_filter_success_probability() {
    let m = measure(&[(0.01, 0.2), (0.05, 0.3), (0.3, 0.5)]);
    let frame = QetuFrame::default();
    let params = qetu_params(frame.theta(0.02), frame.theta(0.08), 1.0).unwrap();
    let poly = symmetric_filter(params.k_steep, params.mu, 120).unwrap();
    let r = qetu_filter(&m, &poly, frame).unwrap();
    let by_hand: f64 = m
        .levels()
        .iter()
        .map(|l| l.weight * chebyshev_sum(&poly.chebyshev_coeffs, (frame.theta(l.energy) / 2.0).cos()).powi(2))
        .sum();
    assert!((r.success_prob - by_hand).abs() < 1e-12);
    assert_eq!(r.query_cost, 120);
    // The far level keeps only what the truncated polynomial lets through.
    let x_far = (frame.theta(0.3) / 2.0).cos();
    let leak = (xi_exact(params.k_steep, params.mu, x_far).abs() + erf_truncation_bound(2.0 * params.k_steep, 121)).powi(2);
    assert!(r.posterior.levels()[2].weight * r.success_prob <= 0.5 * leak * (1.0 + 1e-6));
    let finer = qetu_filter(&m, &symmetric_filter(params.k_steep, params.mu, 400).unwrap(), frame).unwrap();
    assert!(finer.posterior.levels()[2].weight < 1e-20);
}

#[test]
fn case_study_entries_are_self_consistent() {
    let cfg = CaseStudyConfig::default();
    let report = gaussian_case_study(&cfg).unwrap();
    let m = SpectralMeasure::discretized_gaussian(cfg.mean, cfg.sigma, cfg.n_bins, cfg.half_width_sigmas).unwrap();
    let first = coarse_qpe_postselect(&m, cfg.k_first, &[0]).unwrap();
    assert_eq!(report.entry("w_k4").unwrap().value, first.success_prob);
    assert_eq!(report.entry("p_below_0").unwrap().value, m.cdf_below(0.0));
    let cost = report.entry("refine_query_cost").unwrap();
    assert_eq!(cost.value, 48.0);
    assert!(cost.pass);
    assert_eq!(report.entry("qetu_query_cost").unwrap().value, cfg.degree as f64);
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"p_leak_after_k4_k5\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn postselections_commute(
        pairs in proptest::collection::vec((0.0f64..1.0, 0.05f64..1.0), 1..6),
        a in 0u64..16,
        b in 0u64..32,
    ) {
        let m = measure(&pairs);
        let (Ok(ab1), Ok(ba1)) = (coarse_qpe_postselect(&m, 4, &[a]), coarse_qpe_postselect(&m, 5, &[b])) else {
            return Ok(());
        };
        let (Ok(ab), Ok(ba)) = (coarse_qpe_postselect(&ab1.posterior, 5, &[b]), coarse_qpe_postselect(&ba1.posterior, 4, &[a])) else {
            return Ok(());
        };
        prop_assume!(ab1.success_prob * ab.success_prob > 1e-12);
        prop_assert!((ab1.success_prob * ab.success_prob - ba1.success_prob * ba.success_prob).abs() < 1e-10);
        for (x, y) in ab.posterior.levels().iter().zip(ba.posterior.levels()) {
            prop_assert!((x.weight - y.weight).abs() < 1e-8);
        }
    }

    #[test]
    fn filter_success_is_a_probability(lo in 0.01f64..0.4, width in 0.02f64..0.3, seed in 0u64..1000) {
        let frame = QetuFrame::default();
        let params = qetu_params(frame.theta(lo), frame.theta(lo + width), 1.0).unwrap();
        let poly = symmetric_filter(params.k_steep, params.mu, 100).unwrap();
        let e = (seed as f64 * 0.618_033_988_7).fract();
        let m = measure(&[(e, 0.5), (lo / 2.0, 0.5)]);
        if let Ok(r) = qetu_filter(&m, &poly, frame) {
            prop_assert!((0.0..=1.0).contains(&r.success_prob));
        }
    }
}
