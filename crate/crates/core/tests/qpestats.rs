use std::f64::consts::PI;

use proptest::prelude::*;
use qprep::hamiltonian::AffineNormalizer;
use qprep::linalg::C64;
use qprep::qpestats::{
    density_cdf_below, expected_min, goldilocks_report, min_of_k_cdf, min_of_k_measure, min_of_k_pdf, qpe_outcome_distribution,
    wasserstein1, GoldilocksClass, QpeStatsError,
};
use qprep::spectra::SpectralMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn measure(pairs: &[(f64, f64)]) -> SpectralMeasure {
    SpectralMeasure::from_weights(pairs, AffineNormalizer::IDENTITY).unwrap()
}

/// Textbook QPE on an eigenphase `e`: uniform superposition, phase kickback
/// `e^{2πi j e}`, then the inverse QFT amplitude of outcome `x`.
fn qpe_circuit_probs(k: u32, e: f64) -> Vec<f64> {
    let n = 1usize << k;
    let kicked: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * j as f64 * e)).collect();
    (0..n)
        .map(|x| {
            let amp: C64 = kicked
                .iter()
                .enumerate()
                .map(|(j, a)| a * C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * PI * (j * x) as f64 / n as f64))
                .sum();
            amp.norm_sqr()
        })
        .collect()
}

/// Distribution of the minimum of `k` draws by enumerating every tuple.
fn brute_min_distribution(pairs: &[(f64, f64)], k: u32) -> Vec<f64> {
    let n = pairs.len();
    let mut out = vec![0.0; n];
    for mut code in 0..n.pow(k) {
        let mut prob = 1.0;
        let mut lowest = usize::MAX;
        for _ in 0..k {
            let i = code % n;
            code /= n;
            prob *= pairs[i].1;
            lowest = lowest.min(i);
        }
        out[lowest] += prob;
    }
    out
}

#[test]
fn outcome_distribution_matches_circuit() {
    let pairs = [(0.137, 0.5), (0.52, 0.3), (0.9031, 0.2)];
    let m = measure(&pairs);
    for k in [2u32, 4, 6] {
        let d = qpe_outcome_distribution(&m, k).unwrap();
        let mut oracle = vec![0.0; 1 << k];
        for &(e, w) in &pairs {
            for (slot, p) in oracle.iter_mut().zip(qpe_circuit_probs(k, e)) {
                *slot += w * p;
            }
        }
        for (a, b) in d.probs.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "k={k}");
        }
    }
}

#[test]
fn digit_range_is_enforced() {
    let m = measure(&[(0.5, 1.0)]);
    assert!(matches!(qpe_outcome_distribution(&m, 0), Err(QpeStatsError::DigitsOutOfRange(0))));
    assert!(matches!(qpe_outcome_distribution(&m, 25), Err(QpeStatsError::DigitsOutOfRange(25))));
    assert!(matches!(min_of_k_measure(&m, 0), Err(QpeStatsError::InvalidParameter(_))));
}

#[test]
fn outcome_cdf_and_measure_view() {
    let d = qpe_outcome_distribution(&measure(&[(0.25, 0.5), (0.75, 0.5)]), 3).unwrap();
    assert_eq!(d.energy_cdf(-0.1), 0.0);
    assert!((d.energy_cdf(0.25) - 0.5).abs() < 1e-12);
    assert!((d.energy_cdf(0.7) - 0.5).abs() < 1e-12);
    assert!((d.energy_cdf(2.0) - 1.0).abs() < 1e-12);
    let m = d.as_measure().unwrap();
    assert!((m.mean() - 0.5).abs() < 1e-12);
}

#[test]
fn min_of_k_matches_enumeration() {
    let pairs = [(0.1, 0.2), (0.4, 0.5), (0.6, 0.3)];
    let m = measure(&pairs);
    for k in 1..=5u32 {
        let got = min_of_k_measure(&m, k).unwrap();
        let oracle = brute_min_distribution(&pairs, k);
        for (l, w) in got.levels().iter().zip(&oracle) {
            assert!((l.weight - w).abs() < 1e-13, "K={k}");
        }
        let mean: f64 = pairs.iter().zip(&oracle).map(|(p, w)| p.0 * w).sum();
        assert!((expected_min(&m, k).unwrap() - mean).abs() < 1e-13);
    }
}

#[test]
fn min_of_k_matches_monte_carlo() {
    let pairs = [(0.05, 0.1), (0.3, 0.2), (0.5, 0.4), (0.9, 0.3)];
    let m = measure(&pairs);
    let k = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 40_000;
    let mut counts = [0usize; 4];
    for _ in 0..trials {
        let lowest = (0..k)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                pairs.iter().position(|p| {
                    acc += p.1;
                    u < acc
                })
                .unwrap_or(3)
            })
            .min()
            .unwrap();
        counts[lowest] += 1;
    }
    let exact = min_of_k_measure(&m, k).unwrap();
    for (l, c) in exact.levels().iter().zip(counts) {
        assert!((l.weight - c as f64 / trials as f64).abs() < 0.01);
    }
}

#[test]
fn uniform_density_min_of_k() {
    let x: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let p = vec![1.0; x.len()];
    assert!((density_cdf_below(&x, &p, 0.37) - 0.37).abs() < 1e-12);
    assert_eq!(density_cdf_below(&x, &p, -1.0), 0.0);
    let pk = min_of_k_pdf(&x, &p, 5);
    for (xi, v) in x.iter().zip(&pk) {
        assert!((v - 5.0 * (1.0 - xi).powi(4)).abs() < 1e-9);
    }
    assert!((min_of_k_cdf(0.1, 3) - (1.0 - 0.9f64.powi(3))).abs() < 1e-15);
    assert_eq!(min_of_k_cdf(1.5, 2), 1.0);
}

#[test]
fn wasserstein_of_point_masses() {
    let a = measure(&[(0.2, 1.0)]);
    let b = measure(&[(0.7, 1.0)]);
    assert!((wasserstein1(&a, &b) - 0.5).abs() < 1e-15);
    let c = measure(&[(0.1, 0.5), (0.3, 0.5)]);
    let d = measure(&[(0.2, 1.0)]);
    assert!((wasserstein1(&c, &d) - 0.1).abs() < 1e-15);
    assert_eq!(wasserstein1(&c, &c), 0.0);
}

#[test]
fn goldilocks_boundaries() {
    let m = measure(&[(0.1, 0.25), (0.6, 0.75)]);
    let r = goldilocks_report(&m, 0.2, 4, 0.5);
    assert_eq!((r.class, r.required_reps), (GoldilocksClass::Goldilocks, Some(4)));
    assert_eq!(goldilocks_report(&m, 0.2, 3, 0.5).class, GoldilocksClass::Hard);
    assert_eq!(goldilocks_report(&m, 0.2, 4, 0.25).class, GoldilocksClass::Goldilocks);
    assert_eq!(goldilocks_report(&m, 0.2, 4, 0.2).class, GoldilocksClass::Easy);
    let none = goldilocks_report(&m, 0.1, 1_000_000, 0.5);
    assert_eq!((none.required_reps, none.class), (None, GoldilocksClass::Hard));
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["class"], "goldilocks");
}

/// `∫₀¹ |F_a⁻¹(u) − F_b⁻¹(u)| du` on a fine quantile grid.
fn quantile_w1(a: &SpectralMeasure, b: &SpectralMeasure) -> f64 {
    let q = |m: &SpectralMeasure, u: f64| {
        let mut acc = 0.0;
        for l in m.levels() {
            acc += l.weight;
            if u < acc {
                return l.energy;
            }
        }
        m.max_energy()
    };
    let n = 200_000;
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).map(|u| (q(a, u) - q(b, u)).abs()).sum::<f64>() / n as f64
}

fn arb_measure() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outcome_probabilities_sum_to_one(pairs in arb_measure(), k in 1u32..=10) {
        let d = qpe_outcome_distribution(&measure(&pairs), k).unwrap();
        prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn min_of_k_cdf_identity(pairs in arb_measure(), k in 1u32..=12) {
        let m = measure(&pairs);
        let mk = min_of_k_measure(&m, k).unwrap();
        for l in m.levels() {
            let expected = min_of_k_cdf(m.cdf_at_or_below(l.energy), k);
            prop_assert!((mk.cdf_at_or_below(l.energy) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn expected_min_decreases_with_k(pairs in arb_measure()) {
        let m = measure(&pairs);
        let means: Vec<f64> = (1..=10).map(|k| expected_min(&m, k).unwrap()).collect();
        prop_assert!((means[0] - m.mean()).abs() < 1e-12);
        prop_assert!(means.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(means[9] >= m.min_energy() - 1e-12);
    }

    #[test]
    fn wasserstein_matches_quantile_form(a in arb_measure(), b in arb_measure()) {
        let (ma, mb) = (measure(&a), measure(&b));
        let w = wasserstein1(&ma, &mb);
        prop_assert!((w - wasserstein1(&mb, &ma)).abs() < 1e-12);
        prop_assert!((w - quantile_w1(&ma, &mb)).abs() < 1e-4);
    }
}
