//! QPE outcome distributions, minimum-of-K statistics and the Goldilocks report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::AffineNormalizer;
use crate::spectra::{Level, SpectraError, SpectralMeasure};

pub use crate::spectra::qpe_kernel;

/// Largest digit count for which the full outcome table is built.
pub const MAX_TABLE_DIGITS: u32 = 24;

#[derive(Debug, Error)]
pub enum QpeStatsError {
    #[error("digit count {0} outside 1..={MAX_TABLE_DIGITS}")]
    DigitsOutOfRange(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Probabilities of the integer outcomes `x ∈ [0, 2ᵏ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub k: u32,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn n_outcomes(&self) -> usize {
        self.probs.len()
    }

    /// `Σ_{x ≤ 2ᵏE} P(x)`: the CDF of outcomes read as energies `x/2ᵏ`.
    pub fn energy_cdf(&self, e: f64) -> f64 {
        let bound = (e * self.n_outcomes() as f64).floor();
        if bound < 0.0 {
            return 0.0;
        }
        let last = (bound as usize).min(self.n_outcomes() - 1);
        self.probs[..=last].iter().sum()
    }

    /// Outcomes as a measure at energies `x/2ᵏ`.
    pub fn as_measure(&self) -> Result<SpectralMeasure, SpectraError> {
        let n = self.n_outcomes() as f64;
        let pairs: Vec<(f64, f64)> = self.probs.iter().enumerate().map(|(x, &p)| (x as f64 / n, p)).collect();
        SpectralMeasure::from_weights(&pairs, AffineNormalizer::IDENTITY)
    }
}

/// `P(x) = Σ_n p_n · K(2ᵏE_n − x)` with the periodic kernel.
pub fn qpe_outcome_distribution(m: &SpectralMeasure, k: u32) -> Result<OutcomeDistribution, QpeStatsError> {
    if k == 0 || k > MAX_TABLE_DIGITS {
        return Err(QpeStatsError::DigitsOutOfRange(k));
    }
    let n = 1usize << k;
    let scale = n as f64;
    let probs = (0..n)
        .into_par_iter()
        .map(|x| {
            m.levels()
                .iter()
                .map(|l| l.weight * qpe_kernel(k, scale * l.energy - x as f64))
                .sum()
        })
        .collect();
    Ok(OutcomeDistribution { k, probs })
}

/// `p_<(E)` for a density sampled on increasing abscissae (trapezoid, linear inside a cell).
pub fn density_cdf_below(x: &[f64], p: &[f64], e: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..x.len() {
        if e <= x[i - 1] {
            break;
        }
        let hi = e.min(x[i]);
        let t = (hi - x[i - 1]) / (x[i] - x[i - 1]);
        let p_hi = p[i - 1] + t * (p[i] - p[i - 1]);
        acc += 0.5 * (hi - x[i - 1]) * (p[i - 1] + p_hi);
    }
    acc
}

/// `1 − (1 − p_<)^K`.
pub fn min_of_k_cdf(p_less: f64, k: u32) -> f64 {
    1.0 - (1.0 - p_less.clamp(0.0, 1.0)).powi(k as i32)
}

/// `P_K(E) = K P(E) (1 − p_<(E))^{K−1}` on the sampling points of a density.
pub fn min_of_k_pdf(x: &[f64], p: &[f64], k: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut cdf = 0.0;
    for i in 0..x.len() {
        if i > 0 {
            cdf += 0.5 * (x[i] - x[i - 1]) * (p[i] + p[i - 1]);
        }
        out.push(k as f64 * p[i] * (1.0 - cdf.min(1.0)).powi(k as i32 - 1));
    }
    out
}

/// Distribution of the minimum of `K` independent draws from a discrete measure.
pub fn min_of_k_measure(m: &SpectralMeasure, k: u32) -> Result<SpectralMeasure, QpeStatsError> {
    if k == 0 {
        return Err(QpeStatsError::InvalidParameter("K must be at least 1".into()));
    }
    let mut below: f64 = 0.0;
    let levels: Vec<Level> = m
        .levels()
        .iter()
        .map(|l| {
            let survive_before = (1.0 - below).max(0.0).powi(k as i32);
            below += l.weight;
            let survive_after = (1.0 - below).max(0.0).powi(k as i32);
            Level { energy: l.energy, weight: (survive_before - survive_after).max(0.0) }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = levels.iter().map(|l| (l.energy, l.weight)).collect();
    Ok(SpectralMeasure::from_weights(&pairs, m.normalizer())?)
}

/// Mean of the minimum of `K` draws.
pub fn expected_min(m: &SpectralMeasure, k: u32) -> Result<f64, QpeStatsError> {
    Ok(min_of_k_measure(m, k)?.mean())
}

/// First Wasserstein distance `∫ |F_a − F_b| dE` between two discrete measures.
pub fn wasserstein1(a: &SpectralMeasure, b: &SpectralMeasure) -> f64 {
    let mut events: Vec<(f64, f64)> = a
        .levels()
        .iter()
        .map(|l| (l.energy, l.weight))
        .chain(b.levels().iter().map(|l| (l.energy, -l.weight)))
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for w in events.windows(2) {
        diff += w[0].1;
        total += diff.abs() * (w[1].0 - w[0].0);
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldilocksClass {
    Easy,
    Goldilocks,
    Hard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldilocksReport {
    pub e_target: f64,
    pub p_below_et: f64,
    /// `⌈1/p⌉`; absent when `p = 0`.
    pub required_reps: Option<u64>,
    pub budget: u64,
    pub easy_threshold: f64,
    pub class: GoldilocksClass,
}

/// Default weight above which the instance is classically easy.
pub const DEFAULT_EASY_THRESHOLD: f64 = 0.5;

/// Easy when `p > easy_threshold`; Goldilocks when `⌈1/p⌉ ≤ budget`; Hard otherwise.
pub fn goldilocks_report(m: &SpectralMeasure, e_target: f64, budget: u64, easy_threshold: f64) -> GoldilocksReport {
    let p = m.cdf_below(e_target);
    let required_reps = (p > 0.0).then(|| (1.0 / p).ceil() as u64);
    let class = if p > easy_threshold {
        GoldilocksClass::Easy
    } else if required_reps.is_some_and(|r| r <= budget) {
        GoldilocksClass::Goldilocks
    } else {
        GoldilocksClass::Hard
    };
    GoldilocksReport { e_target, p_below_et: p, required_reps, budget, easy_threshold, class }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(pairs: &[(f64, f64)]) -> SpectralMeasure {
        SpectralMeasure::from_weights(pairs, AffineNormalizer::IDENTITY).unwrap()
    }

    #[test]
    fn on_grid_level_gives_delta() {
        let d = qpe_outcome_distribution(&measure(&[(5.0 / 16.0, 1.0)]), 4).unwrap();
        assert_eq!(d.probs[5], 1.0);
        assert!(d.probs.iter().enumerate().all(|(x, p)| x == 5 || *p < 1e-28));
    }

    #[test]
    fn goldilocks_classes() {
        let m = measure(&[(0.1, 0.01), (0.5, 0.99)]);
        let r = goldilocks_report(&m, 0.2, 1000, DEFAULT_EASY_THRESHOLD);
        assert_eq!((r.class, r.required_reps), (GoldilocksClass::Goldilocks, Some(100)));
        assert_eq!(goldilocks_report(&m, 0.0, 1000, 0.5).class, GoldilocksClass::Hard);
        assert_eq!(goldilocks_report(&m, 1.0, 1000, 0.5).class, GoldilocksClass::Easy);
    }

    #[test]
    fn expected_min_two_point_enumeration() {
        let m = measure(&[(0.2, 0.3), (0.8, 0.7)]);
        for k in 1..6u32 {
            let mut mean = 0.0;
            for mask in 0..(1u32 << k) {
                let prob: f64 = (0..k).map(|i| if mask >> i & 1 == 1 { 0.3 } else { 0.7 }).product();
                mean += prob * if mask != 0 { 0.2 } else { 0.8 };
            }
            assert!((expected_min(&m, k).unwrap() - mean).abs() < 1e-14);
        }
    }
}
