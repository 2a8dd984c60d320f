//! Probability that phase estimation reports an outcome below `x_upper` because of the
//! algebraic tails of higher levels.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::numerics::composite_gauss_legendre;
use crate::qpestats::{qpe_outcome_distribution, QpeStatsError};
use crate::spectra::{qpe_kernel, Grid, SpectralMeasure};

/// Digit counts above this are refused by [`required_digits`].
pub const MAX_DIGITS: u32 = 60;
/// Default ratio of outcome CDF to energy CDF above which leakage is flagged.
pub const DEFAULT_RISK_FACTOR: f64 = 2.0;

#[derive(Debug, Error)]
pub enum LeakageError {
    #[error("required digits exceed the cap of {MAX_DIGITS}")]
    DigitsCapExceeded,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    QpeStats(#[from] QpeStatsError),
}

/// Digits `k`, tolerated error `ε` and reference energy `E₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageSetup {
    pub k: u32,
    pub epsilon: f64,
    pub e0: f64,
    /// Levels with `E_n` at or below this count as accepted rather than leaking.
    /// Defaults to `E₀ + ε`.
    pub exclusion_threshold: Option<f64>,
}

impl LeakageSetup {
    pub fn new(k: u32, epsilon: f64, e0: f64) -> Result<Self, LeakageError> {
        if k == 0 || k > 30 {
            return Err(LeakageError::InvalidParameter(format!("digit count {k} outside 1..=30")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(LeakageError::InvalidParameter(format!("ε = {epsilon}")));
        }
        if !(0.0..=1.0).contains(&e0) {
            return Err(LeakageError::InvalidParameter(format!("E₀ = {e0} outside [0, 1]")));
        }
        Ok(Self { k, epsilon, e0, exclusion_threshold: None })
    }

    pub fn with_exclusion_threshold(mut self, t: f64) -> Self {
        self.exclusion_threshold = Some(t);
        self
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.k) as f64
    }

    /// `⌈2ᵏ(E₀ − ε)⌉`.
    pub fn x_upper(&self) -> i64 {
        (self.scale() * (self.e0 - self.epsilon)).ceil() as i64
    }

    /// Lowest outcome in the summation window, `−2^{k−1}`.
    pub fn window_low(&self) -> i64 {
        -(1i64 << (self.k - 1))
    }

    pub fn exclusion(&self) -> f64 {
        self.exclusion_threshold.unwrap_or(self.e0 + self.epsilon)
    }

    /// `(x_n, δ_n)` with `2ᵏE = x_n + δ_n`, `0 ≤ δ_n < 1`.
    pub fn split(&self, e: f64) -> (i64, f64) {
        let y = self.scale() * e;
        let x = y.floor();
        (x as i64, y - x)
    }
}

/// `Σ_{x = −2^{k−1}}^{x_upper − 1} K(2ᵏE − x)` for one level.
pub fn level_leak_exact(e: f64, setup: &LeakageSetup) -> f64 {
    let y = setup.scale() * e;
    (setup.window_low()..setup.x_upper()).map(|x| qpe_kernel(setup.k, y - x as f64)).sum()
}

/// Weighted sum of [`level_leak_exact`] over levels above the exclusion threshold.
pub fn leak_prob_exact(m: &SpectralMeasure, setup: &LeakageSetup) -> f64 {
    let cut = setup.exclusion();
    m.levels()
        .iter()
        .filter(|l| l.energy > cut)
        .map(|l| l.weight * level_leak_exact(l.energy, setup))
        .sum()
}

/// Single-level approximation `sin²(πδ)/π² · 1/(x_n − x_upper + δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelApprox {
    /// Clamped at zero.
    pub value: f64,
    /// Unclamped formula value; differs from `value` only when the level sits at or
    /// below `x_upper`.
    pub raw: f64,
}

pub fn leak_prob_level_approx(e: f64, setup: &LeakageSetup) -> LevelApprox {
    let (xn, delta) = setup.split(e);
    let s = (PI * delta).sin();
    let gap = (xn - setup.x_upper()) as f64 + delta;
    let raw = if gap == 0.0 { f64::INFINITY } else { s * s / (PI * PI * gap) };
    let value = if gap > 0.0 { raw } else { 0.0 };
    LevelApprox { value, raw }
}

/// Weighted sum of the single-level approximation.
pub fn leak_prob_approx(m: &SpectralMeasure, setup: &LeakageSetup) -> f64 {
    let cut = setup.exclusion();
    m.levels()
        .iter()
        .filter(|l| l.energy > cut)
        .map(|l| l.weight * leak_prob_level_approx(l.energy, setup).value)
        .sum()
}

/// Continuous antiderivative of the single-level summand from the window floor:
/// `I(x₀) = sin²(πδ)/(π2ᵏ) [cot(π(x_n + δ − x₀)/2ᵏ) − cot(π(x_n + δ + 2^{k−1})/2ᵏ)]`.
pub fn level_antiderivative(e: f64, x0: f64, setup: &LeakageSetup) -> f64 {
    let (xn, delta) = setup.split(e);
    let c = xn as f64 + delta;
    let n = setup.scale();
    let s = (PI * delta).sin();
    let cot = |t: f64| 1.0 / (PI * t / n).tan();
    s * s / (PI * n) * (cot(c - x0) - cot(c - setup.window_low() as f64))
}

/// `[I(x_upper − 1), I(x_upper)]`.
pub fn level_bracket(e: f64, setup: &LeakageSetup) -> (f64, f64) {
    let xu = setup.x_upper() as f64;
    (level_antiderivative(e, xu - 1.0, setup), level_antiderivative(e, xu, setup))
}

/// `(1/(π²2ᵏ)) ∫_{E₀+ε}^{e_max} P(E) sin²(π2ᵏE)/(E − x_upper/2ᵏ) dE` by Gauss–Legendre
/// on half-period panels.
pub fn leak_prob_integral(density: impl Fn(f64) -> f64, e_max: f64, setup: &LeakageSetup) -> f64 {
    let n = setup.scale();
    let pole = setup.x_upper() as f64 / n;
    let lo = setup.e0 + setup.epsilon;
    let integrand = |e: f64| {
        let s = (PI * n * e).sin();
        density(e) * s * s / (e - pole)
    };
    composite_gauss_legendre(integrand, lo, e_max, 0.5 / n, 8) / (PI * PI * n)
}

/// Smallest `k` with `2ᵏ ≥ max(1/(p₀(E_p − E₀)), 1/ε)`.
pub fn required_digits(p0: f64, e_p: f64, e0: f64, epsilon: f64) -> Result<u32, LeakageError> {
    if !(0.0..=1.0).contains(&p0) || !(epsilon > 0.0) || !(e_p > e0) {
        return Err(LeakageError::InvalidParameter(format!(
            "need p₀ ∈ [0, 1], ε > 0, E_p > E₀ (got {p0}, {epsilon}, {e_p}, {e0})"
        )));
    }
    let target = (1.0 / (p0 * (e_p - e0))).max(1.0 / epsilon);
    (0..=MAX_DIGITS)
        .find(|&k| 2f64.powi(k as i32) >= target)
        .ok_or(LeakageError::DigitsCapExceeded)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageDiagnosis {
    pub k: u32,
    pub n_reps: u64,
    /// Largest grid energy with energy CDF at most `1/n_reps`.
    pub e_star: f64,
    pub energy_cdf: f64,
    pub outcome_cdf: f64,
    /// `outcome_cdf / energy_cdf`; infinite when only outcomes populate the tail.
    pub ratio: f64,
    pub factor: f64,
    pub leakage_risk: bool,
}

/// Compares the outcome CDF `G` with the energy CDF `F` where `F ≈ 1/n_reps`.
pub fn diagnose_leakage(
    m: &SpectralMeasure,
    k: u32,
    n_reps: u64,
    factor: f64,
    grid: &Grid,
) -> Result<LeakageDiagnosis, LeakageError> {
    if n_reps == 0 {
        return Err(LeakageError::InvalidParameter("n_reps must be positive".into()));
    }
    let dist = qpe_outcome_distribution(m, k)?;
    let level = 1.0 / n_reps as f64;
    let e_star = grid
        .points
        .iter()
        .copied()
        .filter(|&e| m.cdf_at_or_below(e) <= level)
        .fold(f64::NEG_INFINITY, f64::max);
    let e_star = if e_star.is_finite() { e_star } else { grid.points[0] };
    let f = m.cdf_at_or_below(e_star);
    let g = dist.energy_cdf(e_star);
    let ratio = match (f > 0.0, g > 0.0) {
        (true, _) => g / f,
        (false, true) => f64::INFINITY,
        (false, false) => 1.0,
    };
    Ok(LeakageDiagnosis {
        k,
        n_reps,
        e_star,
        energy_cdf: f,
        outcome_cdf: g,
        ratio,
        factor,
        leakage_risk: ratio > factor,
    })
}
