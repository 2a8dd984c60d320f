//! Energy distributions of a state with respect to a Hamiltonian.
//!
//! A [`SpectralMeasure`] holds the exact pairs `(E_n, p_n)`; everything else here
//! either broadens it, approximates it from moments, or samples it the way a coarse
//! phase-estimation experiment would.

mod kernel;
mod resolvent;
mod sampling;
mod series;

pub use kernel::{qpe_kernel, BroadKernel};
pub use resolvent::{resolvent_distribution, resolvent_distribution_real};
pub use sampling::{coarse_qpe_sample, kde, Bandwidth, KDE_CUTOFF};
pub use series::{
    edgeworth, edgeworth_terms, gram_charlier, gram_charlier_table, hermite_he, hermite_he_coefficients, moments,
    EdgeworthSeries, EdgeworthTerm, GramCharlierSeries, MomentSet, TABLE_MAX_ORDER,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{normalize_spectrum, AffineNormalizer, DenseHamiltonian, HamiltonianError};
use crate::linalg::{hermitian_eigh, CVec};

/// Tolerance on `Σ p_n = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Levels closer than this are merged by [`exact_spectral_measure`].
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),
    #[error("distribution has zero variance; standardized series undefined")]
    ZeroVariance,
    #[error("Gram–Charlier order {order} exceeds the tabulated maximum {max}; enable the generic path")]
    OrderUnsupported { order: usize, max: usize },
    #[error("resolvent solve failed at E = {energy}: residual {residual:e}")]
    SolverFailure { energy: f64, residual: f64 },
    #[error("state length {state} does not match Hamiltonian dimension {dim}")]
    LengthMismatch { state: usize, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub weight: f64,
}

/// Discrete energy distribution `{(E_n, p_n)}` sorted by energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    levels: Vec<Level>,
    normalizer: AffineNormalizer,
}

impl SpectralMeasure {
    /// Validates nonnegative weights summing to one and sorts by energy.
    pub fn new(mut levels: Vec<Level>, normalizer: AffineNormalizer) -> Result<Self, SpectraError> {
        if levels.is_empty() {
            return Err(SpectraError::InvalidMeasure("no levels".into()));
        }
        if let Some(l) = levels.iter().find(|l| !l.energy.is_finite() || !l.weight.is_finite() || l.weight < 0.0) {
            return Err(SpectraError::InvalidMeasure(format!("bad level {l:?}")));
        }
        let total: f64 = levels.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(SpectraError::InvalidMeasure(format!("weights sum to {total}")));
        }
        levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(Self { levels, normalizer })
    }

    /// Like [`SpectralMeasure::new`] but rescales the weights to unit total first.
    pub fn from_weights(pairs: &[(f64, f64)], normalizer: AffineNormalizer) -> Result<Self, SpectraError> {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(SpectraError::InvalidMeasure(format!("weights sum to {total}")));
        }
        let levels = pairs.iter().map(|&(energy, w)| Level { energy, weight: w / total }).collect();
        Self::new(levels, normalizer)
    }

    /// Discretizes `N(mean, σ²)` onto `n_bins` equal-width bins spanning `mean ± half_width·σ`,
    /// with bin masses from CDF differences placed at bin centres.
    pub fn discretized_gaussian(mean: f64, sigma: f64, n_bins: usize, half_width: f64) -> Result<Self, SpectraError> {
        if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
            return Err(SpectraError::InvalidParameter(format!("N({mean}, {sigma}²)")));
        }
        let cdf = |x: f64| 0.5 * libm::erfc((mean - x) / (sigma * std::f64::consts::SQRT_2));
        if n_bins == 0 || half_width <= 0.0 {
            return Err(SpectraError::InvalidParameter("need at least one bin and a positive width".into()));
        }
        let lo = mean - half_width * sigma;
        let w = 2.0 * half_width * sigma / n_bins as f64;
        let pairs: Vec<(f64, f64)> = (0..n_bins)
            .map(|i| {
                let a = lo + i as f64 * w;
                (a + 0.5 * w, cdf(a + w) - cdf(a))
            })
            .collect();
        Self::from_weights(&pairs, AffineNormalizer::IDENTITY)
    }

    /// Assigns the mass of a sampled density (piecewise linear between samples) to
    /// `n_levels` equal-width bins over the sampled range.
    pub fn from_density(x: &[f64], p: &[f64], n_levels: usize) -> Result<Self, SpectraError> {
        if x.len() != p.len() || x.len() < 2 || n_levels == 0 {
            return Err(SpectraError::InvalidParameter("density needs matching x/p of length ≥ 2".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectraError::InvalidParameter("density abscissae must increase".into()));
        }
        let cum = cumulative_trapezoid(x, p);
        let (lo, hi) = (x[0], x[x.len() - 1]);
        let w = (hi - lo) / n_levels as f64;
        let pairs: Vec<(f64, f64)> = (0..n_levels)
            .map(|i| {
                let a = lo + i as f64 * w;
                let b = if i + 1 == n_levels { hi } else { a + w };
                (a + 0.5 * w, (interp_cumulative(x, p, &cum, b) - interp_cumulative(x, p, &cum, a)).max(0.0))
            })
            .collect();
        Self::from_weights(&pairs, AffineNormalizer::IDENTITY)
    }

    /// Replaces the weights (same energies), renormalizing. Fails if all are zero.
    pub fn reweighted(&self, f: impl Fn(&Level) -> f64) -> Result<Self, SpectraError> {
        let pairs: Vec<(f64, f64)> = self.levels.iter().map(|l| (l.energy, l.weight * f(l))).collect();
        Self::from_weights(&pairs, self.normalizer)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn normalizer(&self) -> AffineNormalizer {
        self.normalizer
    }

    pub fn with_normalizer(mut self, n: AffineNormalizer) -> Self {
        self.normalizer = n;
        self
    }

    pub fn mean(&self) -> f64 {
        self.levels.iter().map(|l| l.weight * l.energy).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.levels.iter().map(|l| l.weight * (l.energy - m).powi(2)).sum()
    }

    /// Raw moment `Σ p_n E_nⁿ`.
    pub fn raw_moment(&self, n: u32) -> f64 {
        self.levels.iter().map(|l| l.weight * l.energy.powi(n as i32)).sum()
    }

    /// `p_<(E) = Σ_{E_n < E} p_n`.
    pub fn cdf_below(&self, e: f64) -> f64 {
        self.levels.iter().take_while(|l| l.energy < e).map(|l| l.weight).sum()
    }

    /// `Σ_{E_n ≤ E} p_n`.
    pub fn cdf_at_or_below(&self, e: f64) -> f64 {
        self.levels.iter().take_while(|l| l.energy <= e).map(|l| l.weight).sum()
    }

    pub fn min_energy(&self) -> f64 {
        self.levels[0].energy
    }

    pub fn max_energy(&self) -> f64 {
        self.levels[self.levels.len() - 1].energy
    }
}

fn cumulative_trapezoid(x: &[f64], p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (p[i] + p[i - 1]);
        out.push(acc);
    }
    out
}

/// Exact integral of the piecewise-linear density from `x[0]` to `t`.
fn interp_cumulative(x: &[f64], p: &[f64], cum: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return 0.0;
    }
    if t >= x[x.len() - 1] {
        return cum[cum.len() - 1];
    }
    let i = x.partition_point(|&v| v <= t) - 1;
    let h = t - x[i];
    let slope = (p[i + 1] - p[i]) / (x[i + 1] - x[i]);
    cum[i] + h * p[i] + 0.5 * slope * h * h
}

/// Evaluation grid in normalized energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<f64>,
}

impl Grid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        assert!(n >= 2 && hi > lo, "grid needs n ≥ 2 and hi > lo");
        let step = (hi - lo) / (n - 1) as f64;
        Self { points: (0..n).map(|i| lo + i as f64 * step).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::numerics::trapezoid(&self.points, values)
    }
}

impl Default for Grid {
    /// 512 points over `[−0.05, 1.05]`.
    fn default() -> Self {
        Self::uniform(-0.05, 1.05, 512)
    }
}

/// Exact measure of `psi` (normalized internally) by full eigendecomposition.
pub fn exact_spectral_measure(h: &DenseHamiltonian, psi: &CVec) -> Result<SpectralMeasure, SpectraError> {
    if psi.len() != h.dim() {
        return Err(SpectraError::LengthMismatch { state: psi.len(), dim: h.dim() });
    }
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(SpectraError::InvalidMeasure("zero state".into()));
    }
    let (values, vectors) = hermitian_eigh(h.matrix());
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(values.len());
    for (i, &e) in values.iter().enumerate() {
        let w = (vectors.column(i).dotc(psi) / norm).norm_sqr();
        match pairs.last_mut() {
            Some(last) if (e - last.0).abs() <= DEGENERACY_TOL * (1.0 + e.abs()) => last.1 += w,
            _ => pairs.push((e, w)),
        }
    }
    SpectralMeasure::from_weights(&pairs, AffineNormalizer::IDENTITY)
}

/// Rescales the spectrum into `[margin, 1 − margin]` and returns the measure in that frame.
pub fn normalized_spectral_measure(
    h: &DenseHamiltonian,
    psi: &CVec,
    margin: f64,
) -> Result<(DenseHamiltonian, SpectralMeasure), SpectraError> {
    let (hn, n) = normalize_spectrum(h, margin)?;
    let m = exact_spectral_measure(&hn, psi)?.with_normalizer(n);
    Ok((hn, m))
}

/// `P(E) = Σ_n p_n f(E − E_n)` on the grid.
pub fn broaden(m: &SpectralMeasure, kernel: BroadKernel, grid: &Grid) -> Vec<f64> {
    grid.points
        .par_iter()
        .map(|&e| m.levels().iter().map(|l| l.weight * kernel.eval(e - l.energy)).sum())
        .collect()
}
