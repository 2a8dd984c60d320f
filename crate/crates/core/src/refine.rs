//! Refining an initial state: coarse-QPE post-selection and QETU polynomial filtering,
//! simulated on the spectral measure, plus the Gaussian case study.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::leakage::{leak_prob_exact, LeakageError, LeakageSetup};
use crate::numerics::{chebyshev_interpolate, clenshaw, scaled_bessel_i};
use crate::spectra::{qpe_kernel, SpectraError, SpectralMeasure};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("energy window is degenerate (E_l = E_u)")]
    DegenerateWindow,
    #[error("filter removes all weight; posterior undefined")]
    PosteriorUndefined,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Leakage(#[from] LeakageError),
}

/// Outcome of one refining step. `query_cost` counts calls to `e^{−iH}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub success_prob: f64,
    pub posterior: SpectralMeasure,
    pub query_cost: u64,
}

fn reweight(m: &SpectralMeasure, factors: &[f64], query_cost: u64) -> Result<RefineResult, RefineError> {
    let success_prob: f64 = m.levels().iter().zip(factors).map(|(l, f)| l.weight * f).sum();
    if !(success_prob > 0.0) {
        return Err(RefineError::PosteriorUndefined);
    }
    let pairs: Vec<(f64, f64)> = m.levels().iter().zip(factors).map(|(l, f)| (l.energy, l.weight * f)).collect();
    let posterior = SpectralMeasure::from_weights(&pairs, m.normalizer())?;
    Ok(RefineResult { success_prob: success_prob.min(1.0), posterior, query_cost })
}

/// Runs `k`-digit QPE and keeps the state when the outcome lies in `accepted`.
pub fn coarse_qpe_postselect(m: &SpectralMeasure, k: u32, accepted: &[u64]) -> Result<RefineResult, RefineError> {
    if k == 0 || k > 30 {
        return Err(RefineError::InvalidParameter(format!("digit count {k} outside 1..=30")));
    }
    let n = 1u64 << k;
    if let Some(x) = accepted.iter().find(|&&x| x >= n) {
        return Err(RefineError::InvalidParameter(format!("outcome {x} ≥ 2^{k}")));
    }
    let mut acc = accepted.to_vec();
    acc.sort_unstable();
    acc.dedup();
    let factors: Vec<f64> = m
        .levels()
        .iter()
        .map(|l| acc.iter().map(|&x| qpe_kernel(k, n as f64 * l.energy - x as f64)).sum())
        .collect();
    reweight(m, &factors, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

/// Polynomial `Σ_j c_j T_j(x)` on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterPolynomial {
    pub chebyshev_coeffs: Vec<f64>,
    pub parity: Parity,
    pub k_steep: f64,
    pub mu: Option<f64>,
    pub zeta: Option<f64>,
}

impl FilterPolynomial {
    pub fn degree(&self) -> usize {
        self.chebyshev_coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.chebyshev_coeffs, x)
    }
}

/// Odd Chebyshev approximant of `erf(kx)` of degree `n`:
/// `(2k e^{−k²/2}/√π) [I₀ T₁ + Σ_{j≥1} (−1)ʲ I_j (T_{2j+1}/(2j+1) − T_{2j−1}/(2j−1))]`
/// with modified Bessel functions at `k²/2`, evaluated in exponentially scaled form.
pub fn erf_chebyshev(k_steep: f64, n: usize) -> Result<FilterPolynomial, RefineError> {
    if n % 2 == 0 {
        return Err(RefineError::InvalidParameter(format!("erf approximant degree must be odd, got {n}")));
    }
    if !(k_steep > 0.0 && k_steep.is_finite()) {
        return Err(RefineError::InvalidParameter(format!("steepness {k_steep}")));
    }
    let big_j = (n - 1) / 2;
    let bessel = scaled_bessel_i(big_j, 0.5 * k_steep * k_steep);
    let pref = 2.0 * k_steep / PI.sqrt();
    let mut c = vec![0.0; n + 1];
    c[1] = pref * bessel[0];
    for (j, b) in bessel.iter().enumerate().skip(1) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        c[2 * j + 1] += pref * sign * b / (2 * j + 1) as f64;
        c[2 * j - 1] -= pref * sign * b / (2 * j - 1) as f64;
    }
    Ok(FilterPolynomial { chebyshev_coeffs: c, parity: Parity::Odd, k_steep, mu: None, zeta: None })
}

/// Exact `ξ_{k,μ}(x) = ½[erf(−k(x − μ)) + erf(k(x + μ))]`.
pub fn xi_exact(k_steep: f64, mu: f64, x: f64) -> f64 {
    0.5 * (libm::erf(-k_steep * (x - mu)) + libm::erf(k_steep * (x + mu)))
}

/// Even polynomial of degree `degree` approximating `ξ_{k,μ}`. Each erf term is taken
/// from the degree-`(degree + 1)` approximant at steepness `2k` evaluated at `(μ ± x)/2`,
/// which keeps the argument inside `[−1, 1]`.
pub fn symmetric_filter(k_steep: f64, mu: f64, degree: usize) -> Result<FilterPolynomial, RefineError> {
    if degree % 2 == 1 {
        return Err(RefineError::InvalidParameter(format!("even filter degree must be even, got {degree}")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(RefineError::InvalidParameter(format!("μ = {mu} outside [0, 1]")));
    }
    let p = erf_chebyshev(2.0 * k_steep, degree + 1)?;
    let mut c = chebyshev_interpolate(|x| 0.5 * (p.eval(0.5 * (mu - x)) + p.eval(0.5 * (mu + x))), degree + 1);
    c.truncate(degree + 1);
    c.iter_mut().skip(1).step_by(2).for_each(|v| *v = 0.0);
    Ok(FilterPolynomial { chebyshev_coeffs: c, parity: Parity::Even, k_steep, mu: Some(mu), zeta: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QetuParams {
    pub mu: f64,
    pub k_steep: f64,
    pub zeta: f64,
}

/// `μ = (cos(θ_u/2) + cos(θ_l/2))/2`, `1/k = ζ(cos(θ_u/2) − cos(θ_l/2))/2` for window
/// edges given as phases in `[−π, 0]`.
pub fn qetu_params(theta_l: f64, theta_u: f64, zeta: f64) -> Result<QetuParams, RefineError> {
    if theta_l == theta_u {
        return Err(RefineError::DegenerateWindow);
    }
    if !(zeta > 0.0) {
        return Err(RefineError::InvalidParameter(format!("ζ = {zeta}")));
    }
    let (cl, cu) = ((theta_l / 2.0).cos(), (theta_u / 2.0).cos());
    let inv_k = zeta * (cu - cl) / 2.0;
    if !(inv_k > 0.0) {
        return Err(RefineError::InvalidParameter("window must satisfy cos(θ_u/2) > cos(θ_l/2)".into()));
    }
    Ok(QetuParams { mu: 0.5 * (cu + cl), k_steep: 1.0 / inv_k, zeta })
}

/// Map from normalized energy to the phase `θ = −π + η + (π − 2η) E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QetuFrame {
    pub eta: f64,
}

impl Default for QetuFrame {
    fn default() -> Self {
        Self { eta: 0.0 }
    }
}

impl QetuFrame {
    pub fn theta(&self, e: f64) -> f64 {
        -PI + self.eta + (PI - 2.0 * self.eta) * e
    }
}

/// Applies `P(cos(H/2))`; success probability `Σ p_n P(cos(θ_n/2))²`.
pub fn qetu_filter(m: &SpectralMeasure, poly: &FilterPolynomial, frame: QetuFrame) -> Result<RefineResult, RefineError> {
    let factors: Vec<f64> = m
        .levels()
        .iter()
        .map(|l| poly.eval((frame.theta(l.energy) / 2.0).cos()).powi(2))
        .collect();
    reweight(m, &factors, poly.degree() as u64)
}

/// Parameters of the Gaussian case study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub mean: f64,
    pub sigma: f64,
    pub n_bins: usize,
    pub half_width_sigmas: f64,
    pub k_first: u32,
    pub k_second: u32,
    pub e_l: f64,
    pub e_u: f64,
    pub zeta: f64,
    pub degree: usize,
    pub leak_k: u32,
    pub leak_epsilon: f64,
    pub e0: f64,
    pub precision_k: u32,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            mean: 0.06,
            sigma: 0.02,
            n_bins: 4096,
            half_width_sigmas: 6.0,
            k_first: 4,
            k_second: 5,
            e_l: 0.02,
            e_u: 0.08,
            zeta: 1.0,
            degree: 200,
            leak_k: 10,
            leak_epsilon: 2f64.powi(-8),
            e0: 0.0,
            precision_k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyEntry {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Relative tolerance.
    pub tolerance: f64,
    pub pass: bool,
}

impl CaseStudyEntry {
    fn new(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = ((value - reference) / reference).abs() <= tolerance;
        Self { name: name.into(), value, reference, tolerance, pass }
    }

    pub fn relative_error(&self) -> f64 {
        (self.value - self.reference) / self.reference
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyReport {
    pub config: CaseStudyConfig,
    pub qetu: QetuParams,
    pub entries: Vec<CaseStudyEntry>,
}

impl CaseStudyReport {
    pub fn entry(&self, name: &str) -> Option<&CaseStudyEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Discretized Gaussian initial distribution refined by two rounds of coarse QPE
/// (accepting outcome 0) and, separately, by a QETU filter; leakage before and after.
pub fn gaussian_case_study(cfg: &CaseStudyConfig) -> Result<CaseStudyReport, RefineError> {
    let m = SpectralMeasure::discretized_gaussian(cfg.mean, cfg.sigma, cfg.n_bins, cfg.half_width_sigmas)?;
    let first = coarse_qpe_postselect(&m, cfg.k_first, &[0])?;
    let second = coarse_qpe_postselect(&first.posterior, cfg.k_second, &[0])?;
    let frame = QetuFrame::default();
    let params = qetu_params(frame.theta(cfg.e_l), frame.theta(cfg.e_u), cfg.zeta)?;
    let poly = symmetric_filter(params.k_steep, params.mu, cfg.degree)?;
    let qetu = qetu_filter(&m, &poly, frame)?;
    let setup = LeakageSetup::new(cfg.leak_k, cfg.leak_epsilon, cfg.e0)?;
    let refine_cost = first.query_cost + second.query_cost;
    let precision_cost = 1u64 << cfg.precision_k;
    let entries = vec![
        CaseStudyEntry::new("p_below_0", m.cdf_below(cfg.e0), 0.0013, 0.15),
        CaseStudyEntry::new("w_k4", first.success_prob, 0.10, 0.15),
        CaseStudyEntry::new("p_below_0_after_k4", first.posterior.cdf_below(cfg.e0), 0.012, 0.15),
        CaseStudyEntry::new("w_k4_k5", second.success_prob, 0.13, 0.15),
        CaseStudyEntry::new("p_below_0_after_k4_k5", second.posterior.cdf_below(cfg.e0), 0.083, 0.15),
        CaseStudyEntry::new("w_qetu", qetu.success_prob, 0.21, 0.15),
        CaseStudyEntry::new("p_below_0_after_qetu", qetu.posterior.cdf_below(cfg.e0), 0.0056, 0.20),
        CaseStudyEntry::new("p_leak", leak_prob_exact(&m, &setup), 0.00097, 0.15),
        CaseStudyEntry::new("p_leak_after_k4", leak_prob_exact(&first.posterior, &setup), 0.0019, 0.15),
        CaseStudyEntry::new("p_leak_after_k4_k5", leak_prob_exact(&second.posterior, &setup), 0.0036, 0.15),
        CaseStudyEntry {
            name: "refine_query_cost".into(),
            value: refine_cost as f64,
            reference: ((1u64 << cfg.k_first) + (1u64 << cfg.k_second)) as f64,
            tolerance: 0.0,
            pass: refine_cost < precision_cost,
        },
        CaseStudyEntry::new("qetu_query_cost", qetu.query_cost as f64, cfg.degree as f64, 0.0),
    ];
    Ok(CaseStudyReport { config: cfg.clone(), qetu: params, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::AffineNormalizer;

    #[test]
    fn erf_approximant_converges() {
        let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
        let mut last = f64::INFINITY;
        for n in [21, 51, 101, 201] {
            let p = erf_chebyshev(10.0, n).unwrap();
            assert_eq!(p.eval(0.0), 0.0);
            let err = grid.iter().map(|&x| (p.eval(x) - libm::erf(10.0 * x)).abs()).fold(0.0, f64::max);
            assert!(err < last, "n={n}: {err} ≥ {last}");
            last = err;
        }
        assert!(last < 1e-12, "{last}");
    }

    #[test]
    fn symmetric_filter_is_even_and_close() {
        let f = symmetric_filter(20.0, 0.3, 200).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((f.eval(x) - f.eval(-x)).abs() < 1e-12);
            assert!((f.eval(x) - xi_exact(20.0, 0.3, x)).abs() < 1e-3);
        }
        assert_eq!(f.degree(), 200);
    }

    #[test]
    fn accept_everything_is_identity() {
        let m = SpectralMeasure::from_weights(&[(0.1, 0.3), (0.37, 0.7)], AffineNormalizer::IDENTITY).unwrap();
        let all: Vec<u64> = (0..16).collect();
        let r = coarse_qpe_postselect(&m, 4, &all).unwrap();
        assert!((r.success_prob - 1.0).abs() < 1e-12);
        assert!((r.posterior.levels()[0].weight - 0.3).abs() < 1e-12);
        assert_eq!(r.query_cost, 16);
    }

    #[test]
    fn degenerate_window() {
        assert!(matches!(qetu_params(-2.0, -2.0, 1.0), Err(RefineError::DegenerateWindow)));
    }
}
