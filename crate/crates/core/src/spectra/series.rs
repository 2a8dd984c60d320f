//! Moment-based approximations: Gram–Charlier and Edgeworth series in the
//! standardized variable `x = (E − mean)/σ`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{SpectraError, SpectralMeasure};
use crate::hamiltonian::DenseHamiltonian;
use crate::linalg::CVec;

/// Highest Gram–Charlier order with a closed-form table entry.
pub const TABLE_MAX_ORDER: usize = 8;

/// Probabilists' Hermite polynomial `He_n(x)`.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for j in 1..n {
        let c = x * b - j as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Monomial coefficients of `He_n`: `He_n(x) = Σ_j out[j] x^j`.
pub fn hermite_he_coefficients(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..n {
        let mut next = vec![0.0; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Raw, standardized and cumulant sequences of an energy distribution.
///
/// `mu[n]` and `kappa[n]` refer to the standardized variable, so `mu[1] = 0`,
/// `mu[2] = 1`, `kappa[2] = 1`. Both are empty when the variance vanishes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub raw: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl MomentSet {
    /// `raw[n] = ⟨Eⁿ⟩`, with `raw[0] = 1`.
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let n_max = raw.len().saturating_sub(1);
        let mean = raw.get(1).copied().unwrap_or(0.0);
        let var = raw.get(2).map(|m2| m2 - mean * mean).unwrap_or(0.0);
        let scale = raw.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        if var <= 1e-14 * scale {
            return Self { raw, mean, std_dev: 0.0, mu: vec![], kappa: vec![] };
        }
        let std_dev = var.sqrt();
        let mu: Vec<f64> = (0..=n_max)
            .map(|n| {
                let central: f64 = (0..=n).map(|j| binomial(n, j) * raw[j] * (-mean).powi((n - j) as i32)).sum();
                central / std_dev.powi(n as i32)
            })
            .collect();
        let kappa = cumulants_from_moments(&mu);
        Self { raw, mean, std_dev, mu, kappa }
    }

    pub fn from_measure(m: &SpectralMeasure, n_max: usize) -> Self {
        Self::from_raw((0..=n_max).map(|n| m.raw_moment(n as u32)).collect())
    }

    pub fn n_max(&self) -> usize {
        self.raw.len().saturating_sub(1)
    }

    pub fn is_degenerate(&self) -> bool {
        self.mu.is_empty()
    }
}

/// `κ_n = μ_n − Σ_{j=1}^{n−1} C(n−1, j−1) κ_j μ_{n−j}`.
fn cumulants_from_moments(mu: &[f64]) -> Vec<f64> {
    let mut kappa = vec![0.0; mu.len()];
    for n in 1..mu.len() {
        let mut k = mu[n];
        for j in 1..n {
            k -= binomial(n - 1, j - 1) * kappa[j] * mu[n - j];
        }
        kappa[n] = k;
    }
    kappa
}

/// `⟨ψ|Hⁿ|ψ⟩` for `n ≤ n_max` by repeated matrix–vector products (ψ normalized internally).
pub fn moments(h: &DenseHamiltonian, psi: &CVec, n_max: usize) -> Result<MomentSet, SpectraError> {
    if psi.len() != h.dim() {
        return Err(SpectraError::LengthMismatch { state: psi.len(), dim: h.dim() });
    }
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(SpectraError::InvalidParameter("zero state".into()));
    }
    let psi = psi / crate::linalg::C64::from(norm);
    let mut raw = vec![1.0];
    let mut v = psi.clone();
    for _ in 0..n_max {
        v = h.matrix() * v;
        raw.push(psi.dotc(&v).re);
    }
    Ok(MomentSet::from_raw(raw))
}

/// Closed-form coefficients `c_3..c_order` (index `n`, zeros below 3) from standardized moments.
pub fn gram_charlier_table(mu: &[f64], order: usize) -> Result<Vec<f64>, SpectraError> {
    if order > TABLE_MAX_ORDER {
        return Err(SpectraError::OrderUnsupported { order, max: TABLE_MAX_ORDER });
    }
    if mu.len() <= order {
        return Err(SpectraError::InvalidParameter(format!("need moments up to {order}")));
    }
    let m = |n: usize| mu[n];
    let mut c = vec![0.0; order + 1];
    for (n, slot) in c.iter_mut().enumerate().skip(3) {
        *slot = match n {
            3 => -m(3) / factorial(3),
            4 => (m(4) - 3.0) / factorial(4),
            5 => (-m(5) + 10.0 * m(3)) / factorial(5),
            6 => (m(6) - 15.0 * m(4) + 30.0) / factorial(6),
            7 => (-m(7) + 21.0 * m(5) - 105.0 * m(3)) / factorial(7),
            8 => (m(8) - 28.0 * m(6) + 210.0 * m(4) - 315.0) / factorial(8),
            _ => unreachable!(),
        };
    }
    Ok(c)
}

/// `c_n = ((−1)ⁿ/n!) E[He_n]` expanded in moments.
fn gram_charlier_generic(mu: &[f64], order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    for (n, slot) in c.iter_mut().enumerate().skip(3) {
        let e: f64 = hermite_he_coefficients(n).iter().enumerate().map(|(j, a)| a * mu[j]).sum();
        *slot = if n % 2 == 0 { 1.0 } else { -1.0 } * e / factorial(n);
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramCharlierSeries {
    pub mean: f64,
    pub std_dev: f64,
    /// `c[n]` for `n ≤ order`; `c[0..3]` are unused zeros.
    pub c: Vec<f64>,
}

/// Builds the truncated Gram–Charlier series. Orders above [`TABLE_MAX_ORDER`]
/// need `generic = true`, which projects onto Hermite polynomials directly.
pub fn gram_charlier(ms: &MomentSet, order: usize, generic: bool) -> Result<GramCharlierSeries, SpectraError> {
    if ms.is_degenerate() {
        return Err(SpectraError::ZeroVariance);
    }
    if ms.n_max() < order {
        return Err(SpectraError::InvalidParameter(format!("need moments up to {order}, have {}", ms.n_max())));
    }
    let c = if order <= TABLE_MAX_ORDER && !generic {
        gram_charlier_table(&ms.mu, order)?
    } else if generic {
        gram_charlier_generic(&ms.mu, order)
    } else {
        return Err(SpectraError::OrderUnsupported { order, max: TABLE_MAX_ORDER });
    };
    Ok(GramCharlierSeries { mean: ms.mean, std_dev: ms.std_dev, c })
}

fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn eval_hermite_sum(coeffs: &[f64], x: f64) -> f64 {
    // Forward recurrence shared across orders.
    let (mut a, mut b) = (1.0, x);
    let mut s = coeffs.first().copied().unwrap_or(0.0);
    if coeffs.len() > 1 {
        s += coeffs[1] * x;
    }
    for (n, c) in coeffs.iter().enumerate().skip(2) {
        let next = x * b - (n - 1) as f64 * a;
        a = b;
        b = next;
        s += c * b;
    }
    gaussian(x) * s
}

impl GramCharlierSeries {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Coefficient of `He_n` inside the bracket: `1` for `n = 0`, `(−1)ⁿ c_n` for `n ≥ 3`.
    pub fn hermite_coefficients(&self) -> Vec<f64> {
        self.c
            .iter()
            .enumerate()
            .map(|(n, c)| match n {
                0 => 1.0,
                1 | 2 => 0.0,
                _ if n % 2 == 0 => *c,
                _ => -c,
            })
            .collect()
    }

    /// Density in the standardized variable.
    pub fn eval_standard(&self, x: f64) -> f64 {
        eval_hermite_sum(&self.hermite_coefficients(), x)
    }

    /// Density in energy units.
    pub fn eval(&self, e: f64) -> f64 {
        self.eval_standard((e - self.mean) / self.std_dev) / self.std_dev
    }
}

/// One Edgeworth monomial: `partition[m−1] = k_m` with `Σ m k_m = s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeworthTerm {
    pub s: usize,
    pub partition: Vec<usize>,
    pub r: usize,
    pub hermite_order: usize,
}

impl EdgeworthTerm {
    /// `Π_m (1/k_m!) (κ_{m+2}/(m+2)!)^{k_m}`; `kappa` indexed by cumulant order.
    pub fn coefficient(&self, kappa: &[f64]) -> f64 {
        self.partition
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| {
                let m = i + 1;
                (kappa[m + 2] / factorial(m + 2)).powi(k as i32) / factorial(k)
            })
            .product()
    }
}

/// All nonnegative solutions of `k_1 + 2k_2 + … + s k_s = s`.
pub fn edgeworth_terms(s: usize) -> Vec<EdgeworthTerm> {
    fn rec(m: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 0 {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        for k in 0..=remaining / m {
            current[m - 1] = k;
            rec(m - 1, remaining - k * m, current, out);
        }
        current[m - 1] = 0;
    }
    let mut parts = Vec::new();
    rec(s, s, &mut vec![0; s], &mut parts);
    let mut terms: Vec<EdgeworthTerm> = parts
        .into_iter()
        .map(|partition| {
            let r = partition.iter().sum();
            EdgeworthTerm { s, partition, r, hermite_order: s + 2 * r }
        })
        .collect();
    terms.sort_by_key(|t| (t.hermite_order, t.partition.clone()));
    terms
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthSeries {
    pub mean: f64,
    pub std_dev: f64,
    pub s_max: usize,
    pub terms: Vec<(EdgeworthTerm, f64)>,
}

/// Edgeworth series through order `s_max` (needs cumulants up to `s_max + 2`).
pub fn edgeworth(ms: &MomentSet, s_max: usize) -> Result<EdgeworthSeries, SpectraError> {
    if ms.is_degenerate() {
        return Err(SpectraError::ZeroVariance);
    }
    if ms.kappa.len() < s_max + 3 {
        return Err(SpectraError::InvalidParameter(format!("need cumulants up to {}", s_max + 2)));
    }
    let terms = (1..=s_max)
        .flat_map(edgeworth_terms)
        .map(|t| {
            let c = t.coefficient(&ms.kappa);
            (t, c)
        })
        .collect();
    Ok(EdgeworthSeries { mean: ms.mean, std_dev: ms.std_dev, s_max, terms })
}

impl EdgeworthSeries {
    /// Terms summed by Hermite order, keeping only orders `≤ max_order`; index 0 is 1.
    pub fn hermite_coefficients(&self, max_order: usize) -> Vec<f64> {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        for (t, c) in &self.terms {
            if t.hermite_order <= max_order {
                out[t.hermite_order] += c;
            }
        }
        out
    }

    fn max_hermite_order(&self) -> usize {
        self.terms.iter().map(|(t, _)| t.hermite_order).max().unwrap_or(0)
    }

    pub fn eval_standard(&self, x: f64) -> f64 {
        eval_hermite_sum(&self.hermite_coefficients(self.max_hermite_order()), x)
    }

    pub fn eval(&self, e: f64) -> f64 {
        self.eval_standard((e - self.mean) / self.std_dev) / self.std_dev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_recurrence_matches_coefficients() {
        for n in 0..12 {
            let c = hermite_he_coefficients(n);
            let x: f64 = 0.37;
            let direct: f64 = c.iter().enumerate().map(|(j, a)| a * x.powi(j as i32)).sum();
            assert!((direct - hermite_he(n, x)).abs() < 1e-10);
        }
        assert_eq!(hermite_he_coefficients(4), vec![3.0, 0.0, -6.0, 0.0, 1.0]);
    }

    #[test]
    fn edgeworth_partition_counts() {
        let counts: Vec<usize> = (1..=6).map(|s| edgeworth_terms(s).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11]);
    }

    #[test]
    fn two_point_measure_c4() {
        let ms = MomentSet::from_raw(vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let gc = gram_charlier(&ms, 8, false).unwrap();
        assert!((gc.c[4] + 1.0 / 12.0).abs() < 1e-15);
    }
}
