use super::{StatesError, STATEVECTOR_QUBIT_CAP};
use crate::linalg::{svd_sorted, CMat, C64, ONE, ZERO};

/// Rank-3 site tensor `A[l, n, r]`, stored row-major in `(l, n, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub chi_left: usize,
    pub d: usize,
    pub chi_right: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn zeros(chi_left: usize, d: usize, chi_right: usize) -> Self {
        Self { chi_left, d, chi_right, data: vec![ZERO; chi_left * d * chi_right] }
    }

    pub fn from_fn(chi_left: usize, d: usize, chi_right: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut t = Self::zeros(chi_left, d, chi_right);
        for l in 0..chi_left {
            for n in 0..d {
                for r in 0..chi_right {
                    t.data[(l * d + n) * chi_right + r] = f(l, n, r);
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, l: usize, n: usize, r: usize) -> C64 {
        self.data[(l * self.d + n) * self.chi_right + r]
    }

    #[inline]
    pub fn set(&mut self, l: usize, n: usize, r: usize, v: C64) {
        self.data[(l * self.d + n) * self.chi_right + r] = v;
    }

    /// `(χ_l d) × χ_r` view.
    pub fn left_matrix(&self) -> CMat {
        CMat::from_fn(self.chi_left * self.d, self.chi_right, |row, r| self.data[row * self.chi_right + r])
    }

    /// `χ_l × (d χ_r)` view.
    pub fn right_matrix(&self) -> CMat {
        let w = self.d * self.chi_right;
        CMat::from_fn(self.chi_left, w, |l, col| self.data[l * w + col])
    }

    pub fn from_left_matrix(m: &CMat, d: usize) -> Self {
        let chi_left = m.nrows() / d;
        Self::from_fn(chi_left, d, m.ncols(), |l, n, r| m[(l * d + n, r)])
    }

    pub fn from_right_matrix(m: &CMat, d: usize) -> Self {
        let chi_right = m.ncols() / d;
        Self::from_fn(m.nrows(), d, chi_right, |l, n, r| m[(l, n * chi_right + r)])
    }

    /// Matrix `A^{n}` of shape `χ_l × χ_r`.
    pub fn slice(&self, n: usize) -> CMat {
        CMat::from_fn(self.chi_left, self.chi_right, |l, r| self.get(l, n, r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalForm {
    None,
    /// Every site satisfies `Σ_{n, r} A[l,n,r] A*[l',n,r] = δ_{l l'}`, the state has unit norm.
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionTarget {
    pub chi_max: usize,
    /// Largest discarded weight fraction allowed per bond.
    pub weight_tolerance: f64,
}

impl CompressionTarget {
    pub fn chi(chi_max: usize) -> Self {
        Self { chi_max, weight_tolerance: 0.0 }
    }
}

/// Relative singular-value floor below which bonds are dropped during canonicalization.
const SV_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    d: usize,
    sites: Vec<SiteTensor>,
    form: CanonicalForm,
}

impl MpsState {
    pub fn new(sites: Vec<SiteTensor>) -> Result<Self, StatesError> {
        let first = sites.first().ok_or_else(|| StatesError::ShapeMismatch("no sites".into()))?;
        let d = first.d;
        if first.chi_left != 1 {
            return Err(StatesError::ShapeMismatch("left boundary bond must be 1".into()));
        }
        if sites.last().map(|s| s.chi_right) != Some(1) {
            return Err(StatesError::ShapeMismatch("right boundary bond must be 1".into()));
        }
        for (j, s) in sites.iter().enumerate() {
            if s.d != d {
                return Err(StatesError::ShapeMismatch(format!("site {j} has local dimension {}", s.d)));
            }
            if s.data.len() != s.chi_left * s.d * s.chi_right {
                return Err(StatesError::ShapeMismatch(format!("site {j} data length")));
            }
            if j > 0 && sites[j - 1].chi_right != s.chi_left {
                return Err(StatesError::ShapeMismatch(format!("bond {j} dimensions disagree")));
            }
        }
        Ok(Self { d, sites, form: CanonicalForm::None })
    }

    /// Product state from per-site local vectors.
    pub fn product(locals: &[Vec<C64>]) -> Result<Self, StatesError> {
        let sites = locals.iter().map(|v| SiteTensor::from_fn(1, v.len(), 1, |_, n, _| v[n])).collect();
        Self::new(sites)
    }

    /// Product state of one basis configuration scaled by `amp`.
    pub fn basis_state(config: &[usize], d: usize, amp: C64) -> Self {
        let sites = config
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let mut t = SiteTensor::zeros(1, d, 1);
                t.set(0, n, 0, if j == 0 { amp } else { ONE });
                t
            })
            .collect();
        Self { d, sites, form: CanonicalForm::None }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn form(&self) -> CanonicalForm {
        self.form
    }

    /// Interior bond dimensions `χ_1 … χ_{N−1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.chi_right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Bits of one site's physical index; `d` must be a power of two.
    pub fn bits_per_site(&self) -> Result<usize, StatesError> {
        if self.d.is_power_of_two() {
            Ok(self.d.trailing_zeros() as usize)
        } else {
            Err(StatesError::InvalidLocalDim(self.d))
        }
    }

    pub fn amplitude(&self, config: &[usize]) -> C64 {
        let mut v = vec![ONE];
        for (site, &n) in self.sites.iter().zip(config) {
            let mut next = vec![ZERO; site.chi_right];
            for (l, &vl) in v.iter().enumerate() {
                if vl == ZERO {
                    continue;
                }
                for (r, slot) in next.iter_mut().enumerate() {
                    *slot += vl * site.get(l, n, r);
                }
            }
            v = next;
        }
        v[0]
    }

    /// Full amplitude vector, configuration index `Σ_j n_j d^j`.
    pub fn to_statevector(&self) -> Result<Vec<C64>, StatesError> {
        let log = (self.d as f64).log2() * self.sites.len() as f64;
        if log > STATEVECTOR_QUBIT_CAP as f64 + 1e-9 {
            return Err(StatesError::StatevectorTooLarge { qubits: log.ceil() as usize, cap: STATEVECTOR_QUBIT_CAP });
        }
        // Rows of `acc`: configurations of the sites contracted so far (earlier sites on low digits).
        let mut acc: Vec<Vec<C64>> = vec![vec![ONE]];
        let mut stride = 1usize;
        for site in &self.sites {
            let mut next = vec![vec![ZERO; site.chi_right]; stride * self.d];
            for (prefix, left) in acc.iter().enumerate() {
                for n in 0..self.d {
                    let out = &mut next[n * stride + prefix];
                    for (l, &vl) in left.iter().enumerate() {
                        if vl == ZERO {
                            continue;
                        }
                        for (r, slot) in out.iter_mut().enumerate() {
                            *slot += vl * site.get(l, n, r);
                        }
                    }
                }
            }
            acc = next;
            stride *= self.d;
        }
        Ok(acc.into_iter().map(|v| v[0]).collect())
    }

    /// `⟨self|other⟩` by transfer-matrix contraction.
    pub fn inner(&self, other: &MpsState) -> Result<C64, StatesError> {
        if self.d != other.d || self.n_sites() != other.n_sites() {
            return Err(StatesError::ShapeMismatch("states have different shapes".into()));
        }
        let mut env = CMat::from_element(1, 1, ONE);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = CMat::zeros(a.chi_right, b.chi_right);
            for n in 0..self.d {
                let an = a.slice(n);
                let bn = b.slice(n);
                next += an.adjoint() * &env * bn;
            }
            env = next;
        }
        Ok(env[(0, 0)])
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).map(|c| c.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for x in out.sites[0].data.iter_mut() {
            *x *= factor;
        }
        out.form = CanonicalForm::None;
        out
    }

    /// `max_j max |Σ_{n,r} A A† − 1|` over all sites.
    pub fn isometry_residual(&self) -> f64 {
        self.sites
            .iter()
            .map(|s| {
                let m = s.right_matrix();
                let g = &m * m.adjoint();
                crate::linalg::max_abs_diff(&g, &CMat::identity(s.chi_left, s.chi_left))
            })
            .fold(0.0, f64::max)
    }

    /// Brings every site into isometric form by a right-to-left SVD sweep and
    /// normalizes; returns the state and its original norm.
    pub fn left_canonicalize(&self) -> Result<(MpsState, f64), StatesError> {
        let mut sites = self.sites.clone();
        let d = self.d;
        for j in (1..sites.len()).rev() {
            let m = sites[j].right_matrix();
            let (u, s, vt) = svd_sorted(&m);
            let smax = s.first().copied().unwrap_or(0.0);
            let keep = s.iter().filter(|&&x| x > SV_FLOOR * smax).count().max(1);
            let vt_k = vt.rows(0, keep).into_owned();
            let carry = CMat::from_fn(u.nrows(), keep, |r, c| u[(r, c)] * s[c]);
            sites[j] = SiteTensor::from_right_matrix(&vt_k, d);
            let prev = sites[j - 1].left_matrix() * carry;
            sites[j - 1] = SiteTensor::from_left_matrix(&prev, d);
        }
        let norm = sites[0].data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StatesError::ZeroNorm);
        }
        for x in sites[0].data.iter_mut() {
            *x /= norm;
        }
        Ok((MpsState { d, sites, form: CanonicalForm::Left }, norm))
    }

    /// Truncates bonds by a left-to-right SVD sweep starting from canonical form.
    ///
    /// Returns the projected (unnormalized) state, scaled to the input norm before
    /// projection, and the product of retained weight fractions.
    pub(crate) fn truncate_projected(&self, target: CompressionTarget) -> Result<(MpsState, f64), StatesError> {
        let (canon, norm) = if self.form == CanonicalForm::Left {
            (self.clone(), 1.0)
        } else {
            self.left_canonicalize()?
        };
        let d = self.d;
        let mut sites = canon.sites;
        let mut retained = 1.0;
        for j in 0..sites.len() - 1 {
            let m = sites[j].left_matrix();
            let (u, s, vt) = svd_sorted(&m);
            let total: f64 = s.iter().map(|x| x * x).sum();
            let mut keep = s.iter().filter(|&&x| x > SV_FLOOR * s[0]).count().max(1);
            if target.weight_tolerance > 0.0 {
                let mut discarded = 0.0;
                while keep > 1 && (discarded + s[keep - 1] * s[keep - 1]) <= target.weight_tolerance * total {
                    discarded += s[keep - 1] * s[keep - 1];
                    keep -= 1;
                }
            }
            keep = keep.min(target.chi_max.max(1));
            let kept: f64 = s[..keep].iter().map(|x| x * x).sum();
            retained *= if total > 0.0 { kept / total } else { 1.0 };
            let u_k = u.columns(0, keep).into_owned();
            let svt = CMat::from_fn(keep, vt.ncols(), |r, c| vt[(r, c)] * s[r]);
            sites[j] = SiteTensor::from_left_matrix(&u_k, d);
            let next = svt * sites[j + 1].right_matrix();
            sites[j + 1] = SiteTensor::from_right_matrix(&next, d);
        }
        for x in sites[0].data.iter_mut() {
            *x *= norm;
        }
        Ok((MpsState { d, sites, form: CanonicalForm::None }, retained))
    }

    /// Compressed, canonical, unit-norm state with `|⟨out|in⟩|²` (input normalized).
    pub fn compress(&self, target: CompressionTarget) -> Result<(MpsState, f64), StatesError> {
        let (projected, retained) = self.truncate_projected(target)?;
        let (canon, _) = projected.left_canonicalize()?;
        Ok((canon, retained))
    }

    /// `self + other` as a direct sum of bond spaces.
    pub fn add(&self, other: &MpsState) -> Result<MpsState, StatesError> {
        if self.d != other.d || self.n_sites() != other.n_sites() {
            return Err(StatesError::ShapeMismatch("cannot add states of different shapes".into()));
        }
        let n = self.n_sites();
        let d = self.d;
        if n == 1 {
            let t = SiteTensor::from_fn(1, d, 1, |_, k, _| self.sites[0].get(0, k, 0) + other.sites[0].get(0, k, 0));
            return MpsState::new(vec![t]);
        }
        let sites = (0..n)
            .map(|j| {
                let a = &self.sites[j];
                let b = &other.sites[j];
                if j == 0 {
                    SiteTensor::from_fn(1, d, a.chi_right + b.chi_right, |_, k, r| {
                        if r < a.chi_right {
                            a.get(0, k, r)
                        } else {
                            b.get(0, k, r - a.chi_right)
                        }
                    })
                } else if j == n - 1 {
                    SiteTensor::from_fn(a.chi_left + b.chi_left, d, 1, |l, k, _| {
                        if l < a.chi_left {
                            a.get(l, k, 0)
                        } else {
                            b.get(l - a.chi_left, k, 0)
                        }
                    })
                } else {
                    SiteTensor::from_fn(a.chi_left + b.chi_left, d, a.chi_right + b.chi_right, |l, k, r| {
                        match (l < a.chi_left, r < a.chi_right) {
                            (true, true) => a.get(l, k, r),
                            (false, false) => b.get(l - a.chi_left, k, r - a.chi_right),
                            _ => ZERO,
                        }
                    })
                }
            })
            .collect();
        MpsState::new(sites)
    }

    pub(crate) fn from_parts(d: usize, sites: Vec<SiteTensor>, form: CanonicalForm) -> Self {
        Self { d, sites, form }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_state_amplitude() {
        let m = MpsState::basis_state(&[1, 3, 0], 4, C64::new(0.5, 0.0));
        assert_eq!(m.amplitude(&[1, 3, 0]), C64::new(0.5, 0.0));
        assert_eq!(m.amplitude(&[1, 3, 1]), ZERO);
        let sv = m.to_statevector().unwrap();
        assert_eq!(sv[1 + 3 * 4], C64::new(0.5, 0.0));
    }

    #[test]
    fn canonical_product_state_has_unit_columns() {
        let m = MpsState::product(&[vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)], vec![C64::new(0.0, 2.0), ZERO]]).unwrap();
        let (c, norm) = m.left_canonicalize().unwrap();
        assert!((norm - 10.0).abs() < 1e-12);
        assert!(c.isometry_residual() < 1e-12);
    }
}
