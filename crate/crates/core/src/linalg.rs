//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigenvalues ascending with matching eigenvector columns.
pub fn hermitian_eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Thin SVD `m = u · diag(s) · vt` with singular values descending.
///
/// Uses faer: nalgebra's complex bidiagonal SVD returns factors that fail to
/// reproduce small, sparse inputs often enough to corrupt MPS truncations.
pub fn svd_sorted(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (CMat::zeros(rows, 0), Vec::new(), CMat::zeros(0, cols));
    }
    let fm = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    match fm.thin_svd() {
        Ok(svd) => {
            let k = rows.min(cols);
            let (u, v, sv) = (svd.U(), svd.V(), svd.S().column_vector());
            let s = (0..k).map(|i| sv[i].re).collect();
            (CMat::from_fn(rows, k, |i, j| u[(i, j)]), s, CMat::from_fn(k, cols, |i, j| v[(j, i)].conj()))
        }
        Err(_) => nalgebra_svd_sorted(m),
    }
}

fn nalgebra_svd_sorted(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = CMat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt_sorted = CMat::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    (u_sorted, s, vt_sorted)
}

/// Extends orthonormal columns to a unitary by Gram–Schmidt over the standard basis.
pub fn complete_unitary(cols: &CMat) -> CMat {
    let n = cols.nrows();
    let mut basis: Vec<CVec> = cols.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while basis.len() < n && e < n {
        let mut v = CVec::from_element(n, ZERO);
        v[e] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / C64::from(norm));
        }
        e += 1;
    }
    CMat::from_columns(&basis)
}

/// `max |(m†m − 1)_{ij}|`.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let prod = m.adjoint() * m;
    max_abs_diff(&prod, &CMat::identity(m.ncols(), m.ncols()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`.
pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    let inner: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    inner.norm_sqr() / (na * nb)
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMat {
    m.map(C64::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reproduces_a_sparse_wide_matrix() {
        #[rustfmt::skip]
        let entries = [
            (0.0, 0.0), (-1.227401348873952e-17, -7.137801921051066e-17), (0.07860939828240628, -0.10583506198371004),
            (-5.056074607450941e-16, -6.848101050598108e-16), (0.6605655509648224, 0.0), (0.0, 0.0), (0.0, 0.0),
            (0.0, 0.0), (0.0, 0.0), (-1.53539627857568e-17, -2.1586734956475128e-16),
            (-1.336921513939392e-16, -2.5203759206171702e-17), (-0.17849349112553994, -0.6086748257521069), (0.0, 0.0),
            (-2.627389945714153e-16, 6.464789947101276e-16), (-0.033224987947928254, 0.2868040806612916),
            (4.7883321445958435e-18, -8.841553137754516e-17), (0.0, 0.0), (-0.0039292658276026005, -0.24607268340579708),
            (1.5077452027755384e-16, 5.178847135178106e-16), (-3.636420026316562e-17, -1.965895290423515e-17),
        ];
        let m = CMat::from_iterator(4, 5, entries.iter().map(|&(re, im)| C64::new(re, im)));
        let (u, s, vt) = svd_sorted(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let us = CMat::from_fn(4, s.len(), |r, c| u[(r, c)] * s[c]);
        assert!(max_abs_diff(&(us * &vt), &m) < 1e-13);
        assert!(max_abs_diff(&(u.adjoint() * &u), &CMat::identity(s.len(), s.len())) < 1e-13);
    }
}
