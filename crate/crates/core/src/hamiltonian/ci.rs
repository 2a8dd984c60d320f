use rayon::prelude::*;

use super::fcidump::FciDump;
use super::{DenseHamiltonian, HamiltonianError};
use crate::gf2::Gf2Vec;
use crate::linalg::{CMat, C64};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

fn strings(n_orb: usize, n_elec: usize) -> Vec<u64> {
    (0u64..1 << n_orb).filter(|m| m.count_ones() as usize == n_elec).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Interleaved spin-orbital mask: spatial `p` owns bits `2p` (α) and `2p + 1` (β).
fn interleave(alpha: u64, beta: u64, n_orb: usize) -> u128 {
    let mut m = 0u128;
    for p in 0..n_orb {
        m |= ((alpha >> p & 1) as u128) << (2 * p);
        m |= ((beta >> p & 1) as u128) << (2 * p + 1);
    }
    m
}

/// Determinants of the `(n_alpha, n_beta)` sector ordered lexicographically by
/// `(α-string, β-string)` bitmask, as interleaved spin-orbital masks.
pub fn determinant_basis(n_orb: usize, n_alpha: usize, n_beta: usize) -> Vec<u128> {
    let a = strings(n_orb, n_alpha);
    let b = strings(n_orb, n_beta);
    a.iter().flat_map(|&x| b.iter().map(move |&y| interleave(x, y, n_orb))).collect()
}

fn mask_to_label(m: u128, n_so: usize) -> Gf2Vec {
    let mut v = Gf2Vec::zeros(n_so);
    for j in 0..n_so {
        v.set(j, m >> j & 1 == 1);
    }
    v
}

struct Integrals<'a> {
    fd: &'a FciDump,
}

impl Integrals<'_> {
    fn h(&self, p: usize, q: usize) -> f64 {
        if p % 2 == q % 2 {
            self.fd.h(p / 2, q / 2)
        } else {
            0.0
        }
    }

    /// `⟨PQ|RS⟩ = (pr|qs)` with spin selection.
    fn phys(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        if p % 2 == r % 2 && q % 2 == s % 2 {
            self.fd.g(p / 2, r / 2, q / 2, s / 2)
        } else {
            0.0
        }
    }

    fn anti(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.phys(p, q, r, s) - self.phys(p, q, s, r)
    }
}

/// Parity of occupied spin-orbitals below `p`.
fn parity_below(det: u128, p: usize) -> f64 {
    if (det & ((1u128 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn bits(m: u128) -> impl Iterator<Item = usize> {
    (0..128).filter(move |&j| m >> j & 1 == 1)
}

fn element(ints: &Integrals<'_>, bra: u128, ket: u128, core: f64) -> f64 {
    let diff = bra ^ ket;
    match diff.count_ones() {
        0 => {
            let occ: Vec<usize> = bits(ket).collect();
            let mut e = core;
            for &p in &occ {
                e += ints.h(p, p);
            }
            for (i, &p) in occ.iter().enumerate() {
                for &q in &occ[i + 1..] {
                    e += ints.anti(p, q, p, q);
                }
            }
            e
        }
        2 => {
            let p = bits(ket & diff).next().expect("one hole");
            let r = bits(bra & diff).next().expect("one particle");
            let mut det = ket;
            let mut sign = parity_below(det, p);
            det &= !(1u128 << p);
            sign *= parity_below(det, r);
            let mut v = ints.h(r, p);
            for q in bits(ket).filter(|&q| q != p) {
                v += ints.anti(r, q, p, q);
            }
            sign * v
        }
        4 => {
            let mut holes = bits(ket & diff);
            let (p, q) = (holes.next().expect("hole"), holes.next().expect("hole"));
            let mut parts = bits(bra & diff);
            let (r, s) = (parts.next().expect("particle"), parts.next().expect("particle"));
            // a†_r a†_s a_q a_p |ket⟩, applied right to left.
            let mut det = ket;
            let mut sign = parity_below(det, p);
            det &= !(1u128 << p);
            sign *= parity_below(det, q);
            det &= !(1u128 << q);
            sign *= parity_below(det, s);
            det |= 1u128 << s;
            sign *= parity_below(det, r);
            sign * ints.anti(r, s, p, q)
        }
        _ => 0.0,
    }
}

pub fn build_ci_matrix(fd: &FciDump, n_alpha: usize, n_beta: usize) -> Result<DenseHamiltonian, HamiltonianError> {
    build_ci_matrix_with_cap(fd, n_alpha, n_beta, DEFAULT_DIMENSION_CAP)
}

/// Full-CI matrix of the `(n_alpha, n_beta)` sector by Slater–Condon rules.
pub fn build_ci_matrix_with_cap(
    fd: &FciDump,
    n_alpha: usize,
    n_beta: usize,
    cap: usize,
) -> Result<DenseHamiltonian, HamiltonianError> {
    if n_alpha > fd.n_orb || n_beta > fd.n_orb {
        return Err(HamiltonianError::InconsistentHeader(format!(
            "({n_alpha}, {n_beta}) electrons do not fit in {} orbitals",
            fd.n_orb
        )));
    }
    let dim = binomial(fd.n_orb, n_alpha).saturating_mul(binomial(fd.n_orb, n_beta));
    if dim > cap {
        return Err(HamiltonianError::DimensionCapExceeded { dim, cap });
    }
    let basis = determinant_basis(fd.n_orb, n_alpha, n_beta);
    let ints = Integrals { fd };
    let rows: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|&bra| basis.iter().map(|&ket| element(&ints, bra, ket, fd.core_energy)).collect())
        .collect();
    let m = CMat::from_fn(dim, dim, |i, j| C64::from(rows[i][j]));
    let labels = basis.iter().map(|&b| mask_to_label(b, 2 * fd.n_orb)).collect();
    DenseHamiltonian::new(m, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_order_is_alpha_major() {
        let b = determinant_basis(2, 1, 1);
        // α in orbital 0 first, then β over orbitals 0,1.
        assert_eq!(b, vec![0b0011, 0b1001, 0b0110, 0b1100]);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(2, 3), 0);
    }
}
