//! Hamiltonians at desk scale: FCIDUMP integrals, full-CI matrices in a determinant
//! basis, dense Hermitian ingestion and affine spectrum normalization.

mod ci;
mod dense_io;
mod fcidump;

pub use ci::{build_ci_matrix, build_ci_matrix_with_cap, determinant_basis, DEFAULT_DIMENSION_CAP};
pub use dense_io::{read_dense_binary, read_dense_csv, write_dense_binary, write_dense_csv};
pub use fcidump::{parse_fcidump, serialize_fcidump, FciDump};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::Gf2Vec;
use crate::linalg::{hermitian_eigenvalues, CMat, CVec, C64};
use crate::states::SosState;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("inconsistent header: {0}")]
    InconsistentHeader(String),
    #[error("determinant space of dimension {dim} exceeds the cap of {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("matrix is not Hermitian (max deviation {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix file: {0}")]
    Format(String),
    #[error("determinant {0} is not in the Hamiltonian basis")]
    StateOutsideBasis(String),
    #[error("invalid normalization: {0}")]
    InvalidNormalization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tolerance on `‖H − H†‖_max`.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseHamiltonian {
    matrix: CMat,
    basis_labels: Option<Vec<Gf2Vec>>,
}

impl DenseHamiltonian {
    pub fn new(matrix: CMat, basis_labels: Option<Vec<Gf2Vec>>) -> Result<Self, HamiltonianError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(HamiltonianError::Format(format!("matrix is {}x{}", matrix.nrows(), matrix.ncols())));
        }
        if let Some(labels) = &basis_labels {
            if labels.len() != matrix.nrows() {
                return Err(HamiltonianError::Format("label count does not match dimension".into()));
            }
        }
        let residual = crate::linalg::max_abs_diff(&matrix, &matrix.adjoint());
        if residual > HERMITICITY_TOL {
            return Err(HamiltonianError::NotHermitian { residual });
        }
        Ok(Self { matrix, basis_labels })
    }

    pub fn from_real(m: &nalgebra::DMatrix<f64>) -> Result<Self, HamiltonianError> {
        Self::new(crate::linalg::real_matrix(m), None)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn basis_labels(&self) -> Option<&[Gf2Vec]> {
        self.basis_labels.as_deref()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `scale · H + shift · 1`.
    pub fn apply_normalizer(&self, n: &AffineNormalizer) -> Self {
        let mut m = &self.matrix * C64::from(n.scale);
        for i in 0..m.nrows() {
            m[(i, i)] += C64::from(n.shift);
        }
        Self { matrix: m, basis_labels: self.basis_labels.clone() }
    }

    /// Coefficient vector of an SOS state in the labelled basis.
    pub fn embed_state(&self, s: &SosState) -> Result<CVec, HamiltonianError> {
        let labels = self
            .basis_labels
            .as_ref()
            .ok_or_else(|| HamiltonianError::Format("Hamiltonian has no basis labels".into()))?;
        let index: std::collections::HashMap<&Gf2Vec, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let mut v = CVec::zeros(self.dim());
        for t in s.terms() {
            let i = index
                .get(&t.occ)
                .ok_or_else(|| HamiltonianError::StateOutsideBasis(t.occ.to_bit_string()))?;
            v[*i] += t.amp;
        }
        Ok(v)
    }
}

/// `E ↦ scale · E + shift`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineNormalizer {
    pub scale: f64,
    pub shift: f64,
}

impl AffineNormalizer {
    pub const IDENTITY: AffineNormalizer = AffineNormalizer { scale: 1.0, shift: 0.0 };

    pub fn new(scale: f64, shift: f64) -> Result<Self, HamiltonianError> {
        if !(scale.is_finite() && shift.is_finite()) || scale == 0.0 {
            return Err(HamiltonianError::InvalidNormalization(format!("scale {scale}, shift {shift}")));
        }
        Ok(Self { scale, shift })
    }

    pub fn apply(&self, e: f64) -> f64 {
        self.scale * e + self.shift
    }

    pub fn invert(&self, e: f64) -> f64 {
        (e - self.shift) / self.scale
    }

    /// Map sending `[lo, hi]` onto `[margin, 1 − margin]`; identity if already inside.
    pub fn for_range(lo: f64, hi: f64, margin: f64) -> Result<Self, HamiltonianError> {
        if !(0.0..0.5).contains(&margin) {
            return Err(HamiltonianError::InvalidNormalization(format!("margin {margin} outside [0, 0.5)")));
        }
        if lo >= margin && hi <= 1.0 - margin {
            return Ok(Self::IDENTITY);
        }
        if hi - lo <= 0.0 {
            return Self::new(1.0, 0.5 - lo);
        }
        let scale = (1.0 - 2.0 * margin) / (hi - lo);
        Self::new(scale, margin - scale * lo)
    }
}

/// Rescales `h` so its spectrum lies in `[margin, 1 − margin]`, using exact eigenvalues.
pub fn normalize_spectrum(h: &DenseHamiltonian, margin: f64) -> Result<(DenseHamiltonian, AffineNormalizer), HamiltonianError> {
    let ev = h.eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let n = AffineNormalizer::for_range(lo, hi, margin)?;
    Ok((h.apply_normalizer(&n), n))
}
