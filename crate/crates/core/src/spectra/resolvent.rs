//! `P(E, η) = −(1/π) Im ⟨ψ|(H − E + iη)⁻¹|ψ⟩` by direct linear solves.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::{Grid, SpectraError};
use crate::hamiltonian::DenseHamiltonian;
use crate::linalg::{CMat, CVec, C64};

/// Relative residual above which a solve is rejected.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

fn unit_state(h: &DenseHamiltonian, psi: &CVec) -> Result<CVec, SpectraError> {
    if psi.len() != h.dim() {
        return Err(SpectraError::LengthMismatch { state: psi.len(), dim: h.dim() });
    }
    let n = psi.norm();
    if n == 0.0 {
        return Err(SpectraError::InvalidParameter("zero state".into()));
    }
    Ok(psi / C64::from(n))
}

fn check_eta(eta: f64) -> Result<(), SpectraError> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(SpectraError::InvalidParameter(format!("η must be positive, got {eta}")))
    }
}

fn residual(a: &CMat, x: &CVec, b: &CVec) -> f64 {
    (a * x - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Complex LU solve of `(H − E + iη) φ = ψ` per grid point.
pub fn resolvent_distribution(h: &DenseHamiltonian, psi: &CVec, eta: f64, grid: &Grid) -> Result<Vec<f64>, SpectraError> {
    check_eta(eta)?;
    let psi = unit_state(h, psi)?;
    let dim = h.dim();
    grid.points
        .par_iter()
        .map(|&e| {
            let shift = C64::new(-e, eta);
            let a = h.matrix() + CMat::identity(dim, dim) * shift;
            let phi = a.clone().lu().solve(&psi).ok_or(SpectraError::SolverFailure { energy: e, residual: f64::INFINITY })?;
            let r = residual(&a, &phi, &psi);
            if r > SOLVE_RESIDUAL_TOL {
                return Err(SpectraError::SolverFailure { energy: e, residual: r });
            }
            Ok(-psi.dotc(&phi).im / PI)
        })
        .collect()
}

/// Hermitian positive-definite route: `[(H − E)² + η²] Y = −(η/π) ψ`, `P = −⟨ψ|Y⟩`.
pub fn resolvent_distribution_real(
    h: &DenseHamiltonian,
    psi: &CVec,
    eta: f64,
    grid: &Grid,
) -> Result<Vec<f64>, SpectraError> {
    check_eta(eta)?;
    let psi = unit_state(h, psi)?;
    let dim = h.dim();
    let rhs = &psi * C64::from(-eta / PI);
    grid.points
        .par_iter()
        .map(|&e| {
            let shifted = h.matrix() - CMat::identity(dim, dim) * C64::from(e);
            let a = &shifted * &shifted + CMat::identity(dim, dim) * C64::from(eta * eta);
            let y = a
                .clone()
                .cholesky()
                .map(|c| c.solve(&rhs))
                .ok_or(SpectraError::SolverFailure { energy: e, residual: f64::INFINITY })?;
            let r = residual(&a, &y, &rhs);
            if r > SOLVE_RESIDUAL_TOL {
                return Err(SpectraError::SolverFailure { energy: e, residual: r });
            }
            Ok(-psi.dotc(&y).re)
        })
        .collect()
}
