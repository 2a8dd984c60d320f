//! Sum-of-Slater and matrix-product state representations with conversions between them.

mod convert;
mod io;
mod mps;
mod sos;

pub use convert::{mps_to_sos, overlap, sos_to_mps, SosToMpsOptions, StateRef};
pub use io::{read_mps_binary, read_sos_json, write_mps_binary, write_sos_json};
pub use mps::{CanonicalForm, CompressionTarget, MpsState, SiteTensor};
pub use sos::{h6_three_determinant_state, SosState, SosTerm};

use thiserror::Error;

/// Default cap on statevector exports: `2^16` amplitudes.
pub const STATEVECTOR_QUBIT_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum StatesError {
    #[error("occupation {0} appears more than once")]
    DuplicateOccupation(String),
    #[error("occupation {occ} has length {found}, expected {expected}")]
    LengthMismatch { occ: String, expected: usize, found: usize },
    #[error("tensor shapes inconsistent: {0}")]
    ShapeMismatch(String),
    #[error("local dimension {0} is not a power of two")]
    InvalidLocalDim(usize),
    #[error("statevector over {qubits} qubits exceeds the cap of {cap}")]
    StatevectorTooLarge { qubits: usize, cap: usize },
    #[error("expansion exceeded the cap of {cap} terms")]
    TermBudgetExceeded { cap: usize },
    #[error("state is not in canonical form (isometry residual {residual:e})")]
    NotCanonical { residual: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
