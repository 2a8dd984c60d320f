//! Initial-state preparation toolkit for quantum phase estimation.
//!
//! The crate covers the classical side of preparing and assessing trial states:
//!
//! * [`gf2`] compresses determinant bit strings to short distinct signatures.
//! * [`resources`] counts Toffoli gates and qubits for the SOS and MPS encoders.
//! * [`hamiltonian`] builds small Hamiltonians from FCIDUMP integrals or dense matrices.
//! * [`states`] holds sum-of-Slater and matrix-product states and converts between them.
//! * [`encodesim`] simulates both preparation circuits on statevectors.
//! * [`spectra`] computes and estimates energy distributions.
//! * [`qpestats`] and [`leakage`] analyse phase-estimation outcome statistics.
//! * [`refine`] simulates coarse-QPE post-selection and QETU filtering.
//! * [`cli`] drives everything from the `qprep` binary.

pub mod cli;
pub mod encodesim;
pub mod gf2;
pub mod hamiltonian;
pub mod leakage;
pub mod linalg;
pub mod numerics;
pub mod qpestats;
pub mod refine;
pub mod reproduce;
pub mod resources;
pub mod spectra;
pub mod states;
