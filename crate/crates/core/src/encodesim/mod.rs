//! Statevector simulation of the two state-preparation circuits.
//!
//! The SOS encoder works on three registers laid out from the low bits up: the
//! `2N` system qubits, the `⌈log₂D⌉` enumeration qubits and the identification
//! qubits holding signatures. Every step after the initial amplitude loading is a
//! basis permutation, so the simulation tracks the `D` nonzero amplitudes exactly.

mod mps_circuit;

pub use mps_circuit::{
    complete_gj_unitaries, doubled_operator, full_space_residual, householder_decompose, householder_full, reflection_product,
    simulate_mps_circuit, simulate_mps_circuit_householder, subspace_residual, w_state_via_circuit, GjUnitary,
    MpsCircuitReport, Reflection,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{ceil_log2, compress, Gf2Error, Gf2Vec, SignatureMap};
use crate::linalg::C64;
use crate::states::{SosState, StatesError};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("simulation budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("empty state")]
    Empty,
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    States(#[from] StatesError),
}

/// Limits for the SOS encoding simulation.
#[derive(Clone, Copy, Debug)]
pub struct SimulationBudget {
    pub max_system_qubits: usize,
    pub max_determinants: usize,
}

impl Default for SimulationBudget {
    fn default() -> Self {
        Self { max_system_qubits: 12, max_determinants: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingPlan {
    pub n_system: usize,
    pub n_enum: usize,
    pub n_ident: usize,
    pub signature_map: SignatureMap,
    /// Layer `k` holds `(system qubit, identification qubit k)` pairs, one per set bit of `u_k`.
    pub cnot_layers: Vec<Vec<(usize, usize)>>,
    /// `(i, b_i)`: map enumeration value `i` to zero when the identification register reads `b_i`.
    pub uncompute_controls: Vec<(usize, Gf2Vec)>,
    pub amplitudes: Vec<C64>,
    pub determinants: Vec<Gf2Vec>,
}

impl EncodingPlan {
    pub fn cnot_count(&self) -> usize {
        self.cnot_layers.iter().map(Vec::len).sum()
    }

    pub fn total_qubits(&self) -> usize {
        self.n_system + self.n_enum + self.n_ident
    }

    /// System qubits touched by any CNOT.
    pub fn touched_system_qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.cnot_layers.iter().flatten().map(|&(s, _)| s).collect();
        q.sort_unstable();
        q.dedup();
        q
    }
}

pub fn plan_encoding(s: &SosState) -> Result<EncodingPlan, EncodeError> {
    if s.is_empty() {
        return Err(EncodeError::Empty);
    }
    let dets = s.occupations();
    let map = compress(&dets)?;
    let d = dets.len();
    let n_ident = map.signature_len();
    let cnot_layers = map
        .u_vectors
        .iter()
        .enumerate()
        .map(|(k, u)| (0..u.len()).filter(|&j| u.get(j)).map(|j| (map.selected_rows[j], k)).collect())
        .collect();
    let uncompute_controls = if d == 1 {
        Vec::new()
    } else {
        map.signatures.iter().cloned().enumerate().collect()
    };
    Ok(EncodingPlan {
        n_system: s.n_spin_orbitals(),
        n_enum: ceil_log2(d),
        n_ident,
        signature_map: map,
        cnot_layers,
        uncompute_controls,
        amplitudes: s.terms().iter().map(|t| t.amp).collect(),
        determinants: dets,
    })
}

/// Basis amplitudes over all qubits, stored sparsely.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseState {
    pub n_qubits: usize,
    pub amps: HashMap<u64, C64>,
}

impl SparseState {
    /// Applies a basis permutation; panics in debug builds if `f` is not injective on the support.
    pub fn permute(&mut self, f: impl Fn(u64) -> u64) {
        let before = self.amps.len();
        self.amps = self.amps.drain().map(|(i, a)| (f(i), a)).collect();
        debug_assert_eq!(before, self.amps.len(), "operation is not a permutation");
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_dense(&self) -> Option<Vec<C64>> {
        if self.n_qubits > 24 {
            return None;
        }
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.n_qubits];
        for (&i, &a) in &self.amps {
            v[i as usize] = a;
        }
        Some(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub fidelity: f64,
    pub ancilla_residual: f64,
    /// Largest `| |amp|² − |α_i|² |` over determinants.
    pub max_probability_deviation: f64,
    pub n_system: usize,
    pub n_enum: usize,
    pub n_ident: usize,
    pub cnot_count: usize,
    pub cnot_applications: usize,
    pub multi_controlled_ops: usize,
    pub qrom_lookups: usize,
}

fn vec_to_u64(v: &Gf2Vec) -> u64 {
    debug_assert!(v.len() <= 64);
    v.low_u64()
}

/// Runs the six-step encoder on the sparse statevector and compares the system
/// register with the target state.
pub fn simulate_sos_encoding(s: &SosState, budget: SimulationBudget) -> Result<(SparseState, EncodingReport), EncodeError> {
    if s.n_spin_orbitals() > budget.max_system_qubits {
        return Err(EncodeError::BudgetExceeded(format!(
            "{} system qubits > {}",
            s.n_spin_orbitals(),
            budget.max_system_qubits
        )));
    }
    if s.len() > budget.max_determinants {
        return Err(EncodeError::BudgetExceeded(format!("{} determinants > {}", s.len(), budget.max_determinants)));
    }
    let target = s.normalized()?;
    let plan = plan_encoding(&target)?;
    let ns = plan.n_system;
    let ne = plan.n_enum;
    let ni = plan.n_ident;
    let sys_mask = (1u64 << ns) - 1;
    let enum_of = |x: u64| (x >> ns) & ((1u64 << ne) - 1);
    let ident_of = |x: u64| (x >> (ns + ne)) & ((1u64 << ni) - 1);
    let nus: Vec<u64> = plan.determinants.iter().map(vec_to_u64).collect();

    let mut state = SparseState { n_qubits: ns + ne + ni, amps: HashMap::new() };
    // Step 1: amplitude loading on the enumeration register.
    for (i, a) in plan.amplitudes.iter().enumerate() {
        state.amps.insert((i as u64) << ns, *a);
    }
    // Step 2: QROM writes ν_i into the system register, controlled on |i⟩.
    let d = nus.len() as u64;
    state.permute(|x| {
        let i = enum_of(x);
        if i < d {
            x ^ nus[i as usize]
        } else {
            x
        }
    });
    let cnots = |state: &mut SparseState| {
        for layer in &plan.cnot_layers {
            for &(sq, k) in layer {
                state.permute(|x| if x >> sq & 1 == 1 { x ^ (1u64 << (ns + ne + k)) } else { x });
            }
        }
    };
    // Step 3: signatures b_i = U ν̃_i into the identification register.
    cnots(&mut state);
    // Step 4: |i⟩ → |0⟩ controlled on the identification register reading b_i.
    for (i, b) in &plan.uncompute_controls {
        let pattern = vec_to_u64(b);
        let i = *i as u64;
        state.permute(|x| if ident_of(x) == pattern { x ^ (i << ns) } else { x });
    }
    // Step 5: uncompute the identification register.
    cnots(&mut state);

    let mut residual = 0.0;
    let mut overlap = C64::new(0.0, 0.0);
    let mut max_dev: f64 = 0.0;
    let mut sys_amps: HashMap<u64, C64> = HashMap::new();
    for (&x, &a) in &state.amps {
        if x & !sys_mask != 0 {
            residual += a.norm_sqr();
        } else {
            sys_amps.insert(x, a);
        }
    }
    for (nu, alpha) in nus.iter().zip(&plan.amplitudes) {
        let got = sys_amps.get(nu).copied().unwrap_or_default();
        overlap += alpha.conj() * got;
        max_dev = max_dev.max((got.norm_sqr() - alpha.norm_sqr()).abs());
    }
    let fidelity = overlap.norm_sqr() / state.norm_sqr();
    let report = EncodingReport {
        fidelity,
        ancilla_residual: residual,
        max_probability_deviation: max_dev,
        n_system: ns,
        n_enum: ne,
        n_ident: ni,
        cnot_count: plan.cnot_count(),
        cnot_applications: 2 * plan.cnot_count(),
        multi_controlled_ops: plan.uncompute_controls.len(),
        qrom_lookups: 1,
    };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::h6_three_determinant_state;

    #[test]
    fn h6_state_is_encoded_exactly() {
        let s = h6_three_determinant_state();
        let (_, rep) = simulate_sos_encoding(&s, SimulationBudget::default()).unwrap();
        assert!(rep.fidelity > 1.0 - 1e-12, "{rep:?}");
        assert!(rep.ancilla_residual < 1e-12);
        assert_eq!(rep.multi_controlled_ops, 3);
    }

    #[test]
    fn oversized_input_is_refused() {
        let s = h6_three_determinant_state();
        let budget = SimulationBudget { max_system_qubits: 4, ..SimulationBudget::default() };
        assert!(matches!(simulate_sos_encoding(&s, budget), Err(EncodeError::BudgetExceeded(_))));
    }
}
