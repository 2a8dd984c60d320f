use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{StatesError, STATEVECTOR_QUBIT_CAP};
use crate::gf2::Gf2Vec;
use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SosTerm {
    pub amp: C64,
    /// Bit `j` is the occupation of spin-orbital `j`.
    pub occ: Gf2Vec,
}

/// `Σ_i α_i |ν_i⟩` over `n_spin_orbitals` spin-orbitals.
///
/// Spatial orbital `p` owns spin-orbitals `2p` (α) and `2p + 1` (β). The
/// determinant `|ν⟩` is the product of creation operators in increasing
/// spin-orbital order acting on the vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct SosState {
    n_spin_orbitals: usize,
    terms: Vec<SosTerm>,
}

impl SosState {
    pub fn new(n_spin_orbitals: usize, terms: Vec<SosTerm>) -> Result<Self, StatesError> {
        let mut seen = HashSet::new();
        for t in &terms {
            if t.occ.len() != n_spin_orbitals {
                return Err(StatesError::LengthMismatch {
                    occ: t.occ.to_bit_string(),
                    expected: n_spin_orbitals,
                    found: t.occ.len(),
                });
            }
            if !seen.insert(t.occ.clone()) {
                return Err(StatesError::DuplicateOccupation(t.occ.to_bit_string()));
            }
        }
        Ok(Self { n_spin_orbitals, terms })
    }

    /// Builds a state from `(amplitude, occupation string)` pairs written over spin-orbitals.
    pub fn from_bit_strings(pairs: &[(C64, &str)]) -> Result<Self, StatesError> {
        let terms = pairs
            .iter()
            .map(|(a, s)| {
                Gf2Vec::parse_bits(s)
                    .map(|occ| SosTerm { amp: *a, occ })
                    .map_err(|e| StatesError::Parse(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = terms.first().map_or(0, |t| t.occ.len());
        Self::new(n, terms)
    }

    /// Builds a state from spatial occupations: `0`, `a` (α), `b` (β), `2`.
    pub fn from_spatial(pairs: &[(C64, &str)]) -> Result<Self, StatesError> {
        let mut terms = Vec::with_capacity(pairs.len());
        for (amp, s) in pairs {
            let mut bits = Vec::new();
            for c in s.chars() {
                let (a, b) = match c {
                    '0' => (false, false),
                    'a' | 'u' | 'α' => (true, false),
                    'b' | 'd' | 'β' => (false, true),
                    '2' => (true, true),
                    ',' | ' ' => continue,
                    other => return Err(StatesError::Parse(format!("bad spatial occupation {other:?}"))),
                };
                bits.push(a);
                bits.push(b);
            }
            terms.push(SosTerm { amp: *amp, occ: Gf2Vec::from_bools(&bits) });
        }
        let n = terms.first().map_or(0, |t| t.occ.len());
        Self::new(n, terms)
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.n_spin_orbitals
    }

    pub fn terms(&self) -> &[SosTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn occupations(&self) -> Vec<Gf2Vec> {
        self.terms.iter().map(|t| t.occ.clone()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self, StatesError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(StatesError::ZeroNorm);
        }
        Ok(Self {
            n_spin_orbitals: self.n_spin_orbitals,
            terms: self.terms.iter().map(|t| SosTerm { amp: t.amp / n, occ: t.occ.clone() }).collect(),
        })
    }

    pub fn amplitude(&self, occ: &Gf2Vec) -> C64 {
        self.terms.iter().find(|t| &t.occ == occ).map_or(C64::new(0.0, 0.0), |t| t.amp)
    }

    /// Terms reordered by descending `|α|`, ties kept in input order.
    pub fn sorted_by_weight(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| b.amp.norm_sqr().total_cmp(&a.amp.norm_sqr()));
        Self { n_spin_orbitals: self.n_spin_orbitals, terms }
    }

    /// Index of an occupation in the computational basis, spin-orbital `j` on bit `j`.
    pub fn basis_index(occ: &Gf2Vec) -> usize {
        (0..occ.len()).filter(|&j| occ.get(j)).map(|j| 1usize << j).sum()
    }

    pub fn to_statevector(&self) -> Result<Vec<C64>, StatesError> {
        if self.n_spin_orbitals > STATEVECTOR_QUBIT_CAP {
            return Err(StatesError::StatevectorTooLarge { qubits: self.n_spin_orbitals, cap: STATEVECTOR_QUBIT_CAP });
        }
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.n_spin_orbitals];
        for t in &self.terms {
            v[Self::basis_index(&t.occ)] += t.amp;
        }
        Ok(v)
    }

    /// Reorders spin-orbitals from interleaved (`α₀ β₀ α₁ β₁ …`) to blocked
    /// (`α₀ α₁ … β₀ β₁ …`). Each determinant picks up `(−1)^m`, where `m` counts
    /// pairs of an occupied β orbital `p` and an occupied α orbital `q > p`.
    pub fn interleaved_to_blocked(&self) -> Self {
        let n_spatial = self.n_spin_orbitals / 2;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut occ = Gf2Vec::zeros(self.n_spin_orbitals);
                for p in 0..n_spatial {
                    occ.set(p, t.occ.get(2 * p));
                    occ.set(n_spatial + p, t.occ.get(2 * p + 1));
                }
                SosTerm { amp: t.amp * Self::blocking_sign(&t.occ, n_spatial), occ }
            })
            .collect();
        Self { n_spin_orbitals: self.n_spin_orbitals, terms }
    }

    /// Inverse of [`SosState::interleaved_to_blocked`].
    pub fn blocked_to_interleaved(&self) -> Self {
        let n_spatial = self.n_spin_orbitals / 2;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut occ = Gf2Vec::zeros(self.n_spin_orbitals);
                for p in 0..n_spatial {
                    occ.set(2 * p, t.occ.get(p));
                    occ.set(2 * p + 1, t.occ.get(n_spatial + p));
                }
                SosTerm { amp: t.amp * Self::blocking_sign(&occ, n_spatial), occ }
            })
            .collect();
        Self { n_spin_orbitals: self.n_spin_orbitals, terms }
    }

    fn blocking_sign(interleaved: &Gf2Vec, n_spatial: usize) -> f64 {
        let mut swaps = 0usize;
        for p in 0..n_spatial {
            if interleaved.get(2 * p + 1) {
                swaps += (p + 1..n_spatial).filter(|&q| interleaved.get(2 * q)).count();
            }
        }
        if swaps % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// The three-determinant six-orbital state `0.86|2,2,2,0,0,0⟩ − 0.36(|β,2,α,α,0,β⟩ + |α,2,β,β,0,α⟩)`,
/// normalized.
pub fn h6_three_determinant_state() -> SosState {
    SosState::from_spatial(&[
        (C64::new(0.86, 0.0), "222000"),
        (C64::new(-0.36, 0.0), "b2aa0b"),
        (C64::new(-0.36, 0.0), "a2bb0a"),
    ])
    .and_then(|s| s.normalized())
    .expect("fixed state is valid")
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SosJson {
    pub n_spin_orbitals: usize,
    pub terms: Vec<SosTermJson>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SosTermJson {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub occ: String,
}

impl From<&SosState> for SosJson {
    fn from(s: &SosState) -> Self {
        Self {
            n_spin_orbitals: s.n_spin_orbitals,
            terms: s
                .terms
                .iter()
                .map(|t| SosTermJson { re: t.amp.re, im: t.amp.im, occ: t.occ.to_bit_string() })
                .collect(),
        }
    }
}

impl TryFrom<SosJson> for SosState {
    type Error = StatesError;

    fn try_from(j: SosJson) -> Result<Self, StatesError> {
        let terms = j
            .terms
            .iter()
            .map(|t| {
                Gf2Vec::parse_bits(&t.occ)
                    .map(|occ| SosTerm { amp: C64::new(t.re, t.im), occ })
                    .map_err(|e| StatesError::Parse(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        SosState::new(j.n_spin_orbitals, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spatial_mapping_puts_alpha_first() {
        let s = SosState::from_spatial(&[(C64::new(1.0, 0.0), "a b 2 0")]).unwrap();
        assert_eq!(s.terms()[0].occ.to_bit_string(), "10011100");
    }

    #[test]
    fn blocking_round_trip_preserves_phase() {
        let s = h6_three_determinant_state();
        let back = s.interleaved_to_blocked().blocked_to_interleaved();
        for (a, b) in s.terms().iter().zip(back.terms()) {
            assert_eq!(a.occ, b.occ);
            assert!((a.amp - b.amp).norm() < 1e-15);
        }
    }

    #[test]
    fn blocking_sign_of_two_orbitals() {
        // β₀ α₁ occupied: one α passes one β.
        let s = SosState::from_bit_strings(&[(C64::new(1.0, 0.0), "0110")]).unwrap();
        let b = s.interleaved_to_blocked();
        assert_eq!(b.terms()[0].occ.to_bit_string(), "0110");
        assert_eq!(b.terms()[0].amp.re, -1.0);
    }
}
