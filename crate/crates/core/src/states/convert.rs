use std::collections::HashMap;

use super::mps::{CanonicalForm, CompressionTarget, MpsState};
use super::sos::{SosState, SosTerm};
use super::StatesError;
use crate::gf2::Gf2Vec;
use crate::linalg::{C64, ONE, ZERO};

fn occupation_from_config(config: &[usize], bits: usize) -> Gf2Vec {
    let mut occ = Gf2Vec::zeros(config.len() * bits);
    for (j, &n) in config.iter().enumerate() {
        for t in 0..bits {
            occ.set(j * bits + t, n >> t & 1 == 1);
        }
    }
    occ
}

fn config_from_occupation(occ: &Gf2Vec, bits: usize) -> Vec<usize> {
    (0..occ.len() / bits)
        .map(|j| (0..bits).filter(|&t| occ.get(j * bits + t)).map(|t| 1 << t).sum())
        .collect()
}

/// Expands an MPS into determinants by a depth-first walk over prefixes, dropping
/// any prefix whose partial coefficient vector has squared norm below `threshold`.
///
/// The walk runs on the canonical form, so no completion of a dropped prefix can
/// carry more weight than the prefix itself. Amplitudes are rescaled to the input norm.
pub fn mps_to_sos(m: &MpsState, threshold: f64, term_cap: usize) -> Result<SosState, StatesError> {
    let bits = m.bits_per_site()?;
    let (canon, norm) = if m.form() == CanonicalForm::Left {
        (m.clone(), 1.0)
    } else {
        m.left_canonicalize()?
    };
    let sites = canon.sites();
    let n_sites = sites.len();
    let d = canon.d();
    let mut terms = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec<C64>)> = vec![(Vec::new(), vec![ONE])];
    while let Some((prefix, partial)) = stack.pop() {
        let site = &sites[prefix.len()];
        for n in (0..d).rev() {
            let mut next = vec![ZERO; site.chi_right];
            for (l, &pl) in partial.iter().enumerate() {
                if pl == ZERO {
                    continue;
                }
                for (r, slot) in next.iter_mut().enumerate() {
                    *slot += pl * site.get(l, n, r);
                }
            }
            let weight: f64 = next.iter().map(|x| x.norm_sqr()).sum();
            if weight < threshold || weight == 0.0 {
                continue;
            }
            let mut config = prefix.clone();
            config.push(n);
            if config.len() == n_sites {
                if terms.len() >= term_cap {
                    return Err(StatesError::TermBudgetExceeded { cap: term_cap });
                }
                terms.push(SosTerm { amp: next[0] * norm, occ: occupation_from_config(&config, bits) });
            } else {
                stack.push((config, next));
            }
        }
    }
    SosState::new(n_sites * bits, terms)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SosToMpsOptions {
    pub local_dim: usize,
    pub chi_max: usize,
    /// Number of term additions between intermediate compressions.
    pub compress_every: usize,
}

impl Default for SosToMpsOptions {
    fn default() -> Self {
        Self { local_dim: 4, chi_max: 64, compress_every: 8 }
    }
}

/// Sums determinants as bond-one MPSs, largest `|α|` first, compressing periodically.
/// Returns the normalized canonical MPS and its fidelity with the normalized input.
pub fn sos_to_mps(s: &SosState, opts: SosToMpsOptions) -> Result<(MpsState, f64), StatesError> {
    if !opts.local_dim.is_power_of_two() || opts.local_dim < 2 {
        return Err(StatesError::InvalidLocalDim(opts.local_dim));
    }
    let bits = opts.local_dim.trailing_zeros() as usize;
    if s.n_spin_orbitals() % bits != 0 {
        return Err(StatesError::ShapeMismatch(format!(
            "{} spin-orbitals do not divide into sites of {bits} bits",
            s.n_spin_orbitals()
        )));
    }
    if s.is_empty() {
        return Err(StatesError::ZeroNorm);
    }
    let sorted = s.sorted_by_weight();
    let target = CompressionTarget::chi(opts.chi_max);
    let cadence = opts.compress_every.max(1);
    let mut acc: Option<MpsState> = None;
    for (count, term) in sorted.terms().iter().enumerate() {
        let config = config_from_occupation(&term.occ, bits);
        let piece = MpsState::basis_state(&config, opts.local_dim, term.amp);
        let sum = match acc {
            None => piece,
            Some(a) => a.add(&piece)?,
        };
        acc = Some(if (count + 1) % cadence == 0 { sum.truncate_projected(target)?.0 } else { sum });
    }
    let (out, _) = acc.expect("nonempty").compress(target)?;
    let fid = sos_mps_fidelity(s, &out)?;
    Ok((out, fid))
}

fn sos_mps_fidelity(s: &SosState, m: &MpsState) -> Result<f64, StatesError> {
    let ov = overlap(StateRef::Sos(s), StateRef::Mps(m))?;
    Ok(ov.norm_sqr() / (s.norm().powi(2) * m.norm().powi(2)))
}

#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Sos(&'a SosState),
    Mps(&'a MpsState),
}

/// `⟨a|b⟩`, computed without dense statevectors.
pub fn overlap(a: StateRef<'_>, b: StateRef<'_>) -> Result<C64, StatesError> {
    match (a, b) {
        (StateRef::Sos(x), StateRef::Sos(y)) => {
            if x.n_spin_orbitals() != y.n_spin_orbitals() {
                return Err(StatesError::ShapeMismatch("different spin-orbital counts".into()));
            }
            let index: HashMap<&Gf2Vec, C64> = x.terms().iter().map(|t| (&t.occ, t.amp)).collect();
            Ok(y.terms().iter().filter_map(|t| index.get(&t.occ).map(|a| a.conj() * t.amp)).sum())
        }
        (StateRef::Sos(x), StateRef::Mps(m)) => {
            let bits = m.bits_per_site()?;
            if x.n_spin_orbitals() != m.n_sites() * bits {
                return Err(StatesError::ShapeMismatch("SOS and MPS cover different orbitals".into()));
            }
            Ok(x.terms().iter().map(|t| t.amp.conj() * m.amplitude(&config_from_occupation(&t.occ, bits))).sum())
        }
        (StateRef::Mps(m), StateRef::Sos(x)) => overlap(StateRef::Sos(x), StateRef::Mps(m)).map(|c| c.conj()),
        (StateRef::Mps(x), StateRef::Mps(y)) => x.inner(y),
    }
}
