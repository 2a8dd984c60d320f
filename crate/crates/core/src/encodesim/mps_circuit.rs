//! Sequential MPS preparation with unitaries `G[j]` completed from canonical site
//! tensors, and their synthesis as products of Householder reflections.

use serde::{Deserialize, Serialize};

use crate::gf2::ceil_log2;
use crate::linalg::{complete_unitary, fidelity, max_abs_diff, CMat, CVec, C64, ONE, ZERO};
use crate::states::{MpsState, StatesError};

/// Isometry tolerance required of the input tensors.
const CANONICAL_TOL: f64 = 1e-10;

/// `G[j]` acting on `(ancilla α < a, qudit n)` with composite index `α·d + n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GjUnitary {
    pub matrix: CMat,
    pub ancilla_dim: usize,
    pub d: usize,
    pub chi_left: usize,
    pub chi_right: usize,
}

impl GjUnitary {
    pub fn dim(&self) -> usize {
        self.ancilla_dim * self.d
    }

    /// Column `G|α, 0⟩`.
    pub fn column(&self, alpha: usize) -> CVec {
        self.matrix.column(alpha * self.d).into_owned()
    }
}

/// Builds one unitary per site whose `(α_{j−1}, 0)` columns are the site tensor.
pub fn complete_gj_unitaries(m: &MpsState) -> Result<Vec<GjUnitary>, StatesError> {
    let residual = m.isometry_residual();
    if residual > CANONICAL_TOL {
        return Err(StatesError::NotCanonical { residual });
    }
    let d = m.d();
    Ok(m
        .sites()
        .iter()
        .map(|site| {
            let a = site.chi_left.max(site.chi_right);
            let dim = a * d;
            let cols = CMat::from_fn(dim, site.chi_left, |row, l| {
                let (r, n) = (row / d, row % d);
                if r < site.chi_right {
                    site.get(l, n, r)
                } else {
                    ZERO
                }
            });
            let full = complete_unitary(&cols);
            let mut g = CMat::zeros(dim, dim);
            let mut extra = site.chi_left;
            for c in 0..dim {
                let src = if c % d == 0 && c / d < site.chi_left {
                    c / d
                } else {
                    extra += 1;
                    extra - 1
                };
                g.set_column(c, &full.column(src));
            }
            GjUnitary { matrix: g, ancilla_dim: a, d, chi_left: site.chi_left, chi_right: site.chi_right }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpsCircuitReport {
    pub fidelity: f64,
    pub ancilla_residual: f64,
    pub ancilla_qubits: usize,
    pub max_unitarity_residual: f64,
}

/// Applies `op` (dimension `a·d`, or `2·a·d` with a leading reflection qubit when
/// `doubled`) to the ancilla, qudit `site` and optional reflection qubit.
fn apply_local(
    psi: &mut [C64],
    op: impl Fn(&CVec) -> CVec,
    a: usize,
    d: usize,
    site: usize,
    n_sites: usize,
    ancilla_dim: usize,
    doubled: bool,
) {
    let sys = d.pow(n_sites as u32);
    let stride = d.pow(site as u32);
    let anc_block = ancilla_dim * sys;
    let local = a * d * if doubled { 2 } else { 1 };
    for base in 0..sys {
        if (base / stride) % d != 0 {
            continue;
        }
        let index = |q: usize, alpha: usize, n: usize| q * anc_block + alpha * sys + base + n * stride;
        let mut v = CVec::zeros(local);
        for q in 0..if doubled { 2 } else { 1 } {
            for alpha in 0..a {
                for n in 0..d {
                    v[q * a * d + alpha * d + n] = psi[index(q, alpha, n)];
                }
            }
        }
        let w = op(&v);
        for q in 0..if doubled { 2 } else { 1 } {
            for alpha in 0..a {
                for n in 0..d {
                    psi[index(q, alpha, n)] = w[q * a * d + alpha * d + n];
                }
            }
        }
    }
}

fn report_from(psi: &[C64], target: &[C64], ancilla_qubits: usize, max_unitarity_residual: f64) -> MpsCircuitReport {
    let sys = target.len();
    let residual: f64 = psi[sys..].iter().map(|x| x.norm_sqr()).sum();
    MpsCircuitReport {
        fidelity: fidelity(&psi[..sys], target),
        ancilla_residual: residual,
        ancilla_qubits,
        max_unitarity_residual,
    }
}

/// Applies `G[1]`, then `G[2]`, … to `|0…0⟩` with a shared `⌈log₂χ_max⌉`-qubit ancilla.
/// Statevector index: `ancilla · d^N + Σ_j n_j d^j`.
pub fn simulate_mps_circuit(m: &MpsState) -> Result<(Vec<C64>, MpsCircuitReport), StatesError> {
    let (canon, _) = m.left_canonicalize()?;
    let target = canon.to_statevector()?;
    let gs = complete_gj_unitaries(&canon)?;
    let d = canon.d();
    let n = canon.n_sites();
    let nq = ceil_log2(canon.max_bond());
    let ancilla_dim = 1usize << nq;
    let mut psi = vec![ZERO; ancilla_dim * target.len()];
    psi[0] = ONE;
    let mut worst: f64 = 0.0;
    for (j, g) in gs.iter().enumerate() {
        worst = worst.max(crate::linalg::unitarity_residual(&g.matrix));
        apply_local(&mut psi, |v| &g.matrix * v, g.ancilla_dim, d, j, n, ancilla_dim, false);
    }
    let report = report_from(&psi, &target, nq, worst);
    Ok((psi, report))
}

/// Reflection `1 − 2|w⟩⟨w|` on the doubled space, index `q · dim + (α·d + n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reflection {
    pub w: CVec,
}

impl Reflection {
    pub fn apply(&self, v: &CVec) -> CVec {
        let proj = self.w.dotc(v);
        v - &self.w * (proj * 2.0)
    }
}

fn reflection_for(g: &GjUnitary, input: usize) -> Reflection {
    let dim = g.dim();
    let u = g.matrix.column(input);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = CVec::zeros(2 * dim);
    w[dim + input] = C64::from(s);
    for i in 0..dim {
        w[i] = -u[i] * s;
    }
    Reflection { w }
}

/// Reflections with `|w_α⟩ = (|1⟩|α,0⟩ − |0⟩|u_α⟩)/√2`, `u_α = G|α,0⟩`, for `α < χ_{j−1}`.
pub fn householder_decompose(g: &GjUnitary) -> Vec<Reflection> {
    (0..g.chi_left).map(|alpha| reflection_for(g, alpha * g.d)).collect()
}

/// One reflection per column of `G`; their product is the doubled operator on the whole space.
pub fn householder_full(g: &GjUnitary) -> Vec<Reflection> {
    (0..g.dim()).map(|c| reflection_for(g, c)).collect()
}

/// Matrix of `R_last ⋯ R_first` on a space of dimension `dim`.
pub fn reflection_product(refs: &[Reflection], dim: usize) -> CMat {
    let mut p = CMat::identity(dim, dim);
    for r in refs {
        let proj = r.w.adjoint() * &p;
        p -= &r.w * proj * C64::from(2.0);
    }
    p
}

/// `|0⟩⟨1| ⊗ G + |1⟩⟨0| ⊗ G†`.
pub fn doubled_operator(g: &GjUnitary) -> CMat {
    let dim = g.dim();
    let mut o = CMat::zeros(2 * dim, 2 * dim);
    o.view_mut((0, dim), (dim, dim)).copy_from(&g.matrix);
    o.view_mut((dim, 0), (dim, dim)).copy_from(&g.matrix.adjoint());
    o
}

/// Largest deviation between the reflection product and the doubled operator on
/// `span{|1⟩|α,0⟩, |0⟩|u_α⟩ : α < χ_{j−1}}`.
pub fn subspace_residual(g: &GjUnitary, refs: &[Reflection]) -> f64 {
    let dim = g.dim();
    let prod = reflection_product(refs, 2 * dim);
    let o = doubled_operator(g);
    let mut worst: f64 = 0.0;
    for alpha in 0..g.chi_left {
        let mut e = CVec::zeros(2 * dim);
        e[dim + alpha * g.d] = ONE;
        let mut u = CVec::zeros(2 * dim);
        u.rows_mut(0, dim).copy_from(&g.column(alpha));
        for v in [e, u] {
            let diff = &prod * &v - &o * &v;
            worst = worst.max(diff.iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Prepares `|w_α⟩` up to a phase: `Z·H` on the reflection qubit, CNOTs writing `α`
/// into the ancilla when it is 1, then `V` (with `V|0,0⟩ = u_α`) when it is 0.
pub fn w_state_via_circuit(g: &GjUnitary, alpha: usize) -> CVec {
    let dim = g.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = CVec::zeros(2 * dim);
    // Z H |0⟩ = (|0⟩ − |1⟩)/√2 on the reflection qubit, ancilla and qudit in |0,0⟩.
    psi[0] = C64::from(s);
    psi[dim] = C64::from(-s);
    // Controlled on the reflection qubit: |0,0⟩ → |α,0⟩.
    let moved = psi[dim];
    psi[dim] = ZERO;
    psi[dim + alpha * g.d] = moved;
    // Anti-controlled V: its first column is u_α.
    let mut v_cols = CMat::zeros(dim, 1);
    v_cols.set_column(0, &g.column(alpha));
    let v = complete_unitary(&v_cols);
    let lower = &v * psi.rows(0, dim).into_owned();
    psi.rows_mut(0, dim).copy_from(&lower);
    psi
}

/// Runs the circuit with each `G[j]` realized by its Householder reflections: the
/// reflection qubit starts in `|1⟩`, the reflections move it to `|0⟩` while applying
/// `G[j]`, and an `X` restores it before the next site.
pub fn simulate_mps_circuit_householder(m: &MpsState) -> Result<(Vec<C64>, MpsCircuitReport), StatesError> {
    let (canon, _) = m.left_canonicalize()?;
    let target = canon.to_statevector()?;
    let gs = complete_gj_unitaries(&canon)?;
    let d = canon.d();
    let n = canon.n_sites();
    let nq = ceil_log2(canon.max_bond());
    let ancilla_dim = 1usize << nq;
    let half = ancilla_dim * target.len();
    let mut psi = vec![ZERO; 2 * half];
    psi[half] = ONE;
    for (j, g) in gs.iter().enumerate() {
        let refs = householder_decompose(g);
        let a = g.ancilla_dim;
        apply_local(
            &mut psi,
            |v| {
                let mut out = v.clone();
                for r in &refs {
                    out = r.apply(&out);
                }
                out
            },
            a,
            d,
            j,
            n,
            ancilla_dim,
            true,
        );
        let (lo, hi) = psi.split_at_mut(half);
        lo.swap_with_slice(hi);
    }
    let sys = target.len();
    let mut collapsed = vec![ZERO; half];
    collapsed.copy_from_slice(&psi[half..]);
    let leaked: f64 = psi[..half].iter().map(|x| x.norm_sqr()).sum();
    let mut report = report_from(&collapsed, &target, nq + 1, 0.0);
    report.ancilla_residual += leaked;
    debug_assert_eq!(collapsed.len(), ancilla_dim * sys);
    Ok((collapsed, report))
}

/// Convenience check used by tests: full-space residual of the complete reflection set.
pub fn full_space_residual(g: &GjUnitary) -> f64 {
    let dim = g.dim();
    max_abs_diff(&reflection_product(&householder_full(g), 2 * dim), &doubled_operator(g))
}
