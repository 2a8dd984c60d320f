//! Closed-form Toffoli and qubit counts for the SOS and MPS encoders and the
//! iterative prior-art SOS preparation.
//!
//! `n` always counts spatial orbitals, so the system register holds `2n` qubits.
//! Every non-integer subexpression is ceiled on its own before summation.

use serde::{Deserialize, Serialize};


#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostMethod {
    SosBasic,
    SosTradeoff,
    SosPrior,
    MpsSelect,
    MpsSelSwapDirty,
}

impl CostMethod {
    pub fn label(self) -> &'static str {
        match self {
            CostMethod::SosBasic => "sos_basic",
            CostMethod::SosTradeoff => "sos_tradeoff",
            CostMethod::SosPrior => "sos_prior",
            CostMethod::MpsSelect => "mps_select",
            CostMethod::MpsSelSwapDirty => "mps_selswap_dirty",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub method: CostMethod,
    pub toffoli: u128,
    /// Ancilla qubits that must start in |0⟩ (system register not included).
    pub clean_qubits: u128,
    pub dirty_qubits: u128,
    /// Qubits holding the prepared state.
    pub system_qubits: u128,
}

/// `⌈log₂ x⌉`, zero for `x ≤ 1`.
pub fn ceil_log2_wide(x: u128) -> u128 {
    if x <= 1 {
        0
    } else {
        (u128::BITS - (x - 1).leading_zeros()) as u128
    }
}

fn ceil_f(x: f64) -> u128 {
    let c = x.ceil();
    debug_assert!(c >= 0.0 && c.is_finite());
    c as u128
}

/// Six-step SOS encoder: `(2⌈log₂D⌉+3)·D` Toffolis, `5⌈log₂D⌉−3` ancillae.
pub fn sos_cost_basic(n: u128, d: u128) -> ResourceReport {
    let system_qubits = 2 * n;
    if d <= 1 {
        return ResourceReport { method: CostMethod::SosBasic, toffoli: 0, clean_qubits: 0, dirty_qubits: 0, system_qubits };
    }
    let l = ceil_log2_wide(d);
    ResourceReport {
        method: CostMethod::SosBasic,
        toffoli: (2 * l + 3) * d,
        clean_qubits: 5 * l - 3,
        dirty_qubits: 0,
        system_qubits,
    }
}

/// SOS encoder with select-swap QROM using dirty qubits.
pub fn sos_cost_tradeoff(n: u128, d: u128) -> ResourceReport {
    let system_qubits = 2 * n;
    if d <= 1 {
        return ResourceReport { method: CostMethod::SosTradeoff, toffoli: 0, clean_qubits: 0, dirty_qubits: 0, system_qubits };
    }
    let l = ceil_log2_wide(d);
    let sqrt_d = (d as f64).sqrt();
    let swap_term = ceil_f(2.0 * (32.0 * (n * d) as f64).sqrt());
    let (first, dirty) = if swap_term < d {
        (swap_term, ceil_f((32.0 * (n * d) as f64).sqrt()))
    } else {
        (d, 0)
    };
    let second = ceil_f(7.0 * l as f64 * sqrt_d) + ceil_f(2.0 * (32.0 * l as f64).sqrt() * sqrt_d);
    ResourceReport {
        method: CostMethod::SosTradeoff,
        toffoli: first + second,
        clean_qubits: ceil_f((2 * l - 1) as f64 * sqrt_d),
        dirty_qubits: dirty,
        system_qubits,
    }
}

/// Iterative determinant-by-determinant preparation: `(2n−1)(D−1)` Toffolis, `2n−1` ancillae.
pub fn sos_cost_prior(n: u128, d: u128) -> ResourceReport {
    let system_qubits = 2 * n;
    if d <= 1 || n == 0 {
        return ResourceReport { method: CostMethod::SosPrior, toffoli: 0, clean_qubits: 0, dirty_qubits: 0, system_qubits };
    }
    ResourceReport {
        method: CostMethod::SosPrior,
        toffoli: (2 * n - 1) * (d - 1),
        clean_qubits: 2 * n - 1,
        dirty_qubits: 0,
        system_qubits,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MpsVariant {
    Select,
    /// Select-swap with dirty qubits; `None` picks `⌈√(χ_j d)⌉` per site.
    SelSwapDirty { lambda: Option<u128> },
}

/// Sequential MPS preparation cost summed over sites.
///
/// `chis` lists the interior bond dimensions `χ_1 … χ_{N−1}`; the boundary bonds are 1.
/// `b` is the number of bits per rotation angle.
pub fn mps_cost(chis: &[u128], d: u128, b: u128, variant: MpsVariant) -> ResourceReport {
    let n_sites = chis.len() + 1;
    let bond = |j: usize| -> u128 {
        if j == 0 || j == n_sites {
            1
        } else {
            chis[j - 1]
        }
    };
    let mut toffoli = 0u128;
    let mut clean = 0u128;
    let mut dirty = 0u128;
    let mut chi_max = 1u128;
    for j in 1..=n_sites {
        let chi_left = bond(j - 1);
        let chi_right = bond(j);
        chi_max = chi_max.max(chi_right);
        let log_term = ceil_log2_wide(chi_right * d);
        let per = match variant {
            MpsVariant::Select => 8 * chi_right * d + (b + 1) * log_term,
            MpsVariant::SelSwapDirty { lambda } => {
                let lambda = lambda.unwrap_or_else(|| ceil_f(((chi_right * d) as f64).sqrt())).max(1);
                dirty = dirty.max(lambda * b);
                (8 * chi_right * d).div_ceil(lambda) + 8 * lambda * b * log_term + b * log_term + log_term
            }
        };
        toffoli += chi_left * per;
        clean = clean.max(b + log_term);
    }
    ResourceReport {
        method: match variant {
            MpsVariant::Select => CostMethod::MpsSelect,
            MpsVariant::SelSwapDirty { .. } => CostMethod::MpsSelSwapDirty,
        },
        toffoli,
        clean_qubits: clean + ceil_log2_wide(chi_max),
        dirty_qubits: dirty,
        system_qubits: n_sites as u128 * ceil_log2_wide(d),
    }
}

/// One row of a cost sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: u128,
    pub report: ResourceReport,
}

/// Costs of the three SOS methods at each `D` in `ds`.
pub fn sos_cost_sweep(n: u128, ds: &[u128]) -> Vec<SweepRow> {
    ds.iter()
        .flat_map(|&d| {
            [sos_cost_basic(n, d), sos_cost_tradeoff(n, d), sos_cost_prior(n, d)]
                .into_iter()
                .map(move |report| SweepRow { param: d, report })
        })
        .collect()
}

/// Costs of both MPS variants for uniform bond dimension `chi` at each value in `chis`.
pub fn mps_cost_sweep(n_sites: usize, d: u128, b: u128, chis: &[u128]) -> Vec<SweepRow> {
    chis.iter()
        .flat_map(|&chi| {
            let bonds = vec![chi; n_sites.saturating_sub(1)];
            [MpsVariant::Select, MpsVariant::SelSwapDirty { lambda: None }]
                .into_iter()
                .map(move |v| SweepRow { param: chi, report: mps_cost(&bonds, d, b, v) })
        })
        .collect()
}

/// Powers of two from `lo` to `hi` inclusive (both rounded to powers of two).
pub fn power_of_two_range(lo: u128, hi: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut v = lo.max(1).next_power_of_two();
    while v <= hi {
        out.push(v);
        v = match v.checked_mul(2) {
            Some(x) => x,
            None => break,
        };
    }
    out
}

pub const CSV_HEADER: &str = "param,method,toffoli,clean_qubits,dirty_qubits";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.param,
            r.report.method.label(),
            r.report.toffoli,
            r.report.clean_qubits,
            r.report.dirty_qubits
        ));
    }
    out
}

/// Smallest power-of-two `D` at which the basic encoder stops beating prior art.
pub fn basic_prior_crossover(n: u128) -> Option<u128> {
    power_of_two_range(2, 1 << 120)
        .into_iter()
        .find(|&d| sos_cost_basic(n, d).toffoli >= sos_cost_prior(n, d).toffoli)
}
