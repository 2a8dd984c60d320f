use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Probability of the integer outcome `x` for a level at `E`, written in terms of
/// `y = 2ᵏE − x`: `sin²(πy) / (2^{2k} sin²(πy/2ᵏ))`. Exactly 1 when `y/2ᵏ` is an integer.
pub fn qpe_kernel(k: u32, y: f64) -> f64 {
    let n = (1u64 << k) as f64;
    let den = (PI * y / n).sin();
    if den == 0.0 || (y / n).fract() == 0.0 {
        return 1.0;
    }
    let num = (PI * y).sin();
    (num * num) / (n * n * den * den)
}

/// Broadening kernel `f` with unit integral (one period for `QpeSinc`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BroadKernel {
    Gaussian { eta: f64 },
    Lorentzian { eta: f64 },
    QpeSinc { k: u32 },
}

impl BroadKernel {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BroadKernel::Gaussian { eta } => (-0.5 * (x / eta).powi(2)).exp() / ((2.0 * PI).sqrt() * eta),
            BroadKernel::Lorentzian { eta } => eta / (PI * (x * x + eta * eta)),
            BroadKernel::QpeSinc { k } => {
                let n = (1u64 << k) as f64;
                n * qpe_kernel(k, n * x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_sums_to_one_over_outcomes() {
        for &e in &[0.0, 0.123, 0.5, 0.999, 0.25] {
            let s: f64 = (0..64).map(|x| qpe_kernel(6, 64.0 * e - x as f64)).sum();
            assert!((s - 1.0).abs() < 1e-12, "E={e}: {s}");
        }
    }

    #[test]
    fn on_grid_level_is_a_spike() {
        assert_eq!(qpe_kernel(4, 0.0), 1.0);
        assert_eq!(qpe_kernel(4, 16.0), 1.0);
        assert!(qpe_kernel(4, 1.0) < 1e-30);
    }
}
