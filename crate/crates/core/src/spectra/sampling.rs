//! Coarse-QPE sampling with random phase offsets, and Gaussian kernel density estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{qpe_kernel, SpectraError, SpectralMeasure};

/// Largest digit count accepted by the sampler (the outcome table has `2ᵏ` entries).
pub const MAX_SAMPLING_DIGITS: u32 = 20;
/// KDE contributions beyond this many bandwidths are dropped (`e^{-32}` relative).
pub const KDE_CUTOFF: f64 = 8.0;

fn draw_index(cumulative: &[f64], u: f64) -> usize {
    let total = cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u * total).min(cumulative.len() - 1)
}

/// One energy estimate per shot: `2⁻ᵏx − c` with `c ~ U[0, 2⁻ᵏ)`, level drawn by weight and
/// `x` from the QPE kernel at phase `E_n + c`. Shot `i` uses ChaCha8 stream `i` of `seed`,
/// so the output does not depend on thread scheduling.
pub fn coarse_qpe_sample(m: &SpectralMeasure, k: u32, shots: usize, seed: u64) -> Result<Vec<f64>, SpectraError> {
    if k == 0 || k > MAX_SAMPLING_DIGITS {
        return Err(SpectraError::InvalidParameter(format!("digit count {k} outside 1..={MAX_SAMPLING_DIGITS}")));
    }
    let n = 1usize << k;
    let scale = n as f64;
    let mut acc = 0.0;
    let level_cdf: Vec<f64> = m
        .levels()
        .iter()
        .map(|l| {
            acc += l.weight;
            acc
        })
        .collect();
    Ok((0..shots)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |table, shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(shot as u64);
                let c = rng.gen::<f64>() / scale;
                let level = &m.levels()[draw_index(&level_cdf, rng.gen::<f64>())];
                let y0 = scale * (level.energy + c);
                let mut s = 0.0;
                for (x, slot) in table.iter_mut().enumerate() {
                    s += qpe_kernel(k, y0 - x as f64);
                    *slot = s;
                }
                let x = draw_index(table, rng.gen::<f64>());
                x as f64 / scale - c
            },
        )
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "h", rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// `M^{−1/5} · σ̂` with the sample standard deviation.
    Scott,
}

impl Bandwidth {
    pub fn resolve(&self, samples: &[f64]) -> f64 {
        match *self {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Scott => {
                let m = samples.len() as f64;
                if samples.len() < 2 {
                    return 0.0;
                }
                let mean = samples.iter().sum::<f64>() / m;
                let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
                m.powf(-0.2) * var.sqrt()
            }
        }
    }
}

/// Gaussian KDE evaluated at `points`.
pub fn kde(samples: &[f64], bandwidth: Bandwidth, points: &[f64]) -> Result<Vec<f64>, SpectraError> {
    if samples.is_empty() {
        return Err(SpectraError::InvalidParameter("no samples".into()));
    }
    let h = bandwidth.resolve(samples);
    if !(h > 0.0 && h.is_finite()) {
        return Err(SpectraError::InvalidParameter(format!("bandwidth {h} must be positive")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
    Ok(points
        .par_iter()
        .map(|&e| {
            let lo = sorted.partition_point(|&s| s < e - KDE_CUTOFF * h);
            let hi = sorted.partition_point(|&s| s <= e + KDE_CUTOFF * h);
            sorted[lo..hi].iter().map(|s| (-0.5 * ((e - s) / h).powi(2)).exp()).sum::<f64>() * norm
        })
        .collect())
}
