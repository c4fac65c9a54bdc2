//! Empirical digit-tail constant: along a long typical orbit the frequency of
//! `|a_n| > t` decays like `H / t^2`, and `C_d = sqrt(H)` is the Frechet
//! scale constant for the maximal digit.

use super::{sample_beta_exact, sample_uniform_cell, worker_rng, RngDomain};
use crate::cfrac::GaussOrbit;
use crate::ring::{nearest_lattice_point, Discriminant};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

/// Options for [`estimate_tail_constant`].
#[derive(Clone, Debug)]
pub struct TailOptions {
    /// Total number of digits to accumulate across chunks.
    pub orbit_len: u64,
    /// Digits per independent orbit chunk.
    pub chunk_digits: u64,
    /// Coordinate bits of each chunk's starting point.
    pub chunk_bits: u64,
    /// Thresholds `t` (integers) spanning at least `[10, 100]`.
    pub thresholds: Vec<u64>,
}

impl TailOptions {
    pub fn with_len(orbit_len: u64) -> Self {
        TailOptions {
            orbit_len,
            ..TailOptions::default()
        }
    }
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            orbit_len: 1_000_000,
            chunk_digits: 100_000,
            chunk_bits: 1_000_000,
            thresholds: vec![10, 14, 19, 26, 36, 50, 70, 100],
        }
    }
}

/// Empirical tail frequencies and the plateau estimate of `H`.
#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub d: i64,
    pub seed: u64,
    pub orbit_len: u64,
    pub digits_used: u64,
    pub thresholds: Vec<u64>,
    /// `(1/L) #{n <= L : |a_n| > t}` per threshold.
    pub tail_freq: Vec<f64>,
    /// `t^2 * tail_freq(t)` per threshold; flat when the tail law holds.
    pub h_values: Vec<f64>,
    pub h_hat: f64,
    pub h_stderr: f64,
    /// `(max - min) / mean` of `h_values`.
    pub plateau_spread: f64,
    /// Set when the plateau is wider than 25%.
    pub warning: Option<String>,
}

impl TailEstimate {
    /// The Frechet scale constant estimate `C_d = sqrt(H)` derived from the
    /// digit-tail constant.
    pub fn frechet_scale(&self) -> f64 {
        self.h_hat.sqrt()
    }
}

/// Estimate the tail constant by Birkhoff counting along exact orbit chunks.
///
/// The orbit is split into independent chunks (fresh random starting point
/// each); every digit contributes one Bernoulli observation per threshold.
/// Aggregation is an order-fixed integer sum, so the result is independent of
/// the worker count.
pub fn estimate_tail_constant(d: Discriminant, opts: &TailOptions, seed: u64) -> TailEstimate {
    assert!(!opts.thresholds.is_empty());
    let mut thresholds = opts.thresholds.clone();
    thresholds.sort_unstable();
    let tt: Vec<u128> = thresholds.iter().map(|&t| (t as u128) * (t as u128)).collect();
    let n_chunks = opts.orbit_len.div_ceil(opts.chunk_digits);
    let per_chunk: Vec<(Vec<u64>, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = worker_rng(seed, RngDomain::Tail, chunk);
            let budget = opts
                .chunk_digits
                .min(opts.orbit_len - chunk * opts.chunk_digits);
            let mut counts = vec![0u64; tt.len()];
            let mut digits = 0u64;
            while digits < budget {
                let beta = sample_beta_exact(d, opts.chunk_bits, &mut rng);
                let mut orbit = GaussOrbit::new(&beta);
                while digits < budget {
                    let a = match orbit.next() {
                        Some(a) => a,
                        None => break,
                    };
                    digits += 1;
                    let norm = a.norm().to_u128().unwrap_or(u128::MAX);
                    for (i, &t2) in tt.iter().enumerate() {
                        if norm > t2 {
                            counts[i] += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            (counts, digits)
        })
        .collect();

    let mut counts = vec![0u64; tt.len()];
    let mut digits_used = 0u64;
    for (c, n) in &per_chunk {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
        digits_used += n;
    }
    let tail_freq: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / digits_used as f64)
        .collect();
    let h_values: Vec<f64> = thresholds
        .iter()
        .zip(&tail_freq)
        .map(|(&t, &f)| (t * t) as f64 * f)
        .collect();
    let k = h_values.len() as f64;
    let h_hat = h_values.iter().sum::<f64>() / k;
    let var = h_values.iter().map(|h| (h - h_hat).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let h_stderr = (var / k).sqrt();
    let lo = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = h_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let plateau_spread = (hi - lo) / h_hat;
    let warning = (plateau_spread > 0.25)
        .then(|| format!("tail plateau relative spread {plateau_spread:.3} exceeds 0.25"));
    TailEstimate {
        d: d.d(),
        seed,
        orbit_len: opts.orbit_len,
        digits_used,
        thresholds,
        tail_freq,
        h_values,
        h_hat,
        h_stderr,
        plateau_spread,
        warning,
    }
}

/// Lebesgue-uniform single-digit tail: sample `z` uniformly on `K_d`, take
/// only the first digit, and report `t^2 * freq(|a_1| > t)`. For `d = 1` the
/// set `{|a_1| > t}` is a near-disk of radius `1/t` and the scaled frequency
/// converges to `pi`.
#[derive(Clone, Debug, Serialize)]
pub struct LebesgueTail {
    pub d: i64,
    pub samples: u64,
    pub thresholds: Vec<u64>,
    pub scaled_freq: Vec<f64>,
}

pub fn lebesgue_single_digit_tail(
    d: Discriminant,
    samples: u64,
    thresholds: &[u64],
    seed: u64,
) -> LebesgueTail {
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_unstable();
    let tt: Vec<u128> = thresholds.iter().map(|&t| (t as u128) * (t as u128)).collect();
    let batch = 100_000u64;
    let n_batches = samples.div_ceil(batch);
    let per_batch: Vec<Vec<u64>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = worker_rng(seed, RngDomain::LebesgueTail, b);
            let mut counts = vec![0u64; tt.len()];
            let todo = batch.min(samples - b * batch);
            for _ in 0..todo {
                let z = sample_uniform_cell(d, &mut rng);
                let w = z.inv();
                let a = nearest_lattice_point(w, d);
                let norm = a.norm().to_u128().unwrap_or(u128::MAX);
                for (i, &t2) in tt.iter().enumerate() {
                    if norm > t2 {
                        counts[i] += 1;
                    } else {
                        break;
                    }
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; tt.len()];
    for c in &per_batch {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
    }
    let scaled_freq = thresholds
        .iter()
        .zip(&counts)
        .map(|(&t, &c)| (t * t) as f64 * c as f64 / samples as f64)
        .collect();
    LebesgueTail {
        d: d.d(),
        samples,
        thresholds,
        scaled_freq,
    }
}
