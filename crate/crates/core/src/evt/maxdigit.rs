//! The maximal-digit experiment and its Frechet / Poisson fits.

use super::stats::{fit_scale, frechet_sq_cdf, frechet_sq_median, ks_statistic, poisson_k_cdf};
use super::{bits_for_digits, sample_beta_exact, worker_rng, RngDomain};
use crate::cfrac::GaussOrbit;
use crate::ring::{big_to_f64, Discriminant};
use rayon::prelude::*;
use serde::Serialize;

/// Maxima (and k-th maxima) of `|a_n|` over the first `N` digits of `M`
/// independent exact points.
#[derive(Clone, Debug)]
pub struct MaxDigitSample {
    pub d: Discriminant,
    pub n_digits: usize,
    pub m_samples: usize,
    /// Which order statistic `k_maxima` holds (k = 1 is the maximum itself).
    pub k: usize,
    pub seed: u64,
    pub bits: u64,
    pub maxima: Vec<f64>,
    pub k_maxima: Vec<f64>,
    /// Points whose expansion terminated before `N` digits and were redrawn.
    pub resampled: u64,
}

/// Track the top `k` values seen so far (k is tiny).
#[derive(Clone, Debug)]
struct TopK {
    k: usize,
    vals: Vec<f64>, // descending
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, vals: Vec::with_capacity(k + 1) }
    }

    fn push(&mut self, x: f64) {
        let pos = self.vals.partition_point(|&v| v >= x);
        self.vals.insert(pos, x);
        self.vals.truncate(self.k);
    }

    fn max(&self) -> f64 {
        self.vals.first().copied().unwrap_or(0.0)
    }

    fn kth(&self) -> f64 {
        self.vals.get(self.k - 1).copied().unwrap_or(0.0)
    }
}

/// Run the maximal-digit experiment at several digit checkpoints in one pass.
/// Checkpoints must be increasing; one sample set is returned per checkpoint,
/// all driven by the same per-sample rng streams.
pub fn max_digit_experiment_multi(
    d: Discriminant,
    checkpoints: &[usize],
    m_samples: usize,
    k: usize,
    seed: u64,
    bits: Option<u64>,
) -> Vec<MaxDigitSample> {
    assert!(!checkpoints.is_empty() && k >= 1);
    assert!(checkpoints.windows(2).all(|w| w[0] < w[1]));
    let n_total = *checkpoints.last().unwrap();
    let bits = bits.unwrap_or_else(|| bits_for_digits(d, n_total));
    let rows: Vec<(Vec<(f64, f64)>, u64)> = (0..m_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = worker_rng(seed, RngDomain::MaxDigit, i);
            let mut resampled = 0u64;
            'sample: loop {
                let beta = sample_beta_exact(d, bits, &mut rng);
                let mut orbit = GaussOrbit::new(&beta);
                let mut top = TopK::new(k);
                let mut out = Vec::with_capacity(checkpoints.len());
                let mut next_cp = 0usize;
                for n in 1..=n_total {
                    match orbit.next() {
                        Some(a) => {
                            top.push(big_to_f64(&a.norm()).sqrt());
                            if n == checkpoints[next_cp] {
                                out.push((top.max(), top.kth()));
                                next_cp += 1;
                            }
                        }
                        None => {
                            resampled += 1;
                            continue 'sample;
                        }
                    }
                }
                return (out, resampled);
            }
        })
        .collect();
    let resampled: u64 = rows.iter().map(|r| r.1).sum();
    checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| MaxDigitSample {
            d,
            n_digits: n,
            m_samples,
            k,
            seed,
            bits,
            maxima: rows.iter().map(|r| r.0[ci].0).collect(),
            k_maxima: rows.iter().map(|r| r.0[ci].1).collect(),
            resampled,
        })
        .collect()
}

/// Maxima of `|a_n|` over `n <= N` for `M` independent points.
pub fn max_digit_experiment(
    d: Discriminant,
    n_digits: usize,
    m_samples: usize,
    k: usize,
    seed: u64,
    bits: Option<u64>,
) -> MaxDigitSample {
    max_digit_experiment_multi(d, &[n_digits], m_samples, k, seed, bits)
        .pop()
        .expect("one checkpoint")
}

/// Goodness-of-fit summary against one of the reference limit laws.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    /// `frechet_sq`, `frechet_real` or `poisson_k<k>`.
    pub reference_cdf: String,
    /// The scale used: the given constant, or the KS-minimizing one.
    pub fitted_scale: f64,
    pub ks_distance: f64,
    pub sample_size: usize,
}

/// KS fit of `maxima / (C sqrt(N))` against `exp(-1/y^2)`. When `c` is given
/// (typically `sqrt(H)` from the tail estimator) the distance is evaluated at
/// that scale; otherwise the scale minimizing the distance is fitted.
pub fn frechet_fit(sample: &MaxDigitSample, c: Option<f64>) -> FitReport {
    let sqrt_n = (sample.n_digits as f64).sqrt();
    let xs: Vec<f64> = sample.maxima.iter().map(|&x| x / sqrt_n).collect();
    let (scale, ks) = match c {
        Some(c) => (c, ks_statistic(&xs, |y| frechet_sq_cdf(y / c))),
        None => fit_scale(&xs, frechet_sq_cdf, frechet_sq_median()),
    };
    FitReport {
        reference_cdf: "frechet_sq".into(),
        fitted_scale: scale,
        ks_distance: ks,
        sample_size: xs.len(),
    }
}

/// KS fit of the k-th maxima against the Poisson-corrected law
/// `exp(-1/y^2) sum_{j<k} y^{-2j}/j!`.
pub fn poisson_k_fit(sample: &MaxDigitSample, c: Option<f64>) -> FitReport {
    let k = sample.k;
    let sqrt_n = (sample.n_digits as f64).sqrt();
    let xs: Vec<f64> = sample.k_maxima.iter().map(|&x| x / sqrt_n).collect();
    // median of the k-th law found numerically once per call
    let median = {
        let (mut lo, mut hi) = (1e-3, 1e3);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if poisson_k_cdf(mid, k) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (scale, ks) = match c {
        Some(c) => (c, ks_statistic(&xs, |y| poisson_k_cdf(y / c, k))),
        None => fit_scale(&xs, |y| poisson_k_cdf(y, k), median),
    };
    FitReport {
        reference_cdf: format!("poisson_k{k}"),
        fitted_scale: scale,
        ks_distance: ks,
        sample_size: xs.len(),
    }
}
