//! Intersection times, excursion times and apex heights of the model
//! geodesics with endpoints `(beta, infinity)`.
//!
//! The `n`-th relift of the model geodesic has endpoints
//! `((-1)^n G^n(beta), (-1)^{n+1} q_n/q_{n-1})`; it meets the unit hemisphere
//! at a point whose pullback along `P(n, beta)` sits on the vertical line over
//! `beta` at height `e^{-t_n}`. The closed form for `t_n` used here pulls the
//! large factor `|q_{n-1}|^2` out of the logarithm, so everything except the
//! exact integer log-norms stays at unit scale and no intermediate quantity
//! can overflow no matter how far the expansion runs.

use crate::cfrac::{CfracError, Expansion, GaussOrbit};
use crate::ring::{big_ln, big_ratio_f64, ratio_to_c64, Discriminant, FieldElement, RingElement};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::One;

/// Per-index data of one excursion trace.
#[derive(Clone, Copy, Debug)]
pub struct ExcursionRecord {
    /// Digit index, 1-based.
    pub n: usize,
    /// Intersection time of the n-th relift with the unit hemisphere.
    pub t_n: f64,
    /// Running maximum of the intersection times.
    pub t_star: f64,
    /// Half the Euclidean distance between the endpoints of the n-th relift,
    /// `|G^n(beta) + q_n/q_{n-1}| / 2`.
    pub apex_height: f64,
    /// `ln norm(q_n) = 2 ln |q_n|`, from the exact integer norm.
    pub log_norm_q: f64,
    /// `|q_{n-1}/q_n| < 1`.
    pub ratio: f64,
    /// `ln |q_n/q_{n-1}| > 0` computed stably from the integer norms.
    pub lambda: f64,
    /// `ln |G^n(beta)|`, or `-inf` at exact termination.
    pub log_abs_tail: f64,
}

impl ExcursionRecord {
    /// The bounded deviation of the intersection time from its denominator
    /// estimate: `|t_n - ln norm(q_n) - (3/2) ln(1 - |q_{n-1}/q_n|^2)|`.
    pub fn lemma51_defect(&self) -> f64 {
        let one_minus_rho2 = -(-2.0 * self.lambda).exp_m1();
        (self.t_n - self.log_norm_q - 1.5 * one_minus_rho2.ln()).abs()
    }
}

/// Incremental trace computation along an exact digit orbit. Only the rolling
/// pair of convergent denominators is kept, so arbitrarily long traces run in
/// constant memory (plus the digit orbit state itself).
pub struct TraceBuilder {
    orbit: GaussOrbit,
    q_prev: RingElement,
    q_cur: RingElement,
    norm_prev: BigInt,
    norm_cur: BigInt,
    t_star: f64,
    birkhoff_sum: f64,
    n: usize,
}

impl TraceBuilder {
    pub fn new(beta: &FieldElement) -> Self {
        let d = beta.disc();
        TraceBuilder {
            orbit: GaussOrbit::new(beta),
            q_prev: RingElement::zero(d), // q_{-1}
            q_cur: RingElement::one(d),   // q_0
            norm_prev: BigInt::one(),
            norm_cur: BigInt::one(),
            t_star: f64::NEG_INFINITY,
            birkhoff_sum: 0.0,
            n: 0,
        }
    }

    pub fn disc(&self) -> Discriminant {
        self.orbit.disc()
    }

    /// Digits consumed so far.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn terminated(&self) -> bool {
        self.orbit.terminated()
    }

    /// Sum of `ln |G^k(beta)|` over `1 <= k <= n`.
    pub fn birkhoff_sum(&self) -> f64 {
        self.birkhoff_sum
    }

    /// Advance by one digit; `None` once the expansion terminates.
    pub fn step(&mut self) -> Option<ExcursionRecord> {
        let a = self.orbit.next()?;
        self.n += 1;
        let q_new = &a * &self.q_cur + &self.q_prev;
        self.q_prev = std::mem::replace(&mut self.q_cur, q_new);
        let norm_new = self.q_cur.norm();
        self.norm_prev = std::mem::replace(&mut self.norm_cur, norm_new);
        // Eq.-level invariant: |q_{n-1}| < |q_n| strictly, checked on the
        // exact integers.
        let delta = &self.norm_cur - &self.norm_prev;
        assert!(
            delta > BigInt::from(0),
            "convergent norms failed to grow at n={}",
            self.n
        );
        let lambda = 0.5 * big_ratio_f64(&delta, &self.norm_prev).ln_1p();
        let log_norm_prev = big_ln(&self.norm_prev);
        let log_norm_q = big_ln(&self.norm_cur);
        let w = ratio_to_c64(&self.q_cur, &self.q_prev);
        let (tail_num, tail_den) = self.orbit.tail_pair();
        let (g, log_abs_tail) = if tail_num.is_zero() {
            (Complex64::new(0.0, 0.0), f64::NEG_INFINITY)
        } else {
            (
                self.orbit.tail_c64(),
                0.5 * (big_ln(&tail_num.norm()) - big_ln(&tail_den.norm())),
            )
        };
        if log_abs_tail.is_finite() {
            self.birkhoff_sum += log_abs_tail;
        }
        let t_n = intersection_time_from_parts(log_norm_prev, lambda, g, w);
        self.t_star = self.t_star.max(t_n);
        Some(ExcursionRecord {
            n: self.n,
            t_n,
            t_star: self.t_star,
            apex_height: 0.5 * (g + w).norm(),
            log_norm_q,
            ratio: (-lambda).exp(),
            lambda,
            log_abs_tail,
        })
    }
}

/// `t_n` from the scale-free pieces: `log_norm_prev = ln norm(q_{n-1})`,
/// `lambda = ln |q_n/q_{n-1}|`, `g = G^n(beta)`, `w = q_n/q_{n-1}`.
///
/// Writing `c = (1-|g|^2) / (|w|^2-|g|^2)` for the intersection parameter of
/// the endpoint half-circle, the pullback height is
/// `r' = 1 / (|q_{n-1}|^2 ((1-c)^2 |g+w|^2 / r_n + r_n))`, so
/// `t_n = -ln r' = ln norm(q_{n-1}) + ln X` with every factor of `X` at unit
/// scale. `|w|^2 - 1` is evaluated as `expm1(2 lambda)` to survive ratios
/// barely above 1.
pub fn intersection_time_from_parts(
    log_norm_prev: f64,
    lambda: f64,
    g: Complex64,
    w: Complex64,
) -> f64 {
    assert!(lambda > 0.0, "|q_n/q_{{n-1}}| <= 1 is impossible");
    let em2 = (2.0 * lambda).exp_m1(); // |w|^2 - 1
    let one_g2 = (1.0 - g.norm_sqr()).max(f64::MIN_POSITIVE);
    let denom = em2 + one_g2; // |w|^2 - |g|^2
    let gw = (g + w).norm();
    let r_n = (one_g2 * em2).sqrt() * gw / denom;
    let one_minus_c = em2 / denom;
    let x = one_minus_c * one_minus_c * gw * gw / r_n + r_n;
    log_norm_prev + x.ln()
}

/// Closed-form intersection time `t_n` from a stored exact expansion.
pub fn intersection_time(exp: &Expansion, n: usize) -> Result<f64, CfracError> {
    if n < 1 || n > exp.len() {
        return Err(CfracError::OutOfRange(n));
    }
    let it = exp.iterate(n)?;
    let norm_prev = exp.q(n - 1).norm();
    let norm_cur = exp.q(n).norm();
    let delta = &norm_cur - &norm_prev;
    assert!(delta > BigInt::from(0), "Eq.(5) violated");
    let lambda = 0.5 * big_ratio_f64(&delta, &norm_prev).ln_1p();
    let g = if it.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        it.embed()
    };
    let w = ratio_to_c64(exp.q(n), exp.q(n - 1));
    Ok(intersection_time_from_parts(big_ln(&norm_prev), lambda, g, w))
}

/// Apex height of the `n`-th relift: half the Euclidean distance between its
/// endpoints, `|G^n(beta) + q_n/q_{n-1}| / 2`. Within 1 of `|a_n|/2`.
pub fn apex_height(exp: &Expansion, n: usize) -> Result<f64, CfracError> {
    if n < 1 || n > exp.len() {
        return Err(CfracError::OutOfRange(n));
    }
    let it = exp.iterate(n)?;
    let g = if it.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        it.embed()
    };
    let w = ratio_to_c64(exp.q(n), exp.q(n - 1));
    Ok(0.5 * (g + w).norm())
}

/// A complete excursion trace of one geodesic.
#[derive(Clone, Debug)]
pub struct ExcursionTrace {
    d: Discriminant,
    records: Vec<ExcursionRecord>,
    terminated: bool,
    birkhoff_sum: f64,
}

impl ExcursionTrace {
    /// Trace the first `n_max` digits of `beta` (fewer when the expansion
    /// terminates).
    pub fn build(beta: &FieldElement, n_max: usize) -> Self {
        let mut b = TraceBuilder::new(beta);
        let mut records = Vec::new();
        while records.len() < n_max {
            match b.step() {
                Some(rec) => records.push(rec),
                None => break,
            }
        }
        ExcursionTrace {
            d: beta.disc(),
            records,
            terminated: b.terminated(),
            birkhoff_sum: b.birkhoff_sum(),
        }
    }

    pub fn disc(&self) -> Discriminant {
        self.d
    }

    pub fn records(&self) -> &[ExcursionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Indices `n` with `|q_n/q_{n-1}| >= r_d`. For every admissible
    /// threshold below `1/A_d` the gaps of this subsequence stay bounded.
    pub fn growth_subsequence(&self, r_d: f64) -> Vec<usize> {
        assert!(r_d >= 1.0, "threshold must be at least 1");
        let log_r = r_d.ln();
        self.records
            .iter()
            .filter(|rec| rec.lambda >= log_r)
            .map(|rec| rec.n)
            .collect()
    }

    /// Largest gap between consecutive entries of the growth subsequence
    /// (including the leading gap from index 0).
    pub fn growth_max_gap(&self, r_d: f64) -> Option<usize> {
        let idx = self.growth_subsequence(r_d);
        if idx.is_empty() {
            return None;
        }
        let mut max_gap = idx[0];
        for w in idx.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        Some(max_gap)
    }

    /// Largest Lemma-type defect over the first `n_max` records.
    pub fn max_defect(&self, n_max: usize) -> f64 {
        self.records
            .iter()
            .take(n_max)
            .map(|r| r.lemma51_defect())
            .fold(0.0, f64::max)
    }
}

/// Default growth threshold: the midpoint of `(1, 1/A_d)` where
/// `A_d = sup_{z in K_d} |z|`.
pub fn default_growth_threshold(d: Discriminant) -> f64 {
    0.5 * (1.0 + 1.0 / d.covering_radius())
}

/// Running maximum `t*_n = max_{i <= n} t_i`; idempotent.
pub fn excursion_times(t: &[f64]) -> Vec<f64> {
    let mut star = f64::NEG_INFINITY;
    t.iter()
        .map(|&x| {
            star = star.max(x);
            star
        })
        .collect()
}

/// Mean and standard error of a sample.
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The three estimators of the linear growth rate `C*` of the excursion
/// times, averaged across traces.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CstarEstimate {
    /// Mean of `t*_N / N` at the final index of each trace.
    pub c_star: f64,
    pub stderr: f64,
    /// Mean of `ln norm(q_N) / N = 2 ln |q_N| / N`.
    pub cross_estimator: f64,
    pub cross_stderr: f64,
    /// Mean of `-(2/N) sum_{k<=N} ln |G^k(beta)|`.
    pub birkhoff_estimator: f64,
    pub birkhoff_stderr: f64,
    /// True when the primary and cross estimators agree within three combined
    /// standard errors.
    pub agreement: bool,
}

/// Estimate `C*` from finished traces; traces shorter than two records are
/// ignored.
pub fn cstar_estimate(traces: &[ExcursionTrace]) -> CstarEstimate {
    let mut primary = Vec::new();
    let mut cross = Vec::new();
    let mut birkhoff = Vec::new();
    for tr in traces {
        if let Some(last) = tr.records().last() {
            if last.n < 2 {
                continue;
            }
            let n = last.n as f64;
            primary.push(last.t_star / n);
            cross.push(last.log_norm_q / n);
            birkhoff.push(-2.0 * tr.birkhoff_sum / n);
        }
    }
    let (c_star, stderr) = mean_stderr(&primary);
    let (cross_mean, cross_se) = mean_stderr(&cross);
    let (bk, bk_se) = mean_stderr(&birkhoff);
    let combined = (stderr * stderr + cross_se * cross_se).sqrt();
    CstarEstimate {
        c_star,
        stderr,
        cross_estimator: cross_mean,
        cross_stderr: cross_se,
        birkhoff_estimator: bk,
        birkhoff_stderr: bk_se,
        agreement: (c_star - cross_mean).abs() <= 3.0 * combined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::ExpandOptions;
    use crate::evt::sample_beta_exact;
    use rand::SeedableRng;

    #[test]
    fn running_max_examples() {
        assert_eq!(excursion_times(&[3.0, 1.0, 4.0]), vec![3.0, 3.0, 4.0]);
        // monotone input is a fixed point, as is any single element
        assert_eq!(excursion_times(&[1.0, 2.0, 5.0]), vec![1.0, 2.0, 5.0]);
        assert_eq!(excursion_times(&[7.5]), vec![7.5]);
        // idempotence
        let once = excursion_times(&[2.0, 9.0, 3.0, 11.0, 4.0]);
        assert_eq!(excursion_times(&once), once);
        // the trace builder fills the same running maximum
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let beta = sample_beta_exact(Discriminant::D7, 400, &mut rng);
        let tr = ExcursionTrace::build(&beta, 80);
        let raw: Vec<f64> = tr.records().iter().map(|r| r.t_n).collect();
        let stars: Vec<f64> = tr.records().iter().map(|r| r.t_star).collect();
        assert_eq!(excursion_times(&raw), stars);
    }

    #[test]
    fn trace_t_star_is_nondecreasing_and_positive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for d in Discriminant::ALL {
            let beta = sample_beta_exact(d, 512, &mut rng);
            let tr = ExcursionTrace::build(&beta, 120);
            assert!(tr.len() >= 100, "expansion too short");
            let mut prev = f64::NEG_INFINITY;
            for rec in tr.records() {
                assert!(rec.t_star >= prev);
                assert!(rec.t_n > 0.0, "t_n <= 0 at n={} d={d}", rec.n);
                assert!(rec.ratio < 1.0);
                prev = rec.t_star;
            }
        }
    }

    #[test]
    fn intersection_time_matches_trace_builder() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let d = Discriminant::D1;
        let beta = sample_beta_exact(d, 256, &mut rng);
        let exp = Expansion::expand(&beta, 40, ExpandOptions { store_iterates: true }).unwrap();
        let tr = ExcursionTrace::build(&beta, 40);
        for rec in tr.records() {
            let t = intersection_time(&exp, rec.n).unwrap();
            assert!((t - rec.t_n).abs() < 1e-9 * (1.0 + rec.t_n.abs()));
        }
    }

    #[test]
    fn apex_height_close_to_half_digit_norm() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for d in Discriminant::ALL {
            let beta = sample_beta_exact(d, 700, &mut rng);
            let exp = Expansion::expand(&beta, 200, ExpandOptions { store_iterates: true }).unwrap();
            for n in 1..=exp.len() {
                let h = apex_height(&exp, n).unwrap();
                let half = 0.5 * exp.digit(n).abs();
                assert!((h - half).abs() < 1.0, "apex bound broken at d={d} n={n}");
            }
        }
    }

    #[test]
    fn growth_subsequence_threshold_one_takes_everything() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        let d = Discriminant::D2;
        let beta = sample_beta_exact(d, 400, &mut rng);
        let tr = ExcursionTrace::build(&beta, 100);
        let all = tr.growth_subsequence(1.0);
        assert_eq!(all.len(), tr.len());
        // nesting under a larger threshold
        let some = tr.growth_subsequence(default_growth_threshold(d));
        assert!(some.len() <= all.len());
        assert!(some.iter().all(|n| all.contains(n)));
    }

    #[test]
    fn endpoint_identity_exact() {
        // repelling endpoint of the n-th relift is (-1)^{n+1} q_n / q_{n-1},
        // verified through the exact boundary action of P(n, beta)
        use crate::hyperbolic::{p_matrix, Boundary};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(35);
        for d in Discriminant::ALL {
            let beta = sample_beta_exact(d, 256, &mut rng);
            let exp = Expansion::expand(&beta, 30, ExpandOptions { store_iterates: true }).unwrap();
            for n in 1..=exp.len() {
                let pm = p_matrix(&exp, n);
                match pm.act_boundary(&Boundary::Infinity) {
                    Boundary::Finite(rep) => {
                        let sign = crate::cfrac::sign_element(d, n + 1);
                        let expected = FieldElement::new_unreduced(
                            &sign * exp.q(n),
                            exp.q(n - 1).clone(),
                        )
                        .unwrap();
                        assert_eq!(rep, expected, "repelling endpoint at d={d} n={n}");
                    }
                    Boundary::Infinity => panic!("repelling endpoint must be finite"),
                }
                // attracting endpoint: P(n, beta) . beta = (-1)^n G^n(beta)
                let att = pm.act_boundary(&Boundary::Finite(beta.clone()));
                let it = exp.iterate(n).unwrap();
                let sign = crate::cfrac::sign_element(d, n);
                let expected = FieldElement::new_unreduced(&sign * it.num(), it.den().clone()).unwrap();
                match att {
                    Boundary::Finite(a) => assert_eq!(a, expected, "attracting endpoint d={d} n={n}"),
                    Boundary::Infinity => {
                        assert!(it.is_zero(), "infinite attracting endpoint off termination")
                    }
                }
            }
        }
    }

    #[test]
    fn cstar_estimators_agree_on_moderate_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(36);
        let d = Discriminant::D1;
        let mut traces = Vec::new();
        for _ in 0..60 {
            let beta = sample_beta_exact(d, 2600, &mut rng);
            traces.push(ExcursionTrace::build(&beta, 600));
        }
        let est = cstar_estimate(&traces);
        assert!(est.c_star > 0.0);
        assert!(est.agreement, "estimators disagree: {est:?}");
        // the Birkhoff route lands near the cross estimator as well
        assert!(
            (est.birkhoff_estimator - est.cross_estimator).abs()
                <= 4.0 * (est.birkhoff_stderr + est.cross_stderr + est.stderr),
            "birkhoff route off: {est:?}"
        );
    }

    #[test]
    fn defect_suprema_are_stable_in_n() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let d = Discriminant::D3;
        let mut sup_short = 0.0f64;
        let mut sup_long = 0.0f64;
        for _ in 0..12 {
            let beta = sample_beta_exact(d, 2200, &mut rng);
            let tr = ExcursionTrace::build(&beta, 500);
            sup_short = sup_short.max(tr.max_defect(250));
            sup_long = sup_long.max(tr.max_defect(500));
        }
        assert!(sup_long.is_finite() && sup_short > 0.0);
        // doubling the range may only grow the supremum mildly
        assert!(sup_long <= sup_short * 1.35 + 0.2, "defect not stable: {sup_short} -> {sup_long}");
    }
}
