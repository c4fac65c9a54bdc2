//! Kolmogorov-Smirnov distances, the reference limit CDFs, and a scalar
//! minimizer for scale fitting.

/// The squared-modulus Frechet law `y -> exp(-1/y^2)`.
pub fn frechet_sq_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / (y * y)).exp()
    }
}

/// The classical real-line Frechet law `y -> exp(-1/y)`.
pub fn frechet_real_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

/// The k-th maximum reference law
/// `y -> exp(-tau) sum_{j<k} tau^j / j!` with `tau = 1/y^2`.
pub fn poisson_k_cdf(y: f64, k: usize) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let tau = 1.0 / (y * y);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= tau / j as f64;
        sum += term;
    }
    (-tau).exp() * sum
}

/// One-sample Kolmogorov-Smirnov distance between the empirical CDF of `xs`
/// (right-continuous step function) and `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!xs.is_empty(), "empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs());
        sup = sup.max((f - i as f64 / n).abs());
    }
    sup
}

/// Two-sample Kolmogorov-Smirnov distance between the empirical CDFs.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty(), "empty sample");
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("NaN"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("NaN"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Golden-section minimization of a unimodal-ish scalar function on
/// `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - PHI * (b - a);
    let mut d = a + PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Scale that minimizes the KS distance of `xs / scale` to `cdf`, found by a
/// golden-section search around a median-matching initial guess.
pub fn fit_scale(xs: &[f64], cdf: impl Fn(f64) -> f64 + Copy, median_of_cdf: f64) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN"));
    let median = sorted[sorted.len() / 2].max(f64::MIN_POSITIVE);
    let c0 = median / median_of_cdf;
    // The empirical CDF of xs/c at y equals the empirical CDF of xs at y*c,
    // so the statistic is evaluated on the sorted raw sample directly.
    let obj = |c: f64| {
        let n = sorted.len() as f64;
        let mut sup = 0.0f64;
        for (i, &x) in sorted.iter().enumerate() {
            let f = cdf(x / c);
            sup = sup.max(((i + 1) as f64 / n - f).abs());
            sup = sup.max((f - i as f64 / n).abs());
        }
        sup
    };
    golden_min(obj, c0 / 4.0, c0 * 4.0, 120)
}

/// Median of the squared-modulus Frechet law: `1/sqrt(ln 2)`.
pub fn frechet_sq_median() -> f64 {
    1.0 / std::f64::consts::LN_2.sqrt()
}

/// Median of the real Frechet law: `1/ln 2`.
pub fn frechet_real_median() -> f64 {
    1.0 / std::f64::consts::LN_2
}
