//! Shared test oracles, independent of the implementation paths they check.
#![allow(dead_code)] // each test target uses its own subset

use bianchi_cf::cfrac::Expansion;
use bianchi_cf::hyperbolic::{p_matrix, vertical_orbit_position};
use bianchi_cf::ring::FieldElement;

/// Intersection time of the `n`-th relift with the unit hemisphere, found by
/// bisecting the sphere condition along the flowed and mapped base geodesic:
/// the point `P(n, beta) . (beta + e^{-t} j)` crosses `|z|^2 + r^2 = 1`
/// exactly once, from outside to inside.
pub fn bisect_intersection_time(exp: &Expansion, beta: &FieldElement, n: usize) -> f64 {
    let pm = p_matrix(exp, n);
    let sphere_gap = |t: f64| -> f64 {
        let p = vertical_orbit_position(&pm, beta, (-t).exp());
        p.sq_radius() - 1.0
    };
    // bracket: outside somewhere before the crossing, inside far past it
    let mut lo = 0.0f64;
    let mut guard = 0;
    while sphere_gap(lo) <= 0.0 {
        lo -= 4.0;
        guard += 1;
        assert!(guard < 100, "cannot bracket from outside");
    }
    let log_norm_q = bianchi_cf::cfrac::log_abs(exp.q(n));
    let mut hi = 2.0 * log_norm_q + 16.0;
    guard = 0;
    while sphere_gap(hi) >= 0.0 {
        hi += 16.0;
        guard += 1;
        assert!(guard < 100, "cannot bracket from inside");
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sphere_gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numerical apex oracle: maximize the height of `geodesic_position` along a
/// circular lift by golden-section search on the time parameter.
pub fn apex_by_flow_maximization(
    lift: bianchi_cf::hyperbolic::GeodesicLift,
    basepoint: bianchi_cf::hyperbolic::H3Point,
) -> f64 {
    let height = |t: f64| {
        bianchi_cf::hyperbolic::geodesic_position(lift, basepoint, t)
            .map(|p| p.r)
            .unwrap_or(0.0)
    };
    let (mut a, mut b) = (-60.0f64, 60.0f64);
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - PHI * (b - a);
    let mut d = a + PHI * (b - a);
    let (mut fc, mut fd) = (height(c), height(d));
    for _ in 0..300 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - PHI * (b - a);
            fc = height(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + PHI * (b - a);
            fd = height(d);
        }
    }
    height(0.5 * (a + b))
}
