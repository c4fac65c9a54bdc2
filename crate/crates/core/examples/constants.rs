//! Print the empirical constants of the five rings: growth rate of the
//! convergent denominators, excursion rate C*, digit-tail constant H, and the
//! derived Frechet scale C_d = sqrt(H).
//!
//!     cargo run --release -p bianchi-cf --example constants

use bianchi_cf::evt::{self, TailOptions};
use bianchi_cf::excursion::cstar_estimate;
use bianchi_cf::ring::Discriminant;

fn main() {
    println!(
        "{:>3}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
        "d", "Lambda", "C*", "H", "C_d", "alpha_d"
    );
    for d in Discriminant::ALL {
        let traces = evt::collect_traces(d, 1000, 64, 7, None);
        let est = cstar_estimate(&traces);
        let tail = evt::estimate_tail_constant(
            d,
            &TailOptions {
                orbit_len: 400_000,
                chunk_digits: 100_000,
                chunk_bits: 260_000,
                ..TailOptions::default()
            },
            11,
        );
        let c_d = tail.frechet_scale();
        let alpha = (c_d / (2.0 * est.c_star.sqrt())).ln();
        println!(
            "{:>3}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}",
            d.d(),
            est.cross_estimator / 2.0,
            est.c_star,
            tail.h_hat,
            c_d,
            alpha
        );
    }
}
