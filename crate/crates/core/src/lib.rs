//! Nearest-integer continued fractions with digits in the ring of integers of
//! an imaginary quadratic field Q(sqrt(-d)), for the five Euclidean cases
//! d = 1, 2, 3, 7, 11.
//!
//! The crate has five layers:
//!
//! * [`ring`] — exact arithmetic in Z[omega] and Q(sqrt(-d)), nearest lattice
//!   point search, and floating-point embeddings of exact values.
//! * [`cfrac`] — the continued fraction algorithm itself: the fundamental cell
//!   `K_d`, the Gauss map, digit streams, convergents, and the classical
//!   identities relating them.
//! * [`hyperbolic`] — the upper half-space model of hyperbolic 3-space, the
//!   action of `PSL_2(Z[omega])`, geodesics, hemisphere intersections, and
//!   reduction into a fundamental domain.
//! * [`excursion`] — intersection and excursion times of the model geodesics
//!   `(beta, infinity)` and growth-rate estimators for the convergent
//!   denominators.
//! * [`evt`] — Monte Carlo drivers and extreme-value statistics: digit-tail
//!   constants, Frechet and Poisson fits for maximal digits, the real
//!   continued fraction baseline, and the cusp-excursion experiment.

pub mod cfrac;
pub mod evt;
pub mod excursion;
pub mod hyperbolic;
pub mod ring;

pub use cfrac::{Expansion, FundamentalCell, GaussOrbit};
pub use excursion::{CstarEstimate, ExcursionRecord, ExcursionTrace};
pub use hyperbolic::{Boundary, GeodesicLift, H3Point, MobiusMap, ReducedPoint};
pub use ring::{Discriminant, FieldElement, RingElement};
