//! The upper half-space model of hyperbolic 3-space and the action of
//! `PSL_2(Z[omega])` on it.
//!
//! Points are `z + r j` with `z` complex and `r > 0`. A matrix
//! `[[a, b], [c, d]]` acts by
//! `(z + rj) -> ((az+b)(conj(cz+d)) + a conj(c) r^2 + rj) / (|cz+d|^2 + |c|^2 r^2)`,
//! and on the boundary sphere by the usual Mobius transformation.

use crate::cfrac::{Expansion, FundamentalCell};
use crate::ring::{nearest_lattice_point, ratio_to_c64, Discriminant, FieldElement, RingElement};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("matrix determinant is not a unit of Z[omega]")]
    NotUnimodular,
    #[error("lift endpoints violate the hemisphere precondition: {0}")]
    BadLift(&'static str),
    #[error("basepoint does not lie on the geodesic")]
    OffGeodesic,
    #[error("no rotation generator exists for d = {0}")]
    NoRotation(Discriminant),
    #[error("endpoints of a geodesic must be distinct")]
    DegenerateEndpoints,
}

/// A point `z + r j` of the upper half-space, `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H3Point {
    pub z: Complex64,
    pub r: f64,
}

impl H3Point {
    pub fn new(z: Complex64, r: f64) -> Self {
        assert!(r > 0.0, "height must be positive");
        H3Point { z, r }
    }

    /// `|z|^2 + r^2`, the squared Euclidean distance to the origin of the
    /// boundary plane.
    pub fn sq_radius(&self) -> f64 {
        self.z.norm_sqr() + self.r * self.r
    }
}

/// Hyperbolic distance: `cosh dist = 1 + (|z1-z2|^2 + (r1-r2)^2) / (2 r1 r2)`.
pub fn distance(p: H3Point, q: H3Point) -> f64 {
    let c = 1.0 + ((p.z - q.z).norm_sqr() + (p.r - q.r).powi(2)) / (2.0 * p.r * q.r);
    c.max(1.0).acosh()
}

/// A boundary point of `H^3`: a complex number or the point at infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Finite(FieldElement),
    Infinity,
}

/// A matrix `[[a, b], [c, d]]` over `Z[omega]` with unit determinant,
/// considered modulo `+-I`.
#[derive(Clone, Debug)]
pub struct MobiusMap {
    pub a: RingElement,
    pub b: RingElement,
    pub c: RingElement,
    pub d: RingElement,
}

impl MobiusMap {
    pub fn new(
        a: RingElement,
        b: RingElement,
        c: RingElement,
        d: RingElement,
    ) -> Result<Self, GeomError> {
        let m = MobiusMap { a, b, c, d };
        if m.det().is_unit() {
            Ok(m)
        } else {
            Err(GeomError::NotUnimodular)
        }
    }

    pub fn disc(&self) -> Discriminant {
        self.a.disc()
    }

    pub fn identity(d: Discriminant) -> Self {
        MobiusMap {
            a: RingElement::one(d),
            b: RingElement::zero(d),
            c: RingElement::zero(d),
            d: RingElement::one(d),
        }
    }

    /// The inversion `S = [[0, 1], [-1, 0]]`.
    pub fn inversion(d: Discriminant) -> Self {
        MobiusMap {
            a: RingElement::zero(d),
            b: RingElement::one(d),
            c: -RingElement::one(d),
            d: RingElement::zero(d),
        }
    }

    /// The translation `T^q = [[1, q], [0, 1]]`.
    pub fn translation(q: RingElement) -> Self {
        let d = q.disc();
        MobiusMap {
            a: RingElement::one(d),
            b: q,
            c: RingElement::zero(d),
            d: RingElement::one(d),
        }
    }

    /// The extra generator `[[omega, 0], [0, conj(omega)]]` needed for
    /// `d = 1, 3`; acts on the boundary as multiplication by
    /// `omega / conj(omega)`.
    pub fn rotation(d: Discriminant) -> Result<Self, GeomError> {
        if !matches!(d, Discriminant::D1 | Discriminant::D3) {
            return Err(GeomError::NoRotation(d));
        }
        let om = RingElement::omega(d);
        Ok(MobiusMap {
            a: om.clone(),
            b: RingElement::zero(d),
            c: RingElement::zero(d),
            d: om.conj(),
        })
    }

    pub fn det(&self) -> RingElement {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Inverse in `PSL_2`: the adjugate divided by the (unit) determinant.
    pub fn inverse(&self) -> Self {
        let det = self.det();
        let det_inv = det.conj(); // unit: det * conj(det) = 1
        MobiusMap {
            a: &self.d * &det_inv,
            b: -&self.b * &det_inv,
            c: -&self.c * &det_inv,
            d: &self.a * &det_inv,
        }
    }

    /// Equality in `PSL_2`, i.e. up to a global sign.
    pub fn eq_mod_sign(&self, other: &Self) -> bool {
        (self.a == other.a && self.b == other.b && self.c == other.c && self.d == other.d)
            || (self.a == -&other.a
                && self.b == -&other.b
                && self.c == -&other.c
                && self.d == -&other.d)
    }

    /// Action on the upper half-space in coordinates.
    pub fn act(&self, p: H3Point) -> H3Point {
        let a = self.a.embed();
        let b = self.b.embed();
        let c = self.c.embed();
        let d = self.d.embed();
        let cz_d = c * p.z + d;
        let denom = cz_d.norm_sqr() + c.norm_sqr() * p.r * p.r;
        let num = (a * p.z + b) * cz_d.conj() + a * c.conj() * p.r * p.r;
        H3Point::new(num / denom, p.r / denom)
    }

    /// Boundary action on `C + {infinity}` in floating point.
    pub fn act_boundary_f64(&self, zeta: Option<Complex64>) -> Option<Complex64> {
        let a = self.a.embed();
        let b = self.b.embed();
        let c = self.c.embed();
        let d = self.d.embed();
        match zeta {
            Some(z) => {
                let den = c * z + d;
                if den.norm() == 0.0 {
                    None
                } else {
                    Some((a * z + b) / den)
                }
            }
            None => {
                if c.norm() == 0.0 {
                    None
                } else {
                    Some(a / c)
                }
            }
        }
    }

    /// Exact boundary action on field elements and infinity.
    pub fn act_boundary(&self, zeta: &Boundary) -> Boundary {
        match zeta {
            Boundary::Finite(x) => {
                let num = &self.a * x.num() + &self.b * x.den();
                let den = &self.c * x.num() + &self.d * x.den();
                if den.is_zero() {
                    Boundary::Infinity
                } else {
                    Boundary::Finite(FieldElement::new_unreduced(num, den).expect("nonzero"))
                }
            }
            Boundary::Infinity => {
                if self.c.is_zero() {
                    Boundary::Infinity
                } else {
                    Boundary::Finite(
                        FieldElement::new_unreduced(self.a.clone(), self.c.clone())
                            .expect("nonzero"),
                    )
                }
            }
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        MobiusMap {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }
}

/// Position of `g . (beta + r j)` for an exact boundary anchor `beta`.
///
/// The combinations `a beta + b` and `c beta + d` are formed exactly before
/// embedding, so the result keeps full relative f64 accuracy even when the
/// matrix entries are astronomically large and `c beta + d` is tiny — the
/// regime that makes the naive float evaluation collapse.
pub fn vertical_orbit_position(g: &MobiusMap, beta: &FieldElement, r: f64) -> H3Point {
    let an = &g.a * beta.num() + &g.b * beta.den();
    let cn = &g.c * beta.num() + &g.d * beta.den();
    let a_beta_b = ratio_to_c64(&an, beta.den());
    let c_beta_d = ratio_to_c64(&cn, beta.den());
    let a = g.a.embed();
    let c = g.c.embed();
    let denom = c_beta_d.norm_sqr() + c.norm_sqr() * r * r;
    let num = a_beta_b * c_beta_d.conj() + a * c.conj() * r * r;
    H3Point::new(num / denom, r / denom)
}

/// An oriented geodesic given by its boundary endpoints.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicLift {
    pub attracting: Option<Complex64>,
    pub repelling: Option<Complex64>,
}

impl GeodesicLift {
    /// `None` encodes the point at infinity.
    pub fn new(attracting: Option<Complex64>, repelling: Option<Complex64>) -> Result<Self, GeomError> {
        match (attracting, repelling) {
            (None, None) => Err(GeomError::DegenerateEndpoints),
            (Some(a), Some(b)) if (a - b).norm() == 0.0 => Err(GeomError::DegenerateEndpoints),
            _ => Ok(GeodesicLift { attracting, repelling }),
        }
    }
}

/// Intersection of the geodesic with attracting endpoint `beta` (`|beta|<1`)
/// and repelling endpoint `alpha` (`|alpha|>1` or infinity) with the unit
/// hemisphere `H(0)`:
///
/// `r = sqrt((1-|b|^2)(|a|^2-1)) |a-b| / (|a|^2-|b|^2)`,
/// `z = b + (1-|b|^2)(a-b) / (|a|^2-|b|^2)`,
/// and the vertical limit `z = beta`, `r = sqrt(1-|beta|^2)` for `alpha`
/// at infinity. The output satisfies `|z|^2 + r^2 = 1`.
pub fn hemisphere_intersection(lift: GeodesicLift) -> Result<H3Point, GeomError> {
    let beta = lift.attracting.ok_or(GeomError::BadLift("attracting endpoint must be finite"))?;
    let b2 = beta.norm_sqr();
    if b2 >= 1.0 {
        return Err(GeomError::BadLift("attracting endpoint must satisfy |beta| < 1"));
    }
    match lift.repelling {
        None => Ok(H3Point::new(beta, (1.0 - b2).sqrt())),
        Some(alpha) => {
            let a2 = alpha.norm_sqr();
            if a2 <= 1.0 {
                return Err(GeomError::BadLift("repelling endpoint must satisfy |alpha| > 1"));
            }
            let denom = a2 - b2;
            let r = ((1.0 - b2) * (a2 - 1.0)).sqrt() * (alpha - beta).norm() / denom;
            let z = beta + (alpha - beta) * ((1.0 - b2) / denom);
            Ok(H3Point::new(z, r))
        }
    }
}

/// Unit-speed position along an oriented geodesic, measured from a basepoint
/// that must already lie on it (within `1e-9`); positive time flows toward
/// the attracting endpoint.
pub fn geodesic_position(lift: GeodesicLift, basepoint: H3Point, t: f64) -> Result<H3Point, GeomError> {
    match (lift.attracting, lift.repelling) {
        (Some(zeta), None) => {
            // Vertical line over zeta; repelling end at infinity, so height
            // decays as e^{-t}.
            if (basepoint.z - zeta).norm() > 1e-9 * (1.0 + basepoint.r) {
                return Err(GeomError::OffGeodesic);
            }
            Ok(H3Point::new(zeta, basepoint.r * (-t).exp()))
        }
        (None, Some(zeta)) => {
            if (basepoint.z - zeta).norm() > 1e-9 * (1.0 + basepoint.r) {
                return Err(GeomError::OffGeodesic);
            }
            Ok(H3Point::new(zeta, basepoint.r * t.exp()))
        }
        (Some(att), Some(rep)) => {
            // Half-circle with centre c and radius rho in the vertical plane
            // through the endpoints: P(theta) = c + rho cos(theta) u + rho
            // sin(theta) j, theta = 0 at the attracting end. Unit speed comes
            // from the substitution t = -ln tan(theta/2), which inverts to
            // theta(t) = 2 atan(e^{-t}).
            let c = (att + rep) * 0.5;
            let rho = (att - rep).norm() * 0.5;
            if rho == 0.0 {
                return Err(GeomError::DegenerateEndpoints);
            }
            let u = (att - rep) / (att - rep).norm();
            let w = (basepoint.z - c) / u;
            if w.im.abs() > 1e-9 * (1.0 + rho) {
                return Err(GeomError::OffGeodesic);
            }
            let on_circle = (w.re * w.re + basepoint.r * basepoint.r - rho * rho).abs();
            if on_circle > 1e-8 * rho * rho {
                return Err(GeomError::OffGeodesic);
            }
            let theta0 = basepoint.r.atan2(w.re);
            let t0 = -(0.5 * theta0).tan().ln();
            let theta = 2.0 * (-(t0 + t)).exp().atan();
            Ok(H3Point::new(c + u * rho * theta.cos(), rho * theta.sin()))
        }
        (None, None) => Err(GeomError::DegenerateEndpoints),
    }
}

/// The matrix `P(n, beta) = [[q_n, -p_n], [(-1)^{n-1} q_{n-1}, (-1)^n p_{n-1}]]`
/// carrying the model geodesic `(beta, infinity)` to its `n`-th relift.
pub fn p_matrix(exp: &Expansion, n: usize) -> MobiusMap {
    assert!(n >= 1 && n <= exp.len(), "p_matrix needs 1 <= n <= len");
    let d = exp.disc();
    let s_prev = crate::cfrac::sign_element(d, n - 1);
    let s_cur = crate::cfrac::sign_element(d, n);
    MobiusMap {
        a: exp.q(n).clone(),
        b: -exp.p(n),
        c: &s_prev * exp.q(n - 1),
        d: &s_cur * exp.p(n - 1),
    }
}

/// The product `(T^{(-1)^{n-1} a_n} S) ... (T^{-a_2} S)(T^{a_1} S)` built
/// directly from the digits.
pub fn generator_product(digits: &[RingElement], d: Discriminant) -> MobiusMap {
    let mut m = MobiusMap::identity(d);
    for (k, a) in digits.iter().enumerate() {
        let signed = if k % 2 == 0 { a.clone() } else { -a };
        let factor = MobiusMap::translation(signed).mul(&MobiusMap::inversion(d));
        m = factor.mul(&m);
    }
    m
}

/// One reduction move recorded in the word returned by [`reduce_to_domain`].
#[derive(Clone, Debug, PartialEq)]
pub enum Gen {
    /// `T^q`
    Translate(RingElement),
    /// `S`
    Invert,
    /// The rotation generator (only for `d = 1, 3`).
    Rotate,
}

impl Gen {
    pub fn matrix(&self, d: Discriminant) -> MobiusMap {
        match self {
            Gen::Translate(q) => MobiusMap::translation(q.clone()),
            Gen::Invert => MobiusMap::inversion(d),
            Gen::Rotate => MobiusMap::rotation(d).expect("rotation exists"),
        }
    }

    /// Apply the move to a point directly in floating point.
    pub fn apply_f64(&self, p: H3Point, d: Discriminant) -> H3Point {
        match self {
            Gen::Translate(q) => H3Point::new(p.z + q.embed(), p.r),
            Gen::Invert => {
                let s = p.sq_radius();
                H3Point::new(-p.z.conj() / s, p.r / s)
            }
            Gen::Rotate => {
                let factor = match d {
                    Discriminant::D1 => Complex64::new(-1.0, 0.0),
                    Discriminant::D3 => {
                        Complex64::from_polar(1.0, -2.0 * std::f64::consts::FRAC_PI_3)
                    }
                    _ => unreachable!("rotation only exists for d = 1, 3"),
                };
                H3Point::new(p.z * factor, p.r)
            }
        }
    }
}

/// The next reduction move for `p`, or `None` when `p` already lies in the
/// closed fundamental domain: translate into the cell first, then rotate into
/// the reduced sector for `d = 1, 3`, then invert while below the unit
/// hemisphere.
pub fn next_reduction_move(p: H3Point, d: Discriminant) -> Option<Gen> {
    let q = nearest_lattice_point(p.z, d);
    if !q.is_zero() {
        return Some(Gen::Translate(-q));
    }
    match d {
        Discriminant::D1 => {
            if p.z.re < 0.0 {
                return Some(Gen::Rotate);
            }
        }
        Discriminant::D3 => {
            if p.z.norm() >= 1e-15 && !in_k3_sector(p.z, 0.0) {
                return Some(Gen::Rotate);
            }
        }
        _ => {}
    }
    if p.sq_radius() < 1.0 - BELOW_TOL {
        return Some(Gen::Invert);
    }
    None
}

/// Result of reducing a point into the fundamental domain.
#[derive(Clone, Debug)]
pub struct ReducedPoint {
    pub point: H3Point,
    /// Generators in application order: `point = word.last * ... * word.first * input`.
    pub word: Vec<Gen>,
    /// The accumulated map, equal to the ordered product of the word.
    pub map: MobiusMap,
    /// False when the iteration cap was hit and the best representative so
    /// far was returned.
    pub converged: bool,
}

const REDUCE_CAP: usize = 10_000;
const BELOW_TOL: f64 = 1e-12;

/// Angular-sector test for `K_3'`: `arg z` within `[pi/6, 5pi/6]` expressed
/// through the two bounding half-planes, stable near `z = 0`.
fn in_k3_sector(z: Complex64, tol: f64) -> bool {
    let lower = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_6);
    let upper = Complex64::from_polar(1.0, -5.0 * std::f64::consts::FRAC_PI_6);
    (z * lower).im >= -tol && (z * upper).im <= tol
}

/// Closure membership in the reduced cell `K_d'` (equal to `K_d` except for
/// `d = 1, 3`).
pub fn in_k_prime(z: Complex64, d: Discriminant, tol: f64) -> bool {
    match d {
        Discriminant::D1 => {
            z.re >= -tol && z.re <= 0.5 + tol && z.im.abs() <= 0.5 + tol
        }
        Discriminant::D3 => {
            FundamentalCell::new(d).contains_closure(z, tol) && in_k3_sector(z, tol)
        }
        _ => FundamentalCell::new(d).contains_closure(z, tol),
    }
}

/// Closure membership in the fundamental domain `F_d`.
pub fn in_fundamental_domain(p: H3Point, d: Discriminant, tol: f64) -> bool {
    in_k_prime(p.z, d, tol) && p.sq_radius() >= 1.0 - tol
}

/// Reduce `p` into the closure of the fundamental domain `F_d`, returning the
/// representative, the generator word and the accumulated map.
///
/// Translations come first, then (for `d = 1, 3`) the rotation into the
/// reduced sector, then the inversion whenever the point is still below the
/// unit hemisphere; the height never decreases along the way. A hard cap
/// guards boundary-degenerate inputs, in which case the best representative
/// so far is returned with `converged = false`.
pub fn reduce_to_domain(p: H3Point, d: Discriminant) -> ReducedPoint {
    let mut state = ReductionState::new(p, d);
    state.run();
    state.finish()
}

pub(crate) struct ReductionState {
    d: Discriminant,
    point: H3Point,
    word: Vec<Gen>,
    map: MobiusMap,
    converged: bool,
}

impl ReductionState {
    pub(crate) fn new(p: H3Point, d: Discriminant) -> Self {
        ReductionState {
            d,
            point: p,
            word: Vec::new(),
            map: MobiusMap::identity(d),
            converged: false,
        }
    }

    fn run(&mut self) {
        for _ in 0..REDUCE_CAP {
            match next_reduction_move(self.point, self.d) {
                Some(g) => {
                    self.point = g.apply_f64(self.point, self.d);
                    self.map = g.matrix(self.d).mul(&self.map);
                    self.word.push(g);
                }
                None => {
                    self.converged = true;
                    break;
                }
            }
        }
    }

    fn finish(self) -> ReducedPoint {
        ReducedPoint {
            point: self.point,
            word: self.word,
            map: self.map,
            converged: self.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::ExpandOptions;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn ri(d: Discriminant, n: i64, m: i64) -> RingElement {
        RingElement::from_i64(d, n, m)
    }

    fn small_random_map(d: Discriminant, rng: &mut impl Rng) -> MobiusMap {
        // random word in the generators keeps the determinant a unit
        let mut m = MobiusMap::identity(d);
        for _ in 0..6 {
            let pick: u8 = rng.random_range(0..3);
            let g = match pick {
                0 => MobiusMap::inversion(d),
                1 => MobiusMap::translation(ri(d, rng.random_range(-2..3), rng.random_range(-2..3))),
                _ => match MobiusMap::rotation(d) {
                    Ok(r) => r,
                    Err(_) => MobiusMap::inversion(d),
                },
            };
            m = g.mul(&m);
        }
        m
    }

    #[test]
    fn inversion_fixes_unit_axis_point() {
        for d in Discriminant::ALL {
            let s = MobiusMap::inversion(d);
            let p = s.act(H3Point::new(Complex64::new(0.0, 0.0), 1.0));
            assert!((p.z.norm()) < 1e-15 && (p.r - 1.0).abs() < 1e-15);
            let q = s.act(H3Point::new(Complex64::new(0.0, 0.0), 2.0));
            assert!((q.r - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn translation_shifts_horizontally() {
        let d = Discriminant::D7;
        let q = ri(d, 2, -1);
        let t = MobiusMap::translation(q.clone());
        let p = t.act(H3Point::new(Complex64::new(0.3, 0.1), 0.7));
        assert!((p.z - (Complex64::new(0.3, 0.1) + q.embed())).norm() < 1e-15);
        assert!((p.r - 0.7).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let j = H3Point::new(Complex64::new(0.0, 0.0), 1.0);
        let j2 = H3Point::new(Complex64::new(0.0, 0.0), 2.0);
        assert_relative_eq!(distance(j, j2), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_eq!(distance(j, j), 0.0);
    }

    #[test]
    fn action_is_isometric_and_associative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for d in Discriminant::ALL {
            for _ in 0..50 {
                let g = small_random_map(d, &mut rng);
                let h = small_random_map(d, &mut rng);
                let p = H3Point::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(0.2..2.0),
                );
                let q = H3Point::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    rng.random_range(0.2..2.0),
                );
                assert_relative_eq!(
                    distance(g.act(p), g.act(q)),
                    distance(p, q),
                    epsilon = 1e-10
                );
                let lhs = g.mul(&h).act(p);
                let rhs = g.act(h.act(p));
                assert!((lhs.z - rhs.z).norm() < 1e-10 && (lhs.r - rhs.r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hemisphere_intersection_examples() {
        let l = GeodesicLift::new(Some(Complex64::new(0.0, 0.0)), Some(Complex64::new(2.0, 0.0)))
            .unwrap();
        let p = hemisphere_intersection(l).unwrap();
        assert_relative_eq!(p.z.re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.r, 0.75f64.sqrt(), epsilon = 1e-14);

        let v = GeodesicLift::new(Some(Complex64::new(0.0, 0.0)), None).unwrap();
        let pv = hemisphere_intersection(v).unwrap();
        assert_eq!(pv.z, Complex64::new(0.0, 0.0));
        assert_eq!(pv.r, 1.0);

        let w = GeodesicLift::new(Some(Complex64::new(0.5, 0.0)), Some(Complex64::new(-2.0, 0.0)))
            .unwrap();
        let pw = hemisphere_intersection(w).unwrap();
        assert!((pw.z.norm()) < 1e-14);
        assert_relative_eq!(pw.r, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hemisphere_intersection_lies_on_sphere() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..2000 {
            let beta = Complex64::from_polar(rng.random_range(0.0..0.99), rng.random_range(0.0..6.28));
            let alpha = Complex64::from_polar(rng.random_range(1.01..50.0), rng.random_range(0.0..6.28));
            if let Ok(p) = hemisphere_intersection(GeodesicLift::new(Some(beta), Some(alpha)).unwrap())
            {
                assert!((p.sq_radius() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hemisphere_intersection_rejects_bad_lifts() {
        let l = GeodesicLift::new(Some(Complex64::new(1.5, 0.0)), None).unwrap();
        assert!(hemisphere_intersection(l).is_err());
        let m = GeodesicLift::new(Some(Complex64::new(0.2, 0.0)), Some(Complex64::new(0.5, 0.0)))
            .unwrap();
        assert!(hemisphere_intersection(m).is_err());
    }

    #[test]
    fn p_matrix_base_case_and_determinant() {
        let d = Discriminant::D1;
        let beta = FieldElement::new(ri(d, 3, 2), ri(d, 10, 0)).unwrap();
        let exp = Expansion::expand(&beta, 5, ExpandOptions::default()).unwrap();
        let p1 = p_matrix(&exp, 1);
        assert_eq!(p1.a, *exp.digit(1));
        assert_eq!(p1.b, ri(d, -1, 0));
        assert_eq!(p1.c, ri(d, 1, 0));
        assert!(p1.d.is_zero());
        let gp = generator_product(&exp.digits()[..1], d);
        assert!(p1.eq_mod_sign(&gp));
        assert!(p1.det().is_unit());
    }

    #[test]
    fn p_matrix_golden_example() {
        let d = Discriminant::D1;
        let beta = FieldElement::new(ri(d, 3, 2), ri(d, 10, 0)).unwrap();
        let exp = Expansion::expand(&beta, 5, ExpandOptions::default()).unwrap();
        let p3 = p_matrix(&exp, 3);
        assert_eq!(p3.a, ri(d, 10, 0));
        assert_eq!(p3.b, ri(d, -3, -2));
        assert_eq!(p3.c, ri(d, 1, -4));
        assert_eq!(p3.d, ri(d, -1, 1));
        assert!(p3.eq_mod_sign(&generator_product(exp.digits(), d)));
    }

    #[test]
    fn p_matrix_equals_generator_product_on_random_betas() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for d in Discriminant::ALL {
            for _ in 0..10 {
                let beta = crate::evt::sample_beta_exact(d, 160, &mut rng);
                let exp = Expansion::expand(&beta, 50, ExpandOptions::default()).unwrap();
                for n in 1..=exp.len() {
                    let pm = p_matrix(&exp, n);
                    let gp = generator_product(&exp.digits()[..n], d);
                    assert!(pm.eq_mod_sign(&gp), "mismatch at d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn boundary_action_handles_infinity() {
        let d = Discriminant::D2;
        let s = MobiusMap::inversion(d);
        // S(infinity) = 0, S(0) = infinity
        match s.act_boundary(&Boundary::Infinity) {
            Boundary::Finite(x) => assert!(x.is_zero()),
            Boundary::Infinity => panic!("expected finite"),
        }
        assert_eq!(
            s.act_boundary(&Boundary::Finite(FieldElement::zero(d))),
            Boundary::Infinity
        );
        let t = MobiusMap::translation(ri(d, 3, 1));
        assert_eq!(t.act_boundary(&Boundary::Infinity), Boundary::Infinity);
    }

    #[test]
    fn geodesic_position_vertical_and_roundtrip() {
        let beta = Complex64::new(0.2, -0.1);
        let lift = GeodesicLift::new(Some(beta), None).unwrap();
        let base = H3Point::new(beta, 1.0);
        let p = geodesic_position(lift, base, 1.5).unwrap();
        assert!((p.z - beta).norm() < 1e-15);
        assert_relative_eq!(p.r, (-1.5f64).exp(), epsilon = 1e-12);
        let p0 = geodesic_position(lift, base, 0.0).unwrap();
        assert_eq!(p0.z, base.z);
        assert_eq!(p0.r, base.r);
    }

    #[test]
    fn geodesic_position_circular() {
        let att = Complex64::new(1.0, 0.0);
        let rep = Complex64::new(-1.0, 0.0);
        let lift = GeodesicLift::new(Some(att), Some(rep)).unwrap();
        let apex = H3Point::new(Complex64::new(0.0, 0.0), 1.0);
        // unit speed: time t from the apex must cover hyperbolic distance |t|
        for t in [-1.2, -0.3, 0.0, 0.4, 2.0] {
            let p = geodesic_position(lift, apex, t).unwrap();
            assert_relative_eq!(distance(apex, p), t.abs(), epsilon = 1e-9);
            // round trip
            let back = geodesic_position(lift, p, -t).unwrap();
            assert!((back.z - apex.z).norm() < 1e-9 && (back.r - apex.r).abs() < 1e-9);
        }
        // basepoint off the geodesic is rejected
        let off = H3Point::new(Complex64::new(0.0, 0.3), 1.0);
        assert!(geodesic_position(lift, off, 1.0).is_err());
    }

    #[test]
    fn reduce_fixed_point_of_domain() {
        for d in Discriminant::ALL {
            let p = H3Point::new(Complex64::new(0.1, 0.2), 1.5);
            if in_fundamental_domain(p, d, 0.0) {
                let red = reduce_to_domain(p, d);
                assert!(red.word.is_empty());
                assert_eq!(red.point, p);
            }
        }
    }

    #[test]
    fn reduce_below_hemisphere_point() {
        let d = Discriminant::D2;
        let p = H3Point::new(Complex64::new(0.1, 0.1), 0.5);
        let red = reduce_to_domain(p, d);
        assert!(red.converged);
        assert!(red.word.contains(&Gen::Invert));
        assert!(red.point.sq_radius() >= 1.0 - 1e-10);
        assert!(red.point.r >= p.r);
        // the recorded map reproduces the reduction
        let replay = red.map.act(p);
        assert!((replay.z - red.point.z).norm() < 1e-9 && (replay.r - red.point.r).abs() < 1e-9);
    }

    #[test]
    fn reduce_high_point_uses_translations_only() {
        for d in Discriminant::ALL {
            let q = ri(d, 5, 3);
            let p = H3Point::new(q.embed(), 2.0);
            let red = reduce_to_domain(p, d);
            assert!(red.converged);
            assert!(red
                .word
                .iter()
                .all(|g| matches!(g, Gen::Translate(_) | Gen::Rotate)));
            assert!(FundamentalCell::new(d).contains_closure(red.point.z, 1e-10));
            assert_eq!(red.point.r, 2.0);
        }
    }

    #[test]
    fn reduce_random_points_land_in_domain() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(24);
        for d in Discriminant::ALL {
            for _ in 0..200 {
                let p = H3Point::new(
                    Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
                    rng.random_range(0.05..3.0),
                );
                let red = reduce_to_domain(p, d);
                assert!(red.converged);
                assert!(
                    in_fundamental_domain(red.point, d, 1e-10),
                    "not reduced: d={d} out={:?}",
                    red.point
                );
                if p.sq_radius() < 1.0 {
                    assert!(red.point.r >= p.r - 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotation_requires_d_1_or_3() {
        assert!(MobiusMap::rotation(Discriminant::D1).is_ok());
        assert!(MobiusMap::rotation(Discriminant::D3).is_ok());
        assert!(MobiusMap::rotation(Discriminant::D7).is_err());
    }

    #[test]
    fn inverse_is_inverse_mod_sign() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(25);
        for d in Discriminant::ALL {
            for _ in 0..30 {
                let g = small_random_map(d, &mut rng);
                let prod = g.mul(&g.inverse());
                assert!(prod.eq_mod_sign(&MobiusMap::identity(d)));
            }
        }
    }

    #[test]
    fn non_unimodular_matrices_are_rejected() {
        let d = Discriminant::D1;
        let err = MobiusMap::new(ri(d, 2, 0), ri(d, 0, 0), ri(d, 0, 0), ri(d, 1, 0));
        assert_eq!(err.unwrap_err(), GeomError::NotUnimodular);
    }

    #[test]
    fn vertical_orbit_position_matches_act_for_small_words() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(26);
        for d in Discriminant::ALL {
            let beta = crate::evt::sample_beta_exact(d, 48, &mut rng);
            let g = small_random_map(d, &mut rng);
            for r in [1.0, 0.3, 1e-3] {
                let fast = vertical_orbit_position(&g, &beta, r);
                let slow = g.act(H3Point::new(beta.embed(), r));
                assert!((fast.z - slow.z).norm() < 1e-9);
                assert!((fast.r - slow.r).abs() < 1e-9 * (1.0 + slow.r));
            }
        }
    }
}
