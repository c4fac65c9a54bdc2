//! Exact arithmetic in the ring of integers `Z[omega]` of `Q(sqrt(-d))` and in
//! the field itself, for the five norm-Euclidean discriminants
//! `d = 1, 2, 3, 7, 11`.
//!
//! Elements are stored as integer coordinate pairs `n + m*omega` with
//! arbitrary-precision coordinates, where `omega = sqrt(-d)` for
//! `d = 1, 2 (mod 4)` and `omega = (-1 + sqrt(-d))/2` for `d = 3 (mod 4)`.
//! All ring and field operations are exact; floating-point only enters
//! through the explicit embedding helpers.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use std::fmt;

/// Discriminant of one of the five norm-Euclidean imaginary quadratic fields.
///
/// Only `d = 1, 2, 3, 7, 11` are constructible; these are exactly the cases
/// in which the nearest-integer division algorithm works in `Z[omega]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Discriminant {
    D1,
    D2,
    D3,
    D7,
    D11,
}

impl serde::Serialize for Discriminant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(self.d())
    }
}

impl<'de> serde::Deserialize<'de> for Discriminant {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(de)?;
        Discriminant::from_d(v)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid discriminant {v}")))
    }
}

impl Discriminant {
    pub const ALL: [Discriminant; 5] = [
        Discriminant::D1,
        Discriminant::D2,
        Discriminant::D3,
        Discriminant::D7,
        Discriminant::D11,
    ];

    /// The integer value of `d`.
    pub fn d(self) -> i64 {
        match self {
            Discriminant::D1 => 1,
            Discriminant::D2 => 2,
            Discriminant::D3 => 3,
            Discriminant::D7 => 7,
            Discriminant::D11 => 11,
        }
    }

    pub fn from_d(d: i64) -> Option<Self> {
        match d {
            1 => Some(Discriminant::D1),
            2 => Some(Discriminant::D2),
            3 => Some(Discriminant::D3),
            7 => Some(Discriminant::D7),
            11 => Some(Discriminant::D11),
            _ => None,
        }
    }

    /// True when `d = 3 (mod 4)`, i.e. `omega = (-1 + sqrt(-d))/2`.
    pub fn is_three_mod_four(self) -> bool {
        matches!(self, Discriminant::D3 | Discriminant::D7 | Discriminant::D11)
    }

    pub fn sqrt_d(self) -> f64 {
        (self.d() as f64).sqrt()
    }

    /// `omega` as a complex number.
    pub fn omega(self) -> num_complex::Complex64 {
        if self.is_three_mod_four() {
            num_complex::Complex64::new(-0.5, 0.5 * self.sqrt_d())
        } else {
            num_complex::Complex64::new(0.0, self.sqrt_d())
        }
    }

    /// Supremum of `|z|` over the fundamental cell `K_d`, i.e. the covering
    /// radius of the lattice (the distance from 0 to the farthest cell vertex).
    pub fn covering_radius(self) -> f64 {
        match self {
            Discriminant::D1 => std::f64::consts::FRAC_1_SQRT_2,
            Discriminant::D2 => 0.75f64.sqrt(),
            // Hexagonal cells: all vertices lie at distance (d+1)/(4 sqrt(d))
            // from the two vertex families, which coincide at 3/sqrt(d) forms.
            Discriminant::D3 => 1.0 / 3.0f64.sqrt(),
            Discriminant::D7 => 2.0 / 7.0f64.sqrt(),
            Discriminant::D11 => 3.0 / 11.0f64.sqrt(),
        }
    }

    /// Lebesgue area of the fundamental cell `K_d` (the lattice covolume).
    pub fn cell_area(self) -> f64 {
        if self.is_three_mod_four() {
            self.sqrt_d() / 2.0
        } else {
            self.sqrt_d()
        }
    }

    /// Half-height of the smallest axis-aligned box containing `K_d`.
    /// The half-width is always 1/2.
    pub fn cell_box_half_height(self) -> f64 {
        if self.is_three_mod_four() {
            (self.d() as f64 + 1.0) / (4.0 * self.sqrt_d())
        } else {
            self.sqrt_d() / 2.0
        }
    }

    /// The Voronoi-relevant lattice vectors: the neighbors of 0 whose
    /// bisectors carry the faces of `K_d`.
    pub fn neighbors(self) -> Vec<RingElement> {
        let one = RingElement::from_i64(self, 1, 0);
        let om = RingElement::from_i64(self, 0, 1);
        let mut v = vec![one.clone(), -&one, om.clone(), -&om];
        if self.is_three_mod_four() {
            let w = RingElement::from_i64(self, 1, 1);
            v.push(-&w);
            v.push(w);
        }
        v
    }

    /// The unit group of `Z[omega]`.
    pub fn units(self) -> Vec<RingElement> {
        let one = RingElement::from_i64(self, 1, 0);
        let mut v = vec![one.clone(), -&one];
        match self {
            Discriminant::D1 => {
                let i = RingElement::from_i64(self, 0, 1);
                v.push(-&i);
                v.push(i);
            }
            Discriminant::D3 => {
                for (n, m) in [(0, 1), (0, -1), (1, 1), (-1, -1)] {
                    v.push(RingElement::from_i64(self, n, m));
                }
            }
            _ => {}
        }
        v
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d())
    }
}

/// Errors from exact ring and field arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RingError {
    #[error("division by zero in Q(sqrt(-{0}))")]
    DivisionByZero(Discriminant),
}

/// An exact element `n + m*omega` of `Z[omega]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RingElement {
    d: Discriminant,
    n: BigInt,
    m: BigInt,
}

impl RingElement {
    pub fn new(d: Discriminant, n: BigInt, m: BigInt) -> Self {
        RingElement { d, n, m }
    }

    pub fn from_i64(d: Discriminant, n: i64, m: i64) -> Self {
        RingElement::new(d, BigInt::from(n), BigInt::from(m))
    }

    pub fn zero(d: Discriminant) -> Self {
        RingElement::from_i64(d, 0, 0)
    }

    pub fn one(d: Discriminant) -> Self {
        RingElement::from_i64(d, 1, 0)
    }

    pub fn omega(d: Discriminant) -> Self {
        RingElement::from_i64(d, 0, 1)
    }

    pub fn disc(&self) -> Discriminant {
        self.d
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn m(&self) -> &BigInt {
        &self.m
    }

    pub fn is_zero(&self) -> bool {
        self.n.is_zero() && self.m.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.m.is_zero() && self.n == BigInt::from(1)
    }

    /// `|x|^2` as an exact nonnegative integer:
    /// `n^2 + d m^2` for `d = 1, 2 (mod 4)` and
    /// `n^2 - nm + m^2 (d+1)/4` for `d = 3 (mod 4)`.
    pub fn norm(&self) -> BigInt {
        let d = self.d.d();
        if self.d.is_three_mod_four() {
            let c = BigInt::from((d + 1) / 4);
            &self.n * &self.n - &self.n * &self.m + &self.m * &self.m * c
        } else {
            &self.n * &self.n + &self.m * &self.m * BigInt::from(d)
        }
    }

    /// Complex conjugate, again an element of `Z[omega]`.
    pub fn conj(&self) -> RingElement {
        if self.d.is_three_mod_four() {
            // conj(omega) = -1 - omega
            RingElement::new(self.d, &self.n - &self.m, -&self.m)
        } else {
            RingElement::new(self.d, self.n.clone(), -&self.m)
        }
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == BigInt::from(1)
    }

    /// Doubled embedding coordinates `(a, b)` with
    /// `embed(x) = (a + b*sqrt(d)*i) / 2`. Both are exact integers, so the
    /// real part never suffers cancellation when converted to floating point.
    pub fn doubled_coords(&self) -> (BigInt, BigInt) {
        if self.d.is_three_mod_four() {
            ((&self.n << 1) - &self.m, self.m.clone())
        } else {
            (&self.n << 1, &self.m << 1)
        }
    }

    /// Embedding into `C` with `omega = (-1 + i sqrt(d))/2` or `i sqrt(d)`.
    pub fn embed(&self) -> num_complex::Complex64 {
        let (a, b) = self.doubled_coords();
        num_complex::Complex64::new(
            big_to_f64(&a) * 0.5,
            big_to_f64(&b) * 0.5 * self.d.sqrt_d(),
        )
    }

    /// Dyadic-rational embedding `(re, im)` with absolute error at most
    /// `2^-frac_bits * (1 + |m|)` in the imaginary part; the real part is
    /// exact. Used by validation tests that need more than double precision.
    pub fn embed_dyadic(&self, frac_bits: u64) -> (BigRational, BigRational) {
        let (a, b) = self.doubled_coords();
        let re = BigRational::new(a, BigInt::from(2));
        // isqrt(d * 4^k) / 2^k approximates sqrt(d) from below.
        let k = frac_bits + 2;
        let scaled = BigInt::from(self.d.d()) << (2 * k);
        let root = scaled.sqrt();
        let im = BigRational::new(b * root, BigInt::from(1) << (k + 1));
        (re, im)
    }

    /// `|x|` via the integer norm; exact to f64 rounding for any size.
    pub fn abs(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            (0.5 * big_ln(&self.norm())).exp()
        }
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement(d={}, {} + {}w)", self.d.d(), self.n, self.m)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // For d = 1 the generator is the usual imaginary unit.
        let sym = if self.d == Discriminant::D1 { "i" } else { "w" };
        if self.m.is_zero() {
            return write!(f, "{}", self.n);
        }
        let coeff = if self.m.magnitude().to_u64() == Some(1) {
            String::new()
        } else {
            self.m.magnitude().to_string()
        };
        if self.n.is_zero() {
            if self.m.is_negative() {
                write!(f, "-{coeff}{sym}")
            } else {
                write!(f, "{coeff}{sym}")
            }
        } else if self.m.is_negative() {
            write!(f, "{}-{coeff}{sym}", self.n)
        } else {
            write!(f, "{}+{coeff}{sym}", self.n)
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<RingElement> for RingElement {
            type Output = RingElement;
            fn $method(self, rhs: RingElement) -> RingElement {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&RingElement> for RingElement {
            type Output = RingElement;
            fn $method(self, rhs: &RingElement) -> RingElement {
                (&self).$method(rhs)
            }
        }
        impl std::ops::$trait<RingElement> for &RingElement {
            type Output = RingElement;
            fn $method(self, rhs: RingElement) -> RingElement {
                self.$method(&rhs)
            }
        }
    };
}

impl std::ops::Add<&RingElement> for &RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        assert_eq!(self.d, rhs.d, "mixed discriminants");
        RingElement::new(self.d, &self.n + &rhs.n, &self.m + &rhs.m)
    }
}
forward_binop!(Add, add);

impl std::ops::Sub<&RingElement> for &RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        assert_eq!(self.d, rhs.d, "mixed discriminants");
        RingElement::new(self.d, &self.n - &rhs.n, &self.m - &rhs.m)
    }
}
forward_binop!(Sub, sub);

impl std::ops::Mul<&RingElement> for &RingElement {
    type Output = RingElement;
    fn mul(self, rhs: &RingElement) -> RingElement {
        assert_eq!(self.d, rhs.d, "mixed discriminants");
        let d = self.d.d();
        let nn = &self.n * &rhs.n;
        let mm = &self.m * &rhs.m;
        let cross = &self.n * &rhs.m + &self.m * &rhs.n;
        if self.d.is_three_mod_four() {
            // omega^2 = -omega - (d+1)/4
            let c = BigInt::from((d + 1) / 4);
            RingElement::new(self.d, nn - &mm * c, cross - mm)
        } else {
            // omega^2 = -d
            RingElement::new(self.d, nn - &mm * BigInt::from(d), cross)
        }
    }
}
forward_binop!(Mul, mul);

impl std::ops::Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        RingElement::new(self.d, -&self.n, -&self.m)
    }
}

impl std::ops::Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        -&self
    }
}

/// Exact division `x / y` assuming `y` divides `x` in `Z[omega]`.
/// Panics if the division is not exact.
pub fn div_exact(x: &RingElement, y: &RingElement) -> RingElement {
    let t = x * y.conj();
    let nn = y.norm();
    let (qn, rn) = t.n.div_rem(&nn);
    let (qm, rm) = t.m.div_rem(&nn);
    assert!(rn.is_zero() && rm.is_zero(), "inexact ring division");
    RingElement::new(x.disc(), qn, qm)
}

/// Greatest common divisor in `Z[omega]` via nearest-integer Euclidean
/// division; defined up to a unit.
pub fn gcd(a: &RingElement, b: &RingElement) -> RingElement {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let q = nearest_exact(&a, &b);
        let r = &a - &(&q * &b);
        a = b;
        b = r;
    }
    a
}

/// Nearest integer to `a / n` for `n > 0`, with ties rounded up.
fn round_div(a: &BigInt, n: &BigInt) -> BigInt {
    let num: BigInt = (a << 1) + n;
    num.div_floor(&(n << 1))
}

/// Nearest lattice point to `z` in the embedding of `Z[omega]`.
///
/// Rounds the coordinates of `z` in the basis `{1, omega}` and then compares
/// the 3x3 coordinate neighborhood exhaustively; this is correct for all five
/// lattices. Ties on the cell boundary are broken by minimizing
/// `(norm, n, m)` lexicographically.
pub fn nearest_lattice_point(z: num_complex::Complex64, d: Discriminant) -> RingElement {
    assert!(z.re.is_finite() && z.im.is_finite(), "nonfinite input");
    let (u, v) = if d.is_three_mod_four() {
        let v = 2.0 * z.im / d.sqrt_d();
        (z.re + 0.5 * v, v)
    } else {
        (z.re, z.im / d.sqrt_d())
    };
    let n0 = BigInt::from_f64(u.round()).expect("finite");
    let m0 = BigInt::from_f64(v.round()).expect("finite");
    let mut best: Option<(f64, RingElement)> = None;
    for dn in -1i64..=1 {
        for dm in -1i64..=1 {
            let cand = RingElement::new(d, &n0 + BigInt::from(dn), &m0 + BigInt::from(dm));
            let w = cand.embed();
            let dist = (z - w).norm_sqr();
            match &best {
                Some((bd, bc)) => {
                    if dist < *bd || (dist == *bd && tie_key_less(&cand, bc)) {
                        best = Some((dist, cand));
                    }
                }
                None => best = Some((dist, cand)),
            }
        }
    }
    best.expect("nonempty candidate set").1
}

/// Nearest lattice point to the exact ratio `num / den`, `den != 0`.
/// Entirely integer arithmetic; the tie rule matches the float version.
pub fn nearest_exact(num: &RingElement, den: &RingElement) -> RingElement {
    assert!(!den.is_zero(), "nearest_exact: zero denominator");
    let d = num.disc();
    let t = num * den.conj();
    let nn = den.norm();
    let n0 = round_div(&t.n, &nn);
    let m0 = round_div(&t.m, &nn);
    let mut best: Option<(BigInt, RingElement)> = None;
    for dn in -1i64..=1 {
        for dm in -1i64..=1 {
            let cand = RingElement::new(d, &n0 + BigInt::from(dn), &m0 + BigInt::from(dm));
            let score = (num - &(&cand * den)).norm();
            match &best {
                Some((bs, bc)) => {
                    if score < *bs || (score == *bs && tie_key_less(&cand, bc)) {
                        best = Some((score, cand));
                    }
                }
                None => best = Some((score, cand)),
            }
        }
    }
    best.expect("nonempty candidate set").1
}

/// `(norm(a), n, m) < (norm(b), n, m)` lexicographically.
fn tie_key_less(a: &RingElement, b: &RingElement) -> bool {
    (a.norm(), &a.n, &a.m) < (b.norm(), &b.n, &b.m)
}

/// An exact element of `Q(sqrt(-d))` as a quotient of ring elements.
///
/// `new` places the value in canonical form: numerator and denominator are
/// coprime (common divisors removed by Euclidean gcd, which bounds the
/// coordinate sizes by the input bit length) and the denominator is the
/// lexicographically largest among its unit multiples. Equality compares
/// cross products, so it is exact for canonical and non-canonical values
/// alike.
#[derive(Clone, Eq)]
pub struct FieldElement {
    num: RingElement,
    den: RingElement,
}

impl FieldElement {
    /// Canonical quotient `num / den`. Errors when `den == 0`.
    pub fn new(num: RingElement, den: RingElement) -> Result<Self, RingError> {
        Ok(FieldElement::new_unreduced(num, den)?.canonicalize())
    }

    /// Quotient without gcd reduction. Intended for very large Monte Carlo
    /// inputs where the Euclidean gcd would dominate the runtime; all
    /// consumers in this crate only depend on the ratio.
    pub fn new_unreduced(num: RingElement, den: RingElement) -> Result<Self, RingError> {
        assert_eq!(num.disc(), den.disc(), "mixed discriminants");
        if den.is_zero() {
            return Err(RingError::DivisionByZero(den.disc()));
        }
        Ok(FieldElement { num, den })
    }

    pub fn from_ring(x: RingElement) -> Self {
        let one = RingElement::one(x.disc());
        FieldElement { num: x, den: one }
    }

    pub fn zero(d: Discriminant) -> Self {
        FieldElement::from_ring(RingElement::zero(d))
    }

    pub fn disc(&self) -> Discriminant {
        self.num.disc()
    }

    pub fn num(&self) -> &RingElement {
        &self.num
    }

    pub fn den(&self) -> &RingElement {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Reduce to lowest terms and normalize the denominator by a unit.
    pub fn canonicalize(&self) -> Self {
        let g = gcd(&self.num, &self.den);
        let (mut num, mut den) = if g.is_unit() {
            (self.num.clone(), self.den.clone())
        } else {
            (div_exact(&self.num, &g), div_exact(&self.den, &g))
        };
        let mut best_key = (den.n.clone(), den.m.clone());
        let mut best_unit = RingElement::one(self.disc());
        for u in self.disc().units() {
            let cand = &den * &u;
            let key = (cand.n.clone(), cand.m.clone());
            if key > best_key {
                best_key = key;
                best_unit = u;
            }
        }
        if !best_unit.is_one() {
            num = &num * &best_unit;
            den = &den * &best_unit;
        }
        FieldElement { num, den }
    }

    pub fn is_canonical(&self) -> bool {
        let c = self.canonicalize();
        c.num == self.num && c.den == self.den
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let num = &self.num * &rhs.den + &rhs.num * &self.den;
        let den = &self.den * &rhs.den;
        FieldElement::new(num, den).expect("nonzero denominators")
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        FieldElement::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("nonzero denominators")
    }

    pub fn neg(&self) -> Self {
        FieldElement {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        FieldElement {
            num: self.num.conj(),
            den: self.den.conj(),
        }
    }

    pub fn invert(&self) -> Result<Self, RingError> {
        FieldElement::new(self.den.clone(), self.num.clone())
    }

    /// Add an integer translate: `self + q` for `q` in the ring.
    pub fn add_ring(&self, q: &RingElement) -> Self {
        FieldElement {
            num: &self.num + &(q * &self.den),
            den: self.den.clone(),
        }
    }

    /// `|x|^2` as an exact nonnegative rational.
    pub fn norm_rational(&self) -> BigRational {
        BigRational::new(self.num.norm(), self.den.norm())
    }

    pub fn embed(&self) -> num_complex::Complex64 {
        ratio_to_c64(&self.num, &self.den)
    }

    /// `|x|` via integer norms; stable for coordinates of any size.
    pub fn abs(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            (0.5 * (big_ln(&self.num.norm()) - big_ln(&self.den.norm()))).exp()
        }
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.disc() == other.disc() && &self.num * &other.den == &other.num * &self.den
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/({:?})", self.num, self.den)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

// ---------------------------------------------------------------------------
// Floating-point views of big integers.
// ---------------------------------------------------------------------------

/// `x` as `(mantissa, exponent)` with `x ~ mantissa * 2^exponent` and the
/// mantissa holding the top <= 128 bits. O(1) regardless of the size of `x`.
pub fn big_to_f64_exp(x: &BigInt) -> (f64, i64) {
    if x.is_zero() {
        return (0.0, 0);
    }
    let digits = x.magnitude().iter_u64_digits();
    let len = digits.len();
    let mut it = digits.rev();
    let hi = it.next().unwrap_or(0);
    let lo = it.next().unwrap_or(0);
    let mant = if len >= 2 {
        (hi as f64) * 1.8446744073709552e19 + lo as f64
    } else {
        hi as f64
    };
    let exp = 64 * (len.saturating_sub(2) as i64);
    let signed = if x.sign() == Sign::Minus { -mant } else { mant };
    (signed, exp)
}

/// `x` as an `f64`, saturating to infinity outside the exponent range.
pub fn big_to_f64(x: &BigInt) -> f64 {
    let (m, e) = big_to_f64_exp(x);
    if e == 0 {
        m
    } else {
        m * 2.0f64.powi(e.clamp(-2000, 2000) as i32)
    }
}

/// Natural logarithm of `|x|` for nonzero `x`, accurate to f64 rounding for
/// integers of any size.
pub fn big_ln(x: &BigInt) -> f64 {
    let (m, e) = big_to_f64_exp(x);
    m.abs().ln() + (e as f64) * std::f64::consts::LN_2
}

/// Ratio `x / y` as an `f64` through the shared-exponent mantissas.
pub fn big_ratio_f64(x: &BigInt, y: &BigInt) -> f64 {
    let (mx, ex) = big_to_f64_exp(x);
    let (my, ey) = big_to_f64_exp(y);
    (mx / my) * 2.0f64.powi((ex - ey).clamp(-2000, 2000) as i32)
}

/// Embedding of `x` as `c * 2^e`, allocation-free.
///
/// The coordinates enter as truncated 128-bit mantissas, so the relative
/// error with respect to `|embed(x)|` stays at the f64 rounding level even
/// when the real part `n - m/2` cancels: the imaginary part is a single
/// coordinate and then dominates the modulus.
pub fn embed_parts(x: &RingElement) -> (num_complex::Complex64, i64) {
    let (mn, en) = big_to_f64_exp(&x.n);
    let (mm, em) = big_to_f64_exp(&x.m);
    let e = en.max(em);
    let nf = mn * 2.0f64.powi((en - e).max(-2000) as i32);
    let mf = mm * 2.0f64.powi((em - e).max(-2000) as i32);
    let sd = x.d.sqrt_d();
    let c = if x.d.is_three_mod_four() {
        num_complex::Complex64::new(nf - 0.5 * mf, 0.5 * mf * sd)
    } else {
        num_complex::Complex64::new(nf, mf * sd)
    };
    (c, e)
}

/// Embedded ratio `num / den` as `c * 2^exp`. The mantissa magnitudes are
/// within `2^+-129` of 1, so `|num/den|` is recovered as
/// `log2|c| + exp` without overflow for coordinates of any size.
pub fn ratio_parts(num: &RingElement, den: &RingElement) -> (num_complex::Complex64, i64) {
    assert!(!den.is_zero(), "ratio of ring elements with zero denominator");
    let (a, ea) = embed_parts(num);
    let (b, eb) = embed_parts(den);
    (a / b, ea - eb)
}

/// Embedded ratio `num / den` as a plain `f64` complex number.
pub fn ratio_to_c64(num: &RingElement, den: &RingElement) -> num_complex::Complex64 {
    let (c, e) = ratio_parts(num, den);
    c * 2.0f64.powi(e.clamp(-2000, 2000) as i32)
}

/// Per-discriminant geometry of the Voronoi-relevant neighbors:
/// `(embed(lambda), |lambda|, |lambda|^2 / 2)`.
pub fn neighbor_geometry(d: Discriminant) -> &'static [(num_complex::Complex64, f64, f64)] {
    static CACHE: std::sync::OnceLock<[Vec<(num_complex::Complex64, f64, f64)>; 5]> =
        std::sync::OnceLock::new();
    let all = CACHE.get_or_init(|| {
        let mut out: [Vec<(num_complex::Complex64, f64, f64)>; 5] = Default::default();
        for (i, d) in Discriminant::ALL.iter().enumerate() {
            out[i] = d
                .neighbors()
                .iter()
                .map(|lam| {
                    let l = lam.embed();
                    let n = l.norm();
                    (l, n, 0.5 * n * n)
                })
                .collect();
        }
        out
    });
    let idx = Discriminant::ALL.iter().position(|&x| x == d).unwrap();
    &all[idx]
}

/// Margin (in units of `1 + |w|`) that a floating shadow point must clear
/// inside its proposed Voronoi cell for the proposal to be provably the exact
/// nearest point; the shadow error itself is below `1e-14 (1 + |w|)`.
const SHADOW_MARGIN: f64 = 1e-11;

/// Nearest lattice point to the exact ratio `num / den` through a floating
/// shadow with a rigorous acceptance margin; falls back to the all-integer
/// path when the shadow cannot certify its proposal. The boolean reports
/// whether the fallback ran. The result always equals `nearest_exact`.
pub fn nearest_checked(num: &RingElement, den: &RingElement) -> (RingElement, bool) {
    let d = num.disc();
    let (c, e) = ratio_parts(num, den);
    if c.re.is_finite() && c.im.is_finite() && c.norm() > 0.0 {
        let log2w = c.norm().log2() + e as f64;
        if log2w <= 33.0 {
            let w = c * 2.0f64.powi(e.clamp(-2000, 2000) as i32);
            let a = nearest_lattice_point(w, d);
            let u = w - a.embed();
            let required = SHADOW_MARGIN * (1.0 + w.norm());
            let certified = neighbor_geometry(d)
                .iter()
                .all(|&(l, ln, half)| (half - (u * l.conj()).re) / ln > required);
            if certified {
                return (a, false);
            }
        }
    }
    (nearest_exact(num, den), true)
}

/// Uniformly random `BigInt` with the given number of bits (top bit not
/// forced) and random sign, drawn from the rng byte stream.
pub fn random_bigint(bits: u64, rng: &mut impl rand::Rng) -> BigInt {
    let nbytes = bits.div_ceil(8) as usize;
    let mut bytes = vec![0u8; nbytes];
    rng.fill_bytes(&mut bytes);
    let excess = (8 * nbytes as u64 - bits) as u8;
    if excess > 0 {
        bytes[nbytes - 1] &= 0xffu8 >> excess;
    }
    let sign = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
    let mag = num_bigint::BigUint::from_bytes_le(&bytes);
    if mag.is_zero() {
        BigInt::zero()
    } else {
        BigInt::from_biguint(sign, mag)
    }
}

/// Random ring element with `bits`-bit coordinates.
pub fn random_ring_element(d: Discriminant, bits: u64, rng: &mut impl rand::Rng) -> RingElement {
    RingElement::new(d, random_bigint(bits, rng), random_bigint(bits, rng))
}
