//! The nearest-integer `Z[omega]`-continued fraction algorithm.
//!
//! A point `beta` in the closed fundamental cell `K_d` expands as
//! `beta = [0; a_1, a_2, ...]` where each digit is the nearest lattice point
//! to the reciprocal of the current tail and the Gauss map
//! `G(z) = 1/z - <1/z>_d` produces the next tail. Expansions of exact field
//! elements are computed with exact integer arithmetic throughout; a
//! floating-point shadow is used only to *propose* digits, and every proposal
//! is accepted only when a rigorous error margin certifies it, falling back
//! to exact rounding otherwise.

use crate::ring::{
    big_ln, nearest_checked, nearest_exact, nearest_lattice_point, ratio_to_c64, Discriminant,
    FieldElement, RingElement,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Errors from expansion and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfracError {
    #[error("input lies outside the closed fundamental cell K_{0}")]
    OutsideCell(Discriminant),
    #[error("zero intermediate denominator at digit index {0}")]
    ZeroIntermediate(usize),
    #[error("digit string is inadmissible at index {0}: tail leaves the closed cell")]
    InadmissibleDigit(usize),
    #[error("approximation defect is degenerate at the terminal convergent")]
    TerminalConvergent,
    #[error("operation requires stored exact iterates")]
    NeedIterates,
    #[error("index {0} out of range")]
    OutOfRange(usize),
}

/// The Dirichlet fundamental cell `K_d` of the lattice `Z[omega]` centred at
/// the origin: the set of points strictly closer to 0 than to any other
/// lattice point.
#[derive(Clone, Copy, Debug)]
pub struct FundamentalCell {
    d: Discriminant,
}

impl FundamentalCell {
    pub fn new(d: Discriminant) -> Self {
        FundamentalCell { d }
    }

    pub fn disc(&self) -> Discriminant {
        self.d
    }

    /// Signed Euclidean distance from `z` to the boundary of `K_d`:
    /// positive inside the open cell, negative outside the closure.
    pub fn boundary_margin(&self, z: Complex64) -> f64 {
        let mut margin = f64::INFINITY;
        for lam in self.d.neighbors() {
            let l = lam.embed();
            let ln = l.norm();
            let dist = (0.5 * ln * ln - (z * l.conj()).re) / ln;
            margin = margin.min(dist);
        }
        margin
    }

    /// Strict membership, i.e. the defining inequalities of `K_d` hold
    /// strictly.
    pub fn contains(&self, z: Complex64) -> bool {
        self.boundary_margin(z) > 0.0
    }

    /// Membership in the closed cell up to a tolerance.
    pub fn contains_closure(&self, z: Complex64, tol: f64) -> bool {
        self.boundary_margin(z) >= -tol
    }

    /// Exact membership for field elements. With `strict` the open cell is
    /// tested, otherwise the closure. Entirely integer comparisons.
    pub fn contains_exact(&self, x: &FieldElement, strict: bool) -> bool {
        let base = x.num().norm();
        for lam in self.d.neighbors() {
            let shifted = (x.num() - &(&lam * x.den())).norm();
            let ok = if strict { base < shifted } else { base <= shifted };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Strict membership of `z` in the open cell `K_d`.
pub fn in_cell(z: Complex64, d: Discriminant) -> bool {
    FundamentalCell::new(d).contains(z)
}

/// One exact Gauss step: `z != 0` maps to the digit `<1/z>_d` and the next
/// tail `1/z - digit`, both exact. Returns `None` at `z = 0` (the expansion
/// of a field element terminates there).
///
/// The result is in lowest terms whenever the input is; unit normalization is
/// not applied, which keeps repeated stepping cheap.
pub fn gauss_step(z: &FieldElement) -> Option<(RingElement, FieldElement)> {
    if z.is_zero() {
        return None;
    }
    let digit = nearest_exact(z.den(), z.num());
    let next_num = z.den() - &(&digit * z.num());
    let next = FieldElement::new_unreduced(next_num, z.num().clone()).expect("z nonzero");
    Some((digit, next))
}

/// One floating-point Gauss step. Returns `None` when `|z|` is too small to
/// invert meaningfully (treated as a terminated expansion).
pub fn gauss_step_f64(z: Complex64, d: Discriminant) -> Option<(RingElement, Complex64)> {
    if z.norm() < 1e-18 {
        return None;
    }
    let w = z.inv();
    let digit = nearest_lattice_point(w, d);
    let next = w - digit.embed();
    Some((digit, next))
}

/// Exact digit stream of a field element, maintained as the reduced pair
/// `(num, den)` with tail value `num/den`.
///
/// Each step proposes the digit from a floating shadow of `den/num` and
/// accepts it only if the shadow point clears the proposed Voronoi cell's
/// boundary by more than a rigorous bound on the shadow error; otherwise the
/// digit is recomputed with exact integer rounding. Digits are therefore
/// always exact. The tail coordinates shrink as the orbit progresses, so a
/// `B`-bit input yields on the order of `B` digits before termination.
pub struct GaussOrbit {
    d: Discriminant,
    num: RingElement,
    den: RingElement,
    steps: u64,
    exact_fallbacks: u64,
}

impl GaussOrbit {
    pub fn new(beta: &FieldElement) -> Self {
        GaussOrbit {
            d: beta.disc(),
            num: beta.num().clone(),
            den: beta.den().clone(),
            steps: 0,
            exact_fallbacks: 0,
        }
    }

    pub fn disc(&self) -> Discriminant {
        self.d
    }

    /// Number of digits produced so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// How many digits required the exact fallback path.
    pub fn exact_fallbacks(&self) -> u64 {
        self.exact_fallbacks
    }

    pub fn terminated(&self) -> bool {
        self.num.is_zero()
    }

    /// Current tail `G^steps(beta)` as an exact pair `(num, den)`.
    pub fn tail_pair(&self) -> (&RingElement, &RingElement) {
        (&self.num, &self.den)
    }

    /// Current tail as a field element (lowest terms, not unit-normalized).
    pub fn tail_field(&self) -> FieldElement {
        FieldElement::new_unreduced(self.num.clone(), self.den.clone()).expect("den nonzero")
    }

    /// Current tail embedded in `C`.
    pub fn tail_c64(&self) -> Complex64 {
        if self.num.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            ratio_to_c64(&self.num, &self.den)
        }
    }

    /// Remaining bit budget: the orbit terminates once this reaches zero.
    pub fn tail_bits(&self) -> u64 {
        self.num.n().bits().max(self.num.m().bits())
    }
}

impl Iterator for GaussOrbit {
    type Item = RingElement;

    fn next(&mut self) -> Option<RingElement> {
        if self.num.is_zero() {
            return None;
        }
        // w = 1/z = den/num
        let (digit, fellback) = nearest_checked(&self.den, &self.num);
        if fellback {
            self.exact_fallbacks += 1;
        }
        let next_num = &self.den - &(&digit * &self.num);
        self.den = std::mem::replace(&mut self.num, next_num);
        self.steps += 1;
        Some(digit)
    }
}

/// The exact value behind an expansion.
#[derive(Clone, Debug)]
pub enum Beta {
    Exact(FieldElement),
    Float(Complex64),
}

/// Options for [`Expansion::expand`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpandOptions {
    /// Store every iterate `G^n(beta)` (needed by the approximation defect).
    pub store_iterates: bool,
}

/// Digits `a_1..a_N` of a point of the closed cell together with the exact
/// convergent pairs `(p_n, q_n)`.
///
/// Index 0 of the convergent vectors holds `(p_0, q_0) = (0, 1)`; digit `a_n`
/// lives at `digits[n-1]` and pairs with `(p[n], q[n])`.
#[derive(Debug)]
pub struct Expansion {
    d: Discriminant,
    beta: Beta,
    digits: Vec<RingElement>,
    p: Vec<RingElement>,
    q: Vec<RingElement>,
    terminated: bool,
    iterates: Option<Vec<FieldElement>>,
    precision_loss: Option<usize>,
    exact_fallbacks: u64,
}

impl Expansion {
    /// Exact expansion of `beta` to at most `n_max` digits.
    pub fn expand(beta: &FieldElement, n_max: usize, opts: ExpandOptions) -> Result<Self, CfracError> {
        let d = beta.disc();
        let cell = FundamentalCell::new(d);
        if !cell.contains_exact(beta, false) {
            return Err(CfracError::OutsideCell(d));
        }
        let mut orbit = GaussOrbit::new(beta);
        let mut exp = Expansion {
            d,
            beta: Beta::Exact(beta.clone()),
            digits: Vec::new(),
            p: vec![RingElement::zero(d)],
            q: vec![RingElement::one(d)],
            terminated: false,
            iterates: if opts.store_iterates {
                Some(vec![beta.clone()])
            } else {
                None
            },
            precision_loss: None,
            exact_fallbacks: 0,
        };
        let mut p_prev = RingElement::one(d); // p_{-1}
        let mut q_prev = RingElement::zero(d); // q_{-1}
        for _ in 0..n_max {
            match orbit.next() {
                Some(a) => {
                    let p_new = &a * exp.p.last().unwrap() + &p_prev;
                    let q_new = &a * exp.q.last().unwrap() + &q_prev;
                    p_prev = exp.p.last().unwrap().clone();
                    q_prev = exp.q.last().unwrap().clone();
                    exp.p.push(p_new);
                    exp.q.push(q_new);
                    exp.digits.push(a);
                    if let Some(its) = &mut exp.iterates {
                        its.push(orbit.tail_field());
                    }
                }
                None => {
                    exp.terminated = true;
                    break;
                }
            }
        }
        if orbit.terminated() {
            exp.terminated = true;
        }
        exp.exact_fallbacks = orbit.exact_fallbacks();
        Ok(exp)
    }

    /// Floating-point expansion of `z` to at most `n_max` digits. Digit loss
    /// of precision is detected by the tail leaving the closed cell by more
    /// than `1e-9` and is reported, not hidden.
    pub fn expand_f64(z: Complex64, d: Discriminant, n_max: usize) -> Result<Self, CfracError> {
        let cell = FundamentalCell::new(d);
        if !cell.contains_closure(z, 1e-9) {
            return Err(CfracError::OutsideCell(d));
        }
        let mut exp = Expansion {
            d,
            beta: Beta::Float(z),
            digits: Vec::new(),
            p: vec![RingElement::zero(d)],
            q: vec![RingElement::one(d)],
            terminated: false,
            iterates: None,
            precision_loss: None,
            exact_fallbacks: 0,
        };
        let mut p_prev = RingElement::one(d);
        let mut q_prev = RingElement::zero(d);
        let mut cur = z;
        for n in 1..=n_max {
            match gauss_step_f64(cur, d) {
                Some((a, next)) => {
                    if exp.precision_loss.is_none() && !cell.contains_closure(next, 1e-9) {
                        exp.precision_loss = Some(n);
                    }
                    let p_new = &a * exp.p.last().unwrap() + &p_prev;
                    let q_new = &a * exp.q.last().unwrap() + &q_prev;
                    p_prev = exp.p.last().unwrap().clone();
                    q_prev = exp.q.last().unwrap().clone();
                    exp.p.push(p_new);
                    exp.q.push(q_new);
                    exp.digits.push(a);
                    cur = next;
                }
                None => {
                    exp.terminated = true;
                    break;
                }
            }
        }
        Ok(exp)
    }

    pub fn disc(&self) -> Discriminant {
        self.d
    }

    pub fn beta(&self) -> &Beta {
        &self.beta
    }

    pub fn beta_exact(&self) -> Option<&FieldElement> {
        match &self.beta {
            Beta::Exact(b) => Some(b),
            Beta::Float(_) => None,
        }
    }

    /// Number of digits computed.
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[RingElement] {
        &self.digits
    }

    /// Digit `a_n`, 1-based.
    pub fn digit(&self, n: usize) -> &RingElement {
        &self.digits[n - 1]
    }

    /// Convergent numerator `p_n` for `0 <= n <= len`.
    pub fn p(&self, n: usize) -> &RingElement {
        &self.p[n]
    }

    /// Convergent denominator `q_n` for `0 <= n <= len`.
    pub fn q(&self, n: usize) -> &RingElement {
        &self.q[n]
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// First float-mode digit index where the tail left the closed cell by
    /// more than the documented tolerance, if any.
    pub fn precision_loss(&self) -> Option<usize> {
        self.precision_loss
    }

    pub fn exact_fallbacks(&self) -> u64 {
        self.exact_fallbacks
    }

    /// Stored iterate `G^n(beta)` (exact mode with `store_iterates` only).
    pub fn iterate(&self, n: usize) -> Result<&FieldElement, CfracError> {
        let its = self.iterates.as_ref().ok_or(CfracError::NeedIterates)?;
        its.get(n).ok_or(CfracError::OutOfRange(n))
    }
}

/// Exact value of `[0; a_1, ..., a_n]` by the backward recurrence.
///
/// Admissibility is checked, not assumed: every tail `[0; a_k, ..., a_n]`
/// must lie in the closed cell. Zero intermediate denominators are reported
/// with the offending index.
pub fn evaluate(digits: &[RingElement], d: Discriminant) -> Result<FieldElement, CfracError> {
    let cell = FundamentalCell::new(d);
    let mut tail = FieldElement::zero(d);
    for (k, a) in digits.iter().enumerate().rev() {
        // the backward recurrence preserves lowest terms, so the swap-invert
        // skips the gcd of the canonicalizing constructor
        let s = tail.add_ring(a);
        if s.is_zero() {
            return Err(CfracError::ZeroIntermediate(k + 1));
        }
        tail = FieldElement::new_unreduced(s.den().clone(), s.num().clone()).expect("nonzero");
        if !cell.contains_exact(&tail, false) {
            return Err(CfracError::InadmissibleDigit(k + 1));
        }
    }
    Ok(tail)
}

/// Exact value of `[a_1; a_2, ..., a_n]`, i.e. the continued fraction whose
/// integer part is the first digit. No cell-membership constraint is imposed;
/// this is the form that appears in the reversed-digit identity
/// `q_n / q_{n-1} = [a_n; a_{n-1}, ..., a_1]`.
pub fn evaluate_leading(digits: &[RingElement], d: Discriminant) -> Result<FieldElement, CfracError> {
    let mut tail = FieldElement::zero(d);
    for (k, a) in digits.iter().enumerate().skip(1).rev() {
        let s = tail.add_ring(a);
        if s.is_zero() {
            return Err(CfracError::ZeroIntermediate(k + 1));
        }
        tail = FieldElement::new_unreduced(s.den().clone(), s.num().clone()).expect("nonzero");
    }
    match digits.first() {
        Some(a0) => Ok(tail.add_ring(a0)),
        None => Ok(tail),
    }
}

/// The exact quality-of-approximation product
/// `norm(q_n) * norm(beta q_n - p_n) * norm(G^{n+1}(beta) + q_{n+1}/q_n)`.
///
/// For every non-terminal index this equals 1 exactly. At the terminal
/// convergent (`beta = p_n/q_n`) the product degenerates to `0 * infinity`
/// and an error is returned instead.
pub fn approximation_defect(exp: &Expansion, n: usize) -> Result<BigRational, CfracError> {
    let beta = exp.beta_exact().ok_or(CfracError::NeedIterates)?;
    if n > exp.len() {
        return Err(CfracError::OutOfRange(n));
    }
    // A = beta_num q_n - p_n beta_den     (zero exactly at the terminal n)
    let a = beta.num() * exp.q(n) - exp.p(n) * beta.den();
    if a.is_zero() {
        return Err(CfracError::TerminalConvergent);
    }
    if n + 1 > exp.len() {
        return Err(CfracError::OutOfRange(n));
    }
    let it = exp.iterate(n + 1)?;
    // B = it_num q_n + q_{n+1} it_den
    let b = it.num() * exp.q(n) + exp.q(n + 1) * it.den();
    // norm(q_n) cancels against the denominator of the third factor.
    let num = a.norm() * b.norm();
    let den = beta.den().norm() * it.den().norm();
    Ok(BigRational::new(num, den))
}

/// Result of comparing float-mode digits against the exact digits of the
/// same point.
#[derive(Clone, Copy, Debug)]
pub struct FloatAgreement {
    /// Index of the first disagreeing digit (1-based), or `None` when all
    /// compared digits agree.
    pub first_mismatch: Option<usize>,
    /// Number of digits compared.
    pub compared: usize,
}

/// Compare the float-mode expansion of `embed(beta)` with the exact one.
pub fn float_exact_agreement(beta: &FieldElement, n: usize) -> Result<FloatAgreement, CfracError> {
    let exact = Expansion::expand(beta, n, ExpandOptions::default())?;
    let float = Expansion::expand_f64(beta.embed(), beta.disc(), n)?;
    let compared = exact.len().min(float.len());
    let first_mismatch = (0..compared)
        .find(|&k| exact.digits()[k] != float.digits()[k])
        .map(|k| k + 1);
    Ok(FloatAgreement {
        first_mismatch,
        compared,
    })
}

/// `(-1)^n` as a ring element.
pub fn sign_element(d: Discriminant, n: usize) -> RingElement {
    if n % 2 == 0 {
        RingElement::one(d)
    } else {
        -RingElement::one(d)
    }
}

/// Check Eq.-style determinant identity `p_{n-1} q_n - p_n q_{n-1} = (-1)^n`
/// exactly for one index.
pub fn determinant_identity_holds(exp: &Expansion, n: usize) -> bool {
    if n < 1 || n > exp.len() {
        return false;
    }
    let lhs = exp.p(n - 1) * exp.q(n) - exp.p(n) * exp.q(n - 1);
    lhs == sign_element(exp.disc(), n)
}

/// The multiplicative Gauss-map identity in its sign-corrected orientation:
/// `norm(q_n beta - p_n) = prod_{k=0}^{n} norm(G^k(beta))`, verified exactly.
/// Returns the two sides as rationals.
pub fn gauss_product_identity(
    exp: &Expansion,
    n: usize,
) -> Result<(BigRational, BigRational), CfracError> {
    let beta = exp.beta_exact().ok_or(CfracError::NeedIterates)?;
    if n > exp.len() {
        return Err(CfracError::OutOfRange(n));
    }
    let lhs_num = (beta.num() * exp.q(n) - exp.p(n) * beta.den()).norm();
    let lhs = BigRational::new(lhs_num, beta.den().norm());
    let mut rhs = BigRational::one();
    for k in 0..=n {
        let it = exp.iterate(k)?;
        if it.den().norm().is_zero() {
            return Err(CfracError::OutOfRange(k));
        }
        rhs *= BigRational::new(it.num().norm(), it.den().norm());
    }
    Ok((lhs, rhs))
}

/// Natural log of `|q_n|` from the exact integer norm.
pub fn log_abs(q: &RingElement) -> f64 {
    0.5 * big_ln(&q.norm())
}

/// Parse helper: the bit length of the larger coordinate of `x`.
pub fn coord_bits(x: &RingElement) -> u64 {
    x.n().bits().max(x.m().bits())
}

/// Exact comparison `norm(q_{n-1}) < norm(q_n)` via integers.
pub fn norm_strictly_grows(exp: &Expansion, n: usize) -> bool {
    exp.q(n - 1).norm() < exp.q(n).norm()
}

/// Convenience: `q_n` norms as `BigInt` for external growth estimators.
pub fn q_norm(exp: &Expansion, n: usize) -> BigInt {
    exp.q(n).norm()
}
