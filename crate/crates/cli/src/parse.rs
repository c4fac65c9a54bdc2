//! Parsing of complex input points.
//!
//! `--z` accepts `x`, `yi`, `x+yi`, `x-yi` where each component is either a
//! rational `p/q` (exact mode) or a decimal (floating mode). The symbol `i`
//! stands for `sqrt(-d)`, so rational inputs are exact elements of
//! `Q(sqrt(-d))` for every discriminant; `w` is also accepted for the ring
//! generator omega itself in digit strings.

use bianchi_cf::ring::{Discriminant, FieldElement, RingElement};
use num_bigint::BigInt;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedPoint {
    Exact(FieldElement),
    Float(Complex64),
}

fn split_top_level(s: &str) -> (String, String) {
    // split "a+bi" / "a-bi" at the sign that separates the two components;
    // the first character may itself be a sign
    let chars: Vec<char> = s.chars().collect();
    for k in (1..chars.len()).rev() {
        if (chars[k] == '+' || chars[k] == '-') && chars[k - 1] != '/' && chars[k - 1] != 'e' {
            let (a, b) = s.split_at(k);
            return (a.to_string(), b.to_string());
        }
    }
    (s.to_string(), String::new())
}

fn parse_rational(s: &str) -> Option<(BigInt, BigInt)> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.parse().ok()?;
            let q: BigInt = q.parse().ok()?;
            if q == BigInt::from(0) {
                None
            } else {
                Some((p, q))
            }
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some((p, BigInt::from(1)))
        }
    }
}

/// Parse `--z`. Rational components give the exact field element
/// `x + y sqrt(-d)`; decimal components give a float point.
pub fn parse_point(s: &str, d: Discriminant) -> Result<ParsedPoint, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty input".into());
    }
    let (re_str, im_str) = if let Some(stripped) = s.strip_suffix('i') {
        let (a, b) = split_top_level(stripped);
        if b.is_empty() {
            (String::new(), a)
        } else {
            (a, b)
        }
    } else {
        (s.clone(), String::new())
    };
    let norm_component = |c: &str| -> String {
        match c {
            "" => "0".into(),
            "+" => "1".into(),
            "-" => "-1".into(),
            other => other.into(),
        }
    };
    let re_str = norm_component(&re_str);
    let im_str = norm_component(&im_str);
    let exact = (parse_rational(&re_str), parse_rational(&im_str));
    if let (Some((p1, q1)), Some((p2, q2))) = exact {
        // x + y sqrt(-d) with x = p1/q1, y = p2/q2 over the common
        // denominator q1*q2
        let a = &p1 * &q2; // numerator of x
        let b = &p2 * &q1; // numerator of y
        let den = &q1 * &q2;
        let num = if d.is_three_mod_four() {
            // sqrt(-d) = 1 + 2 omega
            RingElement::new(d, &a + &b, &b * BigInt::from(2))
        } else {
            RingElement::new(d, a, b)
        };
        let den = RingElement::new(d, den, BigInt::from(0));
        return FieldElement::new(num, den)
            .map(ParsedPoint::Exact)
            .map_err(|e| e.to_string());
    }
    let re: f64 = re_str
        .parse()
        .map_err(|_| format!("cannot parse real part {re_str:?}"))?;
    let im: f64 = im_str
        .parse()
        .map_err(|_| format!("cannot parse imaginary part {im_str:?}"))?;
    Ok(ParsedPoint::Float(Complex64::new(
        re,
        im * d.sqrt_d(),
    )))
}
