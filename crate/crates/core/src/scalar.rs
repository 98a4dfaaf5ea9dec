//! Exact scalars: big rationals, geometric point families and eventual-sign
//! analysis of geometric sequences.
//!
//! Every coordinate handled by this crate is a [`Rational`]. Countably infinite
//! partitions are described by [`GeometricFamily`] values `alpha + beta * rho^n`,
//! and comparisons "for every index `n >= start`" between two such sequences are
//! decided exactly by [`sign_profile`].

use std::cmp::Ordering;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `n / d` as a rational. Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. Whitespace around the literal is ignored.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() || t.contains(char::is_whitespace) {
        return Err(Error::BadRational(s.to_string()));
    }
    BigRational::from_str(t).map_err(|_| Error::BadRational(s.to_string()))
}

/// Canonical `"p/q"` text (integers print without a denominator).
pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rational_compare(a: &Rational, b: &Rational) -> Ordering {
    a.cmp(b)
}

/// `base^exp` for any integer exponent; `base` must be nonzero when `exp < 0`.
pub fn pow(base: &Rational, exp: i64) -> Rational {
    let e = i32::try_from(exp).expect("exponent out of range");
    num_traits::Pow::pow(base, e)
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Side from which a point is approached: `Up` is `t ↑ a`, `Down` is `t ↓ a`.
///
/// A family accumulating from below is an `Up` tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Up,
    Down,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Up => "up",
            Side::Down => "down",
        }
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Side::Up),
            "down" => Ok(Side::Down),
            _ => Err(Error::doc("side", format!("expected `up` or `down`, got `{s}`"))),
        }
    }
}

/// The point set `{alpha + beta * rho^n : n >= n0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricFamily {
    pub alpha: Rational,
    pub beta: Rational,
    pub rho: Rational,
    pub n0: i64,
}

impl GeometricFamily {
    pub fn new(alpha: Rational, beta: Rational, rho: Rational, n0: i64) -> Result<Self> {
        if beta.is_zero() {
            return Err(Error::InvalidFamily("beta must be nonzero".into()));
        }
        if !(rho.is_positive() && rho < Rational::one()) {
            return Err(Error::InvalidFamily(format!("rho = {rho} is not in (0, 1)")));
        }
        if n0 < 1 {
            return Err(Error::InvalidFamily(format!("n0 = {n0} is not positive")));
        }
        Ok(GeometricFamily { alpha, beta, rho, n0 })
    }

    pub fn family_value(&self, n: i64) -> Result<Rational> {
        if n < self.n0 {
            return Err(Error::IndexBelowRange { index: n, first: self.n0 });
        }
        Ok(self.value_unchecked(n))
    }

    pub(crate) fn value_unchecked(&self, n: i64) -> Rational {
        &self.alpha + &self.beta * pow(&self.rho, n)
    }

    pub fn family_limit(&self) -> &Rational {
        &self.alpha
    }

    /// `Up` when members increase towards the limit.
    pub fn side(&self) -> Side {
        if self.beta.is_negative() {
            Side::Up
        } else {
            Side::Down
        }
    }

    /// Distance of member `n` from the limit.
    pub fn offset(&self, n: i64) -> Rational {
        self.beta.abs() * pow(&self.rho, n)
    }

    /// Solves `alpha + beta * rho^n = v` for an integer `n >= n0`.
    pub fn index_of(&self, v: &Rational) -> Option<i64> {
        let r = (v - &self.alpha) / &self.beta;
        if !r.is_positive() {
            return None;
        }
        let mut n = self.n0;
        let mut p = pow(&self.rho, n);
        while p > r {
            p *= &self.rho;
            n += 1;
        }
        (p == r).then_some(n)
    }

    /// Member `n + shift` as a sequence in `n`.
    pub fn term(&self, shift: i64) -> GeoTerm {
        GeoTerm {
            limit: self.alpha.clone(),
            coeff: &self.beta * pow(&self.rho, shift),
            ratio: self.rho.clone(),
        }
    }
}

/// The sequence `n ↦ limit + coeff * ratio^n` (a constant when `coeff == 0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoTerm {
    pub limit: Rational,
    pub coeff: Rational,
    pub ratio: Rational,
}

impl GeoTerm {
    pub fn constant(v: Rational) -> Self {
        GeoTerm {
            limit: v,
            coeff: Rational::zero(),
            ratio: q(1, 2),
        }
    }

    pub fn at(&self, n: i64) -> Rational {
        if self.coeff.is_zero() {
            self.limit.clone()
        } else {
            &self.limit + &self.coeff * pow(&self.ratio, n)
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// The orderings of `p(n)` against `q(n)` for every `n >= start`: the listed
/// `head` for the first indices, then `tail` forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignProfile {
    pub start: i64,
    pub head: Vec<Ordering>,
    pub tail: Ordering,
}

impl SignProfile {
    /// First index whose ordering fails `ok`.
    pub fn first_failure(&self, ok: impl Fn(Ordering) -> bool) -> Option<i64> {
        if let Some(i) = self.head.iter().position(|&o| !ok(o)) {
            return Some(self.start + i as i64);
        }
        (!ok(self.tail)).then(|| self.start + self.head.len() as i64)
    }

    pub fn always(&self, ok: impl Fn(Ordering) -> bool) -> bool {
        self.first_failure(ok).is_none()
    }
}

/// Smallest `n >= start` with `bound(n) < target`, where `bound(n) = a * r^n`
/// with `0 < r < 1` and `a >= 0`.
fn decay_below(a: &Rational, r: &Rational, target: &Rational, start: i64) -> i64 {
    let mut n = start;
    let mut v = a * pow(r, start);
    while &v >= target {
        v *= r;
        n += 1;
    }
    n
}

/// Exact comparison of two geometric sequences for all `n >= start`.
pub fn sign_profile(p: &GeoTerm, q: &GeoTerm, start: i64) -> SignProfile {
    let delta = &p.limit - &q.limit;
    let (threshold, tail) = if !delta.is_zero() {
        // |D(n) - delta| <= |a| r1^n + |b| r2^n; both pieces decay separately.
        let half = delta.abs() / int(2);
        let t1 = if p.coeff.is_zero() {
            start
        } else {
            decay_below(&p.coeff.abs(), &p.ratio, &half, start)
        };
        let t2 = if q.coeff.is_zero() {
            start
        } else {
            decay_below(&q.coeff.abs(), &q.ratio, &half, start)
        };
        (t1.max(t2), delta.cmp(&Rational::zero()))
    } else {
        let (a, b) = (&p.coeff, &q.coeff);
        if a.is_zero() && b.is_zero() {
            (start, Ordering::Equal)
        } else if b.is_zero() {
            (start, a.cmp(&Rational::zero()))
        } else if a.is_zero() {
            (start, Rational::zero().cmp(b))
        } else if p.ratio == q.ratio {
            (start, a.cmp(b))
        } else if p.ratio > q.ratio {
            // D = r1^n (a - b (r2/r1)^n)
            let r = &q.ratio / &p.ratio;
            (decay_below(&b.abs(), &r, &a.abs(), start), a.cmp(&Rational::zero()))
        } else {
            let r = &p.ratio / &q.ratio;
            (decay_below(&a.abs(), &r, &b.abs(), start), Rational::zero().cmp(b))
        }
    };
    let head = (start..threshold).map(|n| p.at(n).cmp(&q.at(n))).collect();
    SignProfile { start, head, tail }
}

/// First `n >= start` at which the joint orderings fail `ok`. All profiles
/// must share the same `start`.
pub fn first_joint_failure(
    profiles: &[SignProfile],
    ok: impl Fn(&[Ordering]) -> bool,
) -> Option<i64> {
    let start = profiles.first()?.start;
    debug_assert!(profiles.iter().all(|p| p.start == start));
    let len = profiles.iter().map(|p| p.head.len()).max().unwrap_or(0);
    // index `len` stands for every n >= start + len
    for i in 0..=len {
        let row: Vec<Ordering> = profiles
            .iter()
            .map(|p| p.head.get(i).copied().unwrap_or(p.tail))
            .collect();
        if !ok(&row) {
            return Some(start + i as i64);
        }
    }
    None
}
