//! Exact real numbers `a + b·√d` with rational `a`, `b` and a square-free `d`.
//!
//! Every roof value, flow time and schedule offset lives in one such field,
//! so equality tests (is this return time *exactly* `q`?) and rational
//! independence tests are decided without floating point.
//!
//! Numbers with `b = 0` are plain rationals and combine with any field; the
//! stored radicand of a rational is normalized to `1`. Mixing two different
//! radicands panics in the operator impls; fallible callers use the
//! `try_*` methods.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticReal {
    a: BigRational,
    b: BigRational,
    d: u32,
}

fn is_square_free(d: u32) -> bool {
    if d < 2 {
        return false;
    }
    let mut p = 2u32;
    while p.saturating_mul(p) <= d {
        if d.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Parses `"n"`, `"-n"` or `"n/m"` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, m)) => {
            let den = parse_int(m)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl QuadraticReal {
    /// `a + b·√d`; `d` must be square-free and at least 2 unless `b = 0`.
    pub fn new(a: BigRational, b: BigRational, d: u32) -> Result<Self> {
        if b.is_zero() {
            return Ok(Self::rational(a));
        }
        if !is_square_free(d) {
            return Err(Error::Parse(format!("radicand {d} is not square-free")));
        }
        Ok(Self { a, b, d })
    }

    pub fn rational(a: BigRational) -> Self {
        Self {
            a,
            b: BigRational::zero(),
            d: 1,
        }
    }

    pub fn from_ratio(n: i64, m: i64) -> Self {
        Self::rational(BigRational::new(n.into(), m.into()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `√d` itself.
    pub fn sqrt(d: u32) -> Result<Self> {
        Self::new(BigRational::zero(), BigRational::one(), d)
    }

    /// `(a_num/a_den) + (b_num/b_den)·√d`, convenient for literals.
    pub fn from_parts(a: (i64, i64), b: (i64, i64), d: u32) -> Result<Self> {
        Self::new(
            BigRational::new(a.0.into(), a.1.into()),
            BigRational::new(b.0.into(), b.1.into()),
            d,
        )
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.b
    }

    /// Radicand of the field; `1` for rationals.
    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn field_with(&self, other: &Self) -> Result<u32> {
        match (self.d, other.d) {
            (1, d) | (d, 1) => Ok(d),
            (d, e) if d == e => Ok(d),
            (d, e) => Err(Error::FieldMismatch(d, e)),
        }
    }

    fn build(a: BigRational, b: BigRational, d: u32) -> Self {
        if b.is_zero() {
            Self::rational(a)
        } else {
            Self { a, b, d }
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let d = self.field_with(other)?;
        Ok(Self::build(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        let d = self.field_with(other)?;
        Ok(Self::build(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let d = self.field_with(other)?;
        let dd = BigRational::from_integer(d.into());
        let a = &self.a * &other.a + &dd * &self.b * &other.b;
        let b = &self.a * &other.b + &self.b * &other.a;
        Ok(Self::build(a, b, d))
    }

    /// Field norm `a² − d·b²`, nonzero for nonzero elements.
    pub fn norm(&self) -> BigRational {
        let dd = BigRational::from_integer(self.d.into());
        &self.a * &self.a - dd * &self.b * &self.b
    }

    pub fn conjugate(&self) -> Self {
        Self::build(self.a.clone(), -self.b.clone(), self.d)
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::PreconditionFailed("division by zero".into()));
        }
        let n = other.norm();
        let num = self.try_mul(&other.conjugate())?;
        Ok(Self::build(&num.a / &n, &num.b / &n, num.d))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self::build(&self.a * r, &self.b * r, self.d)
    }

    pub fn mul_int(&self, n: i64) -> Self {
        self.scale(&BigRational::from_integer(n.into()))
    }

    /// Exact sign: `-1`, `0` or `1`.
    pub fn signum(&self) -> i32 {
        fn s(r: &BigRational) -> i32 {
            if r.is_zero() {
                0
            } else if r.is_positive() {
                1
            } else {
                -1
            }
        }
        let (sa, sb) = (s(&self.a), s(&self.b));
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // Opposite signs: the larger of a² and d·b² wins; they are never equal.
        let dd = BigRational::from_integer(self.d.into());
        if &self.a * &self.a > dd * &self.b * &self.b {
            sa
        } else {
            sb
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            return a;
        }
        a + self.b.to_f64().unwrap_or(f64::NAN) * f64::from(self.d).sqrt()
    }

    pub fn try_cmp(&self, other: &Self) -> Result<Ordering> {
        self.field_with(other)?;
        let (x, y) = (self.to_f64(), other.to_f64());
        let diff = x - y;
        if diff.is_finite() && diff.abs() > 1e-9 * (1.0 + x.abs() + y.abs()) {
            return Ok(if diff > 0.0 {
                Ordering::Greater
            } else {
                Ordering::Less
            });
        }
        Ok(self.try_sub(other)?.signum().cmp(&0))
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        let guess = self.to_f64().floor();
        let mut n = if guess.is_finite() && guess.abs() < 1e15 {
            BigInt::from(guess as i64)
        } else {
            // Fall back to bounding through the rational parts.
            (self.a.clone() + self.b.clone() * BigRational::from_integer(self.d.into()))
                .floor()
                .to_integer()
        };
        loop {
            let low = Self::rational(BigRational::from_integer(n.clone()));
            if self.try_cmp(&low).expect("rational combines") == Ordering::Less {
                n -= 1;
                continue;
            }
            let high = Self::rational(BigRational::from_integer(&n + 1));
            if self.try_cmp(&high).expect("rational combines") != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(-self.clone()).floor()
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(&self) -> Self {
        let f = self.floor();
        self - &Self::rational(BigRational::from_integer(f))
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// `p` and `q` are linearly independent over ℚ (both nonzero, not proportional).
    pub fn rationally_independent(p: &Self, q: &Self) -> bool {
        if p.is_zero() || q.is_zero() {
            return false;
        }
        if p.d != q.d && !(p.is_rational() || q.is_rational()) {
            // Different quadratic fields: √d and √e are independent, but
            // mixed values are outside what this type represents.
            return true;
        }
        &p.a * &q.b - &q.a * &p.b != BigRational::zero()
    }

    /// Representation used by the JSON formats: `{"a": "1/2", "b": "1/3"}`.
    pub fn to_json_repr(&self) -> QuadraticJson {
        QuadraticJson {
            a: rational_to_string(&self.a),
            b: rational_to_string(&self.b),
        }
    }

    pub fn from_json_repr(j: &QuadraticJson, d: u32) -> Result<Self> {
        Self::new(parse_rational(&j.a)?, parse_rational(&j.b)?, d)
    }
}

/// Serialized form of a [`QuadraticReal`]; the radicand is carried by the
/// enclosing document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticJson {
    pub a: String,
    #[serde(default = "zero_string")]
    pub b: String,
}

fn zero_string() -> String {
    "0".into()
}

impl fmt::Display for QuadraticReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", rational_to_string(&self.a));
        }
        let b = if self.b.is_one() {
            String::new()
        } else if self.b == -BigRational::one() {
            "-".into()
        } else {
            rational_to_string(&self.b)
        };
        if self.a.is_zero() {
            write!(f, "{b}√{}", self.d)
        } else if self.b.is_negative() {
            write!(f, "{}{b}√{}", rational_to_string(&self.a), self.d)
        } else {
            write!(f, "{}+{b}√{}", rational_to_string(&self.a), self.d)
        }
    }
}

impl FromStr for QuadraticReal {
    type Err = Error;

    /// Accepts `"p/q"`, `"√d"`, `"p/q+r/s√d"` and `"p/q-r/s√d"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(root) = s.find('√') else {
            return Ok(Self::rational(parse_rational(s)?));
        };
        let tail = s[root + '√'.len_utf8()..].trim_start();
        let digits = tail.find(|c: char| !c.is_ascii_digit()).unwrap_or(tail.len());
        let d: u32 = tail[..digits]
            .parse()
            .map_err(|e| Error::Parse(format!("bad radicand in {s:?}: {e}")))?;
        // A trailing rational term, as in `√2-1`.
        let offset = match tail[digits..].trim() {
            "" => BigRational::zero(),
            t if t.starts_with(['+', '-']) => parse_rational(t.trim_start_matches('+'))?,
            t => return Err(Error::Parse(format!("unexpected {t:?} in {s:?}"))),
        };
        let head = &s[..root];
        let split = head
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (a, b) = match split {
            Some(i) => (&head[..i], &head[i..]),
            None => ("0", head),
        };
        let b = match b.trim_start_matches('+') {
            "" => "1",
            "-" => "-1",
            other => other,
        };
        Self::new(parse_rational(a)? + offset, parse_rational(b)?, d)
    }
}

impl PartialOrd for QuadraticReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.try_cmp(other).ok()
    }
}

impl Neg for QuadraticReal {
    type Output = QuadraticReal;
    fn neg(self) -> Self::Output {
        Self::build(-self.a, -self.b, self.d)
    }
}

impl Neg for &QuadraticReal {
    type Output = QuadraticReal;
    fn neg(self) -> Self::Output {
        -self.clone()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&QuadraticReal> for &QuadraticReal {
            type Output = QuadraticReal;
            fn $method(self, rhs: &QuadraticReal) -> QuadraticReal {
                self.$try(rhs).expect("quadratic field arithmetic")
            }
        }
        impl $trait<QuadraticReal> for QuadraticReal {
            type Output = QuadraticReal;
            fn $method(self, rhs: QuadraticReal) -> QuadraticReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuadraticReal> for QuadraticReal {
            type Output = QuadraticReal;
            fn $method(self, rhs: &QuadraticReal) -> QuadraticReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<QuadraticReal> for &QuadraticReal {
            type Output = QuadraticReal;
            fn $method(self, rhs: QuadraticReal) -> QuadraticReal {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);
forward_binop!(Div, div, try_div);

impl std::iter::Sum for QuadraticReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a QuadraticReal> for QuadraticReal {
    fn sum<I: Iterator<Item = &'a QuadraticReal>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

/// Integer ceiling of a rational.
pub fn ceil_rational(r: &BigRational) -> BigInt {
    let (q, rem) = r.numer().div_rem(r.denom());
    if rem.is_positive() {
        q + 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(q("1/2+1/3√2").to_string(), "1/2+1/3√2");
        assert_eq!(q("-1+√2").to_string(), "-1+√2");
        assert_eq!(q("√5").to_string(), "√5");
        assert_eq!(q("3-√2").to_string(), "3-√2");
        assert_eq!(q("7/4").to_string(), "7/4");
        assert_eq!(q("√2-1"), q("-1+√2"));
        assert_eq!(q("2√2+1/2").to_string(), "1/2+2√2");
        assert!("1+√4".parse::<QuadraticReal>().is_err());
    }

    #[test]
    fn sign_is_exact_near_zero() {
        // 99/70 is a convergent of √2: 99/70 − √2 ≈ 7.2e-5 > 0.
        assert_eq!(q("99/70-√2").signum(), 1);
        assert_eq!(q("-99/70+√2").signum(), -1);
        // 665857/470832 − √2 ≈ 1.6e-12, beyond the float fast path.
        let tight = q("665857/470832-√2");
        assert_eq!(tight.signum(), 1);
        assert!(tight > QuadraticReal::zero());
        assert_eq!(q("0").signum(), 0);
    }

    #[test]
    fn field_operations() {
        let x = q("1+√2");
        let y = q("3-2√2");
        assert_eq!(&x * &y, q("-1+√2"));
        assert_eq!(&(&x / &x), &QuadraticReal::one());
        assert_eq!((&x * &x) - &x - &x, QuadraticReal::one());
        assert_eq!(q("√2").floor(), BigInt::from(1));
        assert_eq!(q("-√2").floor(), BigInt::from(-2));
        assert_eq!(q("5/2").ceil(), BigInt::from(3));
        assert_eq!(q("-7+5√2").fract(), q("-7+5√2"));
        assert_eq!(q("7-5√2").fract(), q("8-5√2"));
    }

    #[test]
    fn rational_independence() {
        let one = QuadraticReal::one();
        let r2 = q("√2");
        assert!(QuadraticReal::rationally_independent(&one, &r2));
        assert!(!QuadraticReal::rationally_independent(&one, &one));
        assert!(!QuadraticReal::rationally_independent(&q("1+√2"), &q("2+2√2")));
        assert!(QuadraticReal::rationally_independent(&q("1+√2"), &q("1-√2")));
    }

    #[test]
    fn mixing_fields_is_an_error() {
        assert_eq!(
            q("√2").try_add(&q("√3")),
            Err(Error::FieldMismatch(2, 3))
        );
        assert!(q("√2").try_add(&q("1/2")).is_ok());
    }
}
