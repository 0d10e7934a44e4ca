//! Arithmetic backends for the verification pipeline.
//!
//! Every certified inequality is checked either exactly over arbitrary
//! precision rationals ([`Rational`]) or in floating point with fixed,
//! documented tolerances ([`FLOAT_IDENTITY_TOL`], [`FLOAT_INEQUALITY_TOL`]).
//! The [`Scalar`] trait abstracts over the two modes so the decomposition and
//! certification code is written once.
//!
//! The John-Nirenberg certificates compare rational quantities against
//! `exp`/`log` expressions. In exact mode those are handled through one-sided
//! rational enclosures: `exp_upper(x) >= e^x`, `exp_neg_lower(x) <= e^(-x)`,
//! and so on, so a PASS in exact mode is a proof of the stated inequality.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

/// Exact arithmetic backend.
pub type Rational = Ratio<BigInt>;

/// Absolute tolerance for identity checks (`lhs = rhs`) in float mode.
pub const FLOAT_IDENTITY_TOL: f64 = 1e-12;

/// Absolute tolerance for inequality checks (`lhs <= rhs`) in float mode.
pub const FLOAT_INEQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseScalarError {
    #[error("empty numeric field")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// A number usable by the verification pipeline.
///
/// Implemented by [`Rational`] (exact mode: comparisons are literal) and by
/// `f64` (float mode: comparisons carry the documented tolerances).
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    /// `num / den`; panics if `den == 0`.
    fn ratio(num: i64, den: i64) -> Self;

    /// Accepts `a/b` or a plain decimal such as `-3`, `0.25`.
    fn parse(text: &str) -> Result<Self, ParseScalarError>;

    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;

    /// Identity comparison: exact in rational mode, `|a-b| <= 1e-12` in float.
    fn check_eq(&self, other: &Self) -> bool;

    /// Inequality comparison `self <= other`: exact in rational mode,
    /// `a <= b + 1e-9` in float.
    fn check_le(&self, other: &Self) -> bool;

    /// Strict inequality `self < other`: exact in rational mode,
    /// `a < b + 1e-9` in float.
    fn check_lt(&self, other: &Self) -> bool;

    /// Lower endpoint of the rational enclosure of Euler's number.
    fn e_lower() -> Self;
    /// Upper endpoint of the rational enclosure of Euler's number.
    fn e_upper() -> Self;

    /// A value `>= e^x`, for `x >= 0`.
    fn exp_upper(x: &Self) -> Self;
    /// A value `<= e^(-x)`, for `x >= 0`.
    fn exp_neg_lower(x: &Self) -> Self;
    /// A value `<= ln x`, for `x >= 1`.
    fn ln_lower(x: &Self) -> Self;
    /// A value `>= ln x`, for `x >= 1`.
    fn ln_upper(x: &Self) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn min_with(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_with(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn sum<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

fn parse_rational(text: &str) -> Result<Rational, ParseScalarError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseScalarError::Empty);
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ParseScalarError::Invalid(text.to_string()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ParseScalarError::Invalid(text.to_string()))?;
        if d.is_zero() {
            return Err(ParseScalarError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(ParseScalarError::Invalid(text.to_string()));
    }
    let digits_ok = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if !digits_ok(int_part) || !digits_ok(frac_part) {
        return Err(ParseScalarError::Invalid(text.to_string()));
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part
            .parse()
            .map_err(|_| ParseScalarError::Invalid(text.to_string()))?
    };
    let mut denom = BigInt::one();
    for c in frac_part.chars() {
        numer = numer * 10 + c.to_digit(10).unwrap();
        denom *= 10;
    }
    Ok(Rational::new(BigInt::from(sign) * numer, denom))
}

/// Rounds `q` up to a multiple of `2^-64`, keeping representations small
/// while preserving the upper-bound direction.
fn round_up(q: &Rational) -> Rational {
    let scale = BigInt::one() << 64u32;
    let scaled = q * Rational::from_integer(scale.clone());
    Rational::new(scaled.ceil().to_integer(), scale)
}

/// Rounds `q` down to a multiple of `2^-64`.
fn round_down(q: &Rational) -> Rational {
    let scale = BigInt::one() << 64u32;
    let scaled = q * Rational::from_integer(scale.clone());
    Rational::new(scaled.floor().to_integer(), scale)
}

/// Rational upper bound for `e^x`, `x >= 0`.
///
/// Argument is halved into `[0, 1]`, a truncated Taylor sum plus an explicit
/// remainder bound is taken there, and the result is squared back up with
/// outward rounding at every step.
fn exp_upper_rational(x: &Rational) -> Rational {
    assert!(!x.is_negative(), "exp_upper requires x >= 0");
    if Zero::is_zero(x) {
        return <Rational as One>::one();
    }
    let mut halvings = 0u32;
    let mut reduced = x.clone();
    let one = <Rational as One>::one();
    let two = Rational::from_integer(BigInt::from(2));
    while reduced > one {
        reduced /= two.clone();
        halvings += 1;
    }
    // Taylor sum of e^t for t in [0,1]; with 24 terms the remainder is below
    // t^24/24! * (1 - 1/25)^-1 < 2^-78.
    let terms = 24usize;
    let mut sum = <Rational as One>::one();
    let mut term = <Rational as One>::one();
    for j in 1..terms {
        term = term * reduced.clone() / Rational::from_integer(BigInt::from(j as i64));
        sum += term.clone();
    }
    let tail = term * reduced.clone() / Rational::from_integer(BigInt::from(terms as i64))
        * Rational::new(BigInt::from(terms as i64 + 1), BigInt::from(terms as i64));
    let mut upper = round_up(&(sum + tail));
    for _ in 0..halvings {
        upper = round_up(&(upper.clone() * upper));
    }
    upper
}

/// Rational bounds `(lower, upper)` for `ln x`, `x >= 1`, via the atanh
/// series `ln x = 2 * sum y^(2j+1)/(2j+1)` with `y = (x-1)/(x+1)`.
fn ln_bounds_rational(x: &Rational) -> (Rational, Rational) {
    let one = <Rational as One>::one();
    assert!(*x >= one, "ln bounds require x >= 1");
    if *x == one {
        return (<Rational as Zero>::zero(), <Rational as Zero>::zero());
    }
    let y = (x - one.clone()) / (x + one.clone());
    let y2 = y.clone() * y.clone();
    let mut power = y.clone();
    let mut sum = <Rational as Zero>::zero();
    let terms = 48usize;
    for j in 0..terms {
        sum += power.clone() / Rational::from_integer(BigInt::from(2 * j as i64 + 1));
        power = power * y2.clone();
    }
    // Remaining tail is a geometric-dominated series in y^2.
    let tail = power / (Rational::from_integer(BigInt::from(2 * terms as i64 + 1)) * (one - y2));
    let two = Rational::from_integer(BigInt::from(2));
    let lower = round_down(&(two.clone() * sum.clone()));
    let upper = round_up(&(two * (sum + tail)));
    (lower, upper)
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rational as Zero>::zero()
    }

    fn one() -> Self {
        <Rational as One>::one()
    }

    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse(text: &str) -> Result<Self, ParseScalarError> {
        parse_rational(text)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn check_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn check_le(&self, other: &Self) -> bool {
        self <= other
    }

    fn check_lt(&self, other: &Self) -> bool {
        self < other
    }

    fn e_lower() -> Self {
        Rational::new(BigInt::from(2_718_281_828i64), BigInt::from(1_000_000_000i64))
    }

    fn e_upper() -> Self {
        Rational::new(BigInt::from(2_718_281_829i64), BigInt::from(1_000_000_000i64))
    }

    fn exp_upper(x: &Self) -> Self {
        exp_upper_rational(x)
    }

    fn exp_neg_lower(x: &Self) -> Self {
        round_down(&(<Rational as One>::one() / exp_upper_rational(x)))
    }

    fn ln_lower(x: &Self) -> Self {
        ln_bounds_rational(x).0
    }

    fn ln_upper(x: &Self) -> Self {
        ln_bounds_rational(x).1
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn parse(text: &str) -> Result<Self, ParseScalarError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ParseScalarError::Empty);
        }
        if let Some((num, den)) = text.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| ParseScalarError::Invalid(text.to_string()))?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| ParseScalarError::Invalid(text.to_string()))?;
            if d == 0.0 {
                return Err(ParseScalarError::ZeroDenominator(text.to_string()));
            }
            return Ok(n / d);
        }
        text.parse()
            .map_err(|_| ParseScalarError::Invalid(text.to_string()))
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn check_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_IDENTITY_TOL
    }

    fn check_le(&self, other: &Self) -> bool {
        *self <= other + FLOAT_INEQUALITY_TOL
    }

    fn check_lt(&self, other: &Self) -> bool {
        *self < other + FLOAT_INEQUALITY_TOL
    }

    fn e_lower() -> Self {
        std::f64::consts::E
    }

    fn e_upper() -> Self {
        std::f64::consts::E
    }

    fn exp_upper(x: &Self) -> Self {
        x.exp()
    }

    fn exp_neg_lower(x: &Self) -> Self {
        (-x).exp()
    }

    fn ln_lower(x: &Self) -> Self {
        x.ln()
    }

    fn ln_upper(x: &Self) -> Self {
        x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> Rational {
        Rational::ratio(num, den)
    }

    #[test]
    fn parses_ratios_and_decimals() {
        assert_eq!(Rational::parse("3/4").unwrap(), q(3, 4));
        assert_eq!(Rational::parse("-3/4").unwrap(), q(-3, 4));
        assert_eq!(Rational::parse("0.25").unwrap(), q(1, 4));
        assert_eq!(Rational::parse("-1.5").unwrap(), q(-3, 2));
        assert_eq!(Rational::parse("7").unwrap(), q(7, 1));
        assert_eq!(Rational::parse(".5").unwrap(), q(1, 2));
        assert!(Rational::parse("1/0").is_err());
        assert!(Rational::parse("abc").is_err());
        assert!(Rational::parse("").is_err());
        assert!(Rational::parse("1.2.3").is_err());
    }

    #[test]
    fn float_parse_accepts_ratio_syntax() {
        assert_eq!(f64::parse("3/4").unwrap(), 0.75);
        assert_eq!(f64::parse("0.25").unwrap(), 0.25);
        assert!(f64::parse("1/0").is_err());
    }

    fn fl(x: &Rational) -> f64 {
        Scalar::to_f64(x)
    }

    #[test]
    fn e_enclosure_brackets_euler() {
        let lo = fl(&<Rational as Scalar>::e_lower());
        let hi = fl(&<Rational as Scalar>::e_upper());
        assert!(lo < std::f64::consts::E && std::f64::consts::E < hi);
        assert!(hi - lo < 2e-9);
    }

    #[test]
    fn exp_upper_dominates_exact_value() {
        for (num, den) in [(0, 1), (1, 2), (1, 1), (7, 3), (10, 1), (47, 2)] {
            let x = q(num, den);
            let upper = <Rational as Scalar>::exp_upper(&x);
            // The f64 reference itself carries rounding error, so the
            // domination check gets a one-sided relative slack.
            let exact = (fl(&x)).exp();
            assert!(
                fl(&upper) >= exact * (1.0 - 1e-13),
                "exp_upper({num}/{den}) too small"
            );
            assert!(
                fl(&upper) <= exact * (1.0 + 1e-12),
                "exp_upper({num}/{den}) too loose: {} vs {exact}",
                fl(&upper)
            );
        }
    }

    #[test]
    fn exp_neg_lower_stays_below_exact_value() {
        for (num, den) in [(0, 1), (1, 2), (3, 1), (23, 1)] {
            let x = q(num, den);
            let lower = <Rational as Scalar>::exp_neg_lower(&x);
            let exact = (-fl(&x)).exp();
            assert!(fl(&lower) <= exact * (1.0 + 1e-13));
            // Rounding down to the 2^-64 grid costs up to ~5.5e-20 absolute.
            assert!(fl(&lower) >= exact * (1.0 - 1e-12) - 1e-19);
        }
    }

    #[test]
    fn ln_bounds_bracket_exact_value() {
        for (num, den) in [(1, 1), (3, 2), (2, 1), (3, 1), (4, 1), (10, 1)] {
            let x = q(num, den);
            let lo = <Rational as Scalar>::ln_lower(&x);
            let hi = <Rational as Scalar>::ln_upper(&x);
            let exact = fl(&x).ln();
            assert!(fl(&lo) <= exact + 1e-12 && exact <= fl(&hi) + 1e-12);
            assert!(fl(&hi) - fl(&lo) < 1e-8, "enclosure too wide for {num}/{den}");
        }
    }

    #[test]
    fn float_comparisons_apply_documented_tolerances() {
        assert!(1.0f64.check_eq(&(1.0 + 0.5e-12)));
        assert!(!1.0f64.check_eq(&(1.0 + 1e-11)));
        assert!((1.0f64 + 0.5e-9).check_le(&1.0));
        assert!(!(1.0f64 + 1e-8).check_le(&1.0));
    }

    #[test]
    fn rational_comparisons_are_literal() {
        assert!(q(1, 3).check_le(&q(1, 3)));
        assert!(!q(1, 3).check_lt(&q(1, 3)));
        assert!(!(q(1, 3) + q(1, 1_000_000_000)).check_le(&q(1, 3)));
    }
}
