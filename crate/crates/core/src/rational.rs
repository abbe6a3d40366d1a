//! Exact rational arithmetic.
//!
//! [`Rational`] wraps an arbitrary-precision fraction that is kept in lowest
//! terms with a positive denominator after every operation. On top of the
//! field operations it provides the handful of helpers the rest of the crate
//! leans on: floor toward negative infinity, dyadic powers, the 1-norm of a
//! vector and the smallest exponent `p >= 1` with `|a| <= 2^p`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A precision exponent `p >= 1`, standing for the tolerance `2^-p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrecisionExp(u32);

impl PrecisionExp {
    pub const ONE: PrecisionExp = PrecisionExp(1);

    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::Domain("precision exponent must be at least 1".into()));
        }
        Ok(PrecisionExp(value))
    }

    /// Builds an exponent, raising values below one to one.
    pub fn saturating(value: i64) -> Self {
        PrecisionExp(value.clamp(1, u32::MAX as i64) as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// The tolerance `2^-p` as an exact rational.
    pub fn tolerance(self) -> Rational {
        Rational::pow2(-(self.0 as i64))
    }
}

impl Add<u32> for PrecisionExp {
    type Output = PrecisionExp;

    fn add(self, rhs: u32) -> PrecisionExp {
        PrecisionExp(self.0 + rhs)
    }
}

impl fmt::Display for PrecisionExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arbitrary-precision rational number in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// `numer / denom`, normalized. Fails on a zero denominator.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// Shorthand for small literals; panics on a zero denominator.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom).expect("nonzero denominator")
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^e` for any integer exponent.
    pub fn pow2(e: i64) -> Self {
        let shift = e.unsigned_abs() as usize;
        let big = BigInt::one() << shift;
        if e >= 0 {
            Rational(BigRational::from_integer(big))
        } else {
            Rational(BigRational::new_raw(BigInt::one(), big))
        }
    }

    /// `self * 2^e`, exact.
    pub fn mul_pow2(&self, e: i64) -> Self {
        let shift = e.unsigned_abs() as usize;
        if e >= 0 {
            Rational(BigRational::new(self.numer() << shift, self.denom().clone()))
        } else {
            Rational(BigRational::new(self.numer().clone(), self.denom() << shift))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// Greatest integer `<= self`, rounding toward negative infinity.
    pub fn floor(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    /// Smallest `p >= 1` with `|self| <= 2^p`.
    pub fn le_abs_bound(&self) -> PrecisionExp {
        let n = self.numer().magnitude();
        let d = self.denom().magnitude();
        let guess = n.bits() as i64 - d.bits() as i64;
        let mut p = guess.max(1) as usize;
        while *n > (d << p) {
            p += 1;
        }
        while p > 1 && *n <= (d << (p - 1)) {
            p -= 1;
        }
        PrecisionExp(p as u32)
    }

    /// True when numerator and denominator are coprime and the denominator
    /// is positive.
    pub fn is_normalized(&self) -> bool {
        self.denom().sign() == Sign::Plus && self.numer().gcd(self.denom()).is_one()
    }

    /// Bit length of the denominator.
    pub fn denom_bits(&self) -> u64 {
        self.denom().bits()
    }

    pub fn min(self, other: Rational) -> Rational {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Clamps into `[lo, hi]`.
    pub fn clamp_to(&self, lo: &Rational, hi: &Rational) -> Rational {
        if self < lo {
            lo.clone()
        } else if self > hi {
            hi.clone()
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, exp: u32) -> Rational {
        Rational(num_traits::pow::Pow::pow(&self.0, exp))
    }

    /// Decimal rendering rounded half away from zero to `digits` places.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = num_traits::pow::Pow::pow(BigInt::from(10), digits);
        let scaled = self.abs() * Rational::from_integer(scale) + Rational::frac(1, 2);
        let rounded = scaled.floor();
        let mut body = rounded.to_string();
        if digits > 0 {
            if body.len() <= digits {
                body = format!("{}{}", "0".repeat(digits + 1 - body.len()), body);
            }
            body.insert(body.len() - digits, '.');
        }
        if self.is_negative() && rounded.sign() != Sign::NoSign {
            format!("-{body}")
        } else {
            body
        }
    }
}

/// Exact 1-norm `sum |v_i|`; zero for the empty vector.
pub fn norm1(v: &[Rational]) -> Rational {
    v.iter().fold(Rational::zero(), |acc, x| acc + x.abs())
}

/// Componentwise `a - b`.
pub fn vec_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + scale * b`, componentwise.
pub fn vec_axpy(a: &[Rational], scale: &Rational, b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x + &(scale * y)).collect()
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(self.0, &rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(&self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.denom().is_one() && *self.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Rational::from(*other)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n`, `a/b` and plain decimals such as `-1.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("not a rational number: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            return Rational::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
            let mut num: BigInt = digits.parse().map_err(|_| bad())?;
            if negative {
                num = -num;
            }
            let den = num_traits::pow::Pow::pow(BigInt::from(10), frac.len());
            return Rational::new(num, den);
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rational::from_integer(n))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
