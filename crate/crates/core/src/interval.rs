//! Closed rational intervals with the arithmetic needed to bound
//! polynomials over boxes.

use std::ops::{Add, Mul, Neg, Sub};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    /// `[lo, hi]`; the endpoints are swapped if given in the wrong order.
    pub fn new(lo: Rational, hi: Rational) -> Self {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn point(v: Rational) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    /// `[center - radius, center + radius]`.
    pub fn around(center: &Rational, radius: &Rational) -> Self {
        Interval::new(center - radius, center + radius)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// `max |v|` over the interval.
    pub fn mag(&self) -> Rational {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn pow(&self, exp: u32) -> Interval {
        if exp == 0 {
            return Interval::point(Rational::one());
        }
        let a = self.lo.pow(exp);
        let b = self.hi.pow(exp);
        if exp % 2 == 1 {
            return Interval::new(a, b);
        }
        let straddles = self.lo.is_negative() && self.hi.is_positive();
        let hi = a.clone().max(b.clone());
        let lo = if straddles { Rational::zero() } else { a.min(b) };
        Interval::new(lo, hi)
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        Interval::new(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        Interval::new(&self.lo - &rhs.hi, &self.hi - &rhs.lo)
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-&self.hi, -&self.lo)
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Interval::new(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64) -> Interval {
        Interval::new(Rational::from(a), Rational::from(b))
    }

    #[test]
    fn arithmetic() {
        assert_eq!(&iv(1, 2) + &iv(-3, 5), iv(-2, 7));
        assert_eq!(&iv(1, 2) - &iv(-3, 5), iv(-4, 5));
        assert_eq!(-&iv(1, 2), iv(-2, -1));
        assert_eq!(&iv(-1, 2) * &iv(-3, 5), iv(-6, 10));
        assert_eq!(iv(2, 1), iv(1, 2));
    }

    #[test]
    fn powers() {
        assert_eq!(iv(-2, 3).pow(2), iv(0, 9));
        assert_eq!(iv(-3, -2).pow(2), iv(4, 9));
        assert_eq!(iv(-2, 3).pow(3), iv(-8, 27));
        assert_eq!(iv(-2, 3).pow(0), iv(1, 1));
        assert_eq!(iv(-5, 3).mag(), Rational::from(5));
    }

    #[test]
    fn enclosure_of_sampled_products() {
        let a = iv(-3, 4);
        let b = iv(-2, 7);
        let prod = &a * &b;
        for x in -3..=4 {
            for y in -2..=7 {
                assert!(prod.contains(&Rational::from(x * y)));
            }
            assert!(a.pow(4).contains(&Rational::from(x.pow(4))));
        }
    }
}
