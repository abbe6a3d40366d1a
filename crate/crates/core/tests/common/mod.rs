//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use exact_euler::{ConstructiveReal, PrecisionExp, Rational};

// 48+ significant digits, computed independently with mpmath.
pub const E: &str = "2.718281828459045235360287471352662497757247093699959574966";
pub const SQRT_E: &str = "1.648721270700128146848650787814163571653776100710148011575";
pub const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176";
/// A dyadic approximation of 2 pi, within 2^-20.
pub const TWO_PI_DYADIC: (i64, i64) = (6588397, 1 << 20);
pub const COS_TWO_PI_DYADIC: &str = "0.99999999999995440053730961125199294712599124394321";
pub const SIN_TWO_PI_DYADIC: &str = "-0.0000003019915981956706965483540942327101692006451915049";
/// Slack covering the truncation of the decimal oracles above.
pub fn oracle_slack() -> Rational {
    "0.000000000000000000000000000000000000000001".parse().unwrap()
}

pub fn dec(s: &str) -> Rational {
    s.parse().expect("oracle literal")
}

pub fn prec(p: u32) -> PrecisionExp {
    PrecisionExp::new(p).unwrap()
}

fn factorial_tail_index(x_num: i64, x_den: i64, p: u32) -> u64 {
    // least n with 2 x^(n+1) / (n+1)! <= 2^-p, for 0 <= x <= 1
    let goal = Rational::pow2(-(p as i64));
    let x = Rational::frac(x_num, x_den);
    let mut term = Rational::from(2);
    let mut n = 0u64;
    loop {
        term = (&term * &x).checked_div(&Rational::from((n + 1) as i64)).unwrap();
        if term <= goal {
            return n;
        }
        n += 1;
    }
}

/// `exp(x_num / x_den)` for `0 <= x <= 1` as Taylor partial sums.
pub fn exp_series(x_num: i64, x_den: i64) -> ConstructiveReal {
    ConstructiveReal::new(
        move |n| {
            let x = Rational::frac(x_num, x_den);
            let mut term = Rational::one();
            let mut sum = Rational::one();
            for k in 1..=n {
                term = (&term * &x).checked_div(&Rational::from(k as i64)).unwrap();
                sum += &term;
            }
            sum
        },
        move |p| factorial_tail_index(x_num, x_den, p.get()),
    )
}

pub fn e() -> ConstructiveReal {
    exp_series(1, 1)
}

/// Newton iteration for sqrt 2 from 3/2; `n` steps give about `2^n` bits.
pub fn sqrt2() -> ConstructiveReal {
    ConstructiveReal::new(
        |n| {
            let mut x = Rational::frac(3, 2);
            for _ in 0..n.min(9) {
                x = (&x + &Rational::from(2).checked_div(&x).unwrap()) * Rational::frac(1, 2);
            }
            x
        },
        |p| (32 - (p.get() - 1).leading_zeros()) as u64 + 1,
    )
}
