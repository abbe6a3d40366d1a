//! Uniform dyadic partitions of rational intervals.

use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::rational::{PrecisionExp, Rational};

/// Points `lo = c_0 <= c_1 <= ... <= c_n = hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    points: Vec<Rational>,
}

impl Partition {
    /// Checks nonemptiness and monotonicity.
    pub fn new(points: Vec<Rational>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("a partition needs at least one point".into()));
        }
        if points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("partition points must be weakly increasing".into()));
        }
        Ok(Partition { points })
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn lo(&self) -> &Rational {
        &self.points[0]
    }

    pub fn hi(&self) -> &Rational {
        self.points.last().expect("nonempty")
    }

    /// Number of subintervals.
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    /// Largest gap `max(c_{i+1} - c_i)`.
    pub fn mesh(&self) -> Result<Rational> {
        self.points
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .max()
            .ok_or_else(|| Error::Domain("mesh of a single-point partition".into()))
    }

    /// Every point moved by `offset`.
    pub fn shifted(&self, offset: &Rational) -> Partition {
        Partition {
            points: self.points.iter().map(|c| c + offset).collect(),
        }
    }

    /// One point per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.points {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

/// The right endpoints of `2^depth` equal pieces of `[a, b]`, i.e.
/// `a + i (b - a) / 2^depth` for `i = 1..=2^depth`. Same output as halving
/// `[a, b]` recursively `depth` times and concatenating the halves.
pub fn unif_p_core(depth: u32, a: &Rational, b: &Rational) -> Result<Vec<Rational>> {
    if a >= b {
        return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
    }
    let step = (b - a).mul_pow2(-(depth as i64));
    let count = 1u64 << depth;
    Ok((1..=count)
        .map(|i| a + &(&step * &Rational::from_integer(BigInt::from(i))))
        .collect())
}

/// Uniform partition of `[0, b]` with `2^(p + le_abs_bound(b))` pieces, so
/// its mesh `b 2^-(p + le_abs_bound(b))` is at most `2^-p`.
pub fn unif_p(b: &Rational, p: PrecisionExp) -> Result<Partition> {
    if !b.is_positive() {
        return Err(Error::Domain(format!("partition length must be positive, got {b}")));
    }
    let depth = p.get() + b.le_abs_bound().get();
    let mut points = Vec::with_capacity((1usize << depth) + 1);
    points.push(Rational::zero());
    points.extend(unif_p_core(depth, &Rational::zero(), b)?);
    Ok(Partition { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn prec(p: u32) -> PrecisionExp {
        PrecisionExp::new(p).unwrap()
    }

    /// The halving recursion, kept literal as a reference.
    fn halving(depth: u32, a: &Rational, b: &Rational) -> Vec<Rational> {
        if depth == 0 {
            return vec![b.clone()];
        }
        let mid = (a + b) * r(1, 2);
        let mut left = halving(depth - 1, a, &mid);
        left.extend(halving(depth - 1, &mid, b));
        left
    }

    #[test]
    fn core_examples() {
        let (zero, one) = (Rational::zero(), Rational::one());
        assert_eq!(unif_p_core(0, &zero, &one).unwrap(), vec![one.clone()]);
        assert_eq!(unif_p_core(1, &zero, &one).unwrap(), vec![r(1, 2), one.clone()]);
        assert_eq!(
            unif_p_core(2, &zero, &one).unwrap(),
            vec![r(1, 4), r(1, 2), r(3, 4), one.clone()]
        );
        assert!(unif_p_core(2, &one, &zero).is_err());
        assert!(unif_p_core(2, &one, &one).is_err());
    }

    #[test]
    fn unif_p_examples() {
        let part = unif_p(&Rational::one(), prec(1)).unwrap();
        assert_eq!(
            part.points(),
            &[Rational::zero(), r(1, 4), r(1, 2), r(3, 4), Rational::one()]
        );
        assert_eq!(part.mesh().unwrap(), r(1, 4));
        assert_eq!(unif_p(&Rational::from(2), prec(1)).unwrap().mesh().unwrap(), r(1, 2));
        assert_eq!(unif_p(&Rational::from(3), prec(4)).unwrap().mesh().unwrap(), r(3, 64));
        assert_eq!(unif_p(&Rational::one(), prec(3)).unwrap().mesh().unwrap(), r(1, 16));
        assert!(unif_p(&Rational::zero(), prec(3)).is_err());
        assert!(unif_p(&Rational::from(-1), prec(3)).is_err());
    }

    #[test]
    fn mesh_examples() {
        let p = Partition::new(vec![Rational::zero(), r(1, 2), Rational::one()]).unwrap();
        assert_eq!(p.mesh().unwrap(), r(1, 2));
        let p = Partition::new(vec![Rational::zero(), r(1, 4), Rational::one()]).unwrap();
        assert_eq!(p.mesh().unwrap(), r(3, 4));
        let single = Partition::new(vec![Rational::one()]).unwrap();
        assert!(single.mesh().is_err());
        assert!(Partition::new(vec![Rational::one(), Rational::zero()]).is_err());
        assert!(Partition::new(vec![]).is_err());
    }

    #[test]
    fn csv_lines() {
        let p = unif_p(&Rational::one(), prec(1)).unwrap();
        assert_eq!(p.to_csv(), "0\n1/4\n1/2\n3/4\n1\n");
    }

    proptest! {
        #[test]
        fn direct_indexing_matches_halving(depth in 0u32..8, num in -50i64..50, len in 1i64..60, den in 1i64..9) {
            let a = r(num, den);
            let b = &a + &r(len, den);
            prop_assert_eq!(unif_p_core(depth, &a, &b).unwrap(), halving(depth, &a, &b));
        }

        #[test]
        fn unif_p_is_a_fine_uniform_partition(num in 1i64..10_000, den in 1i64..100, p in 1u32..=7) {
            let b = r(num, den);
            prop_assume!(b <= 100);
            let part = unif_p(&b, prec(p)).unwrap();
            let depth = p + b.le_abs_bound().get();
            prop_assert_eq!(part.points().len(), (1usize << depth) + 1);
            prop_assert_eq!(part.lo(), &Rational::zero());
            prop_assert_eq!(part.hi(), &b);
            let step = b.mul_pow2(-(depth as i64));
            for (i, c) in part.points().iter().enumerate() {
                prop_assert_eq!(c, &(&step * &Rational::from(i as i64)));
            }
            prop_assert!(part.mesh().unwrap() <= prec(p).tolerance());
        }
    }
}
