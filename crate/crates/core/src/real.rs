//! Constructive reals: a Cauchy sequence of rationals together with a
//! weakly increasing modulus `M` such that `|a_n - a_m| <= 2^-p` whenever
//! `n, m >= M(p)`.
//!
//! Every real is an immutable, cheaply clonable handle. Sequence terms are
//! memoized per index behind a mutex, so a real can be shared across
//! threads and queried repeatedly at the same index without recomputation.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::rational::{PrecisionExp, Rational};

type SeqFn = dyn Fn(u64) -> Rational + Send + Sync;
type ModulusFn = dyn Fn(PrecisionExp) -> u64 + Send + Sync;

struct Inner {
    seq: Box<SeqFn>,
    modulus: Box<ModulusFn>,
    memo: Option<Mutex<HashMap<u64, Rational>>>,
}

/// A real number `((a_n)_n, M)`.
#[derive(Clone)]
pub struct ConstructiveReal {
    inner: Arc<Inner>,
}

impl ConstructiveReal {
    /// Wraps a sequence and its modulus. The caller vouches for regularity;
    /// [`ConstructiveReal::regularity_violation`] can spot-check it.
    pub fn new(
        seq: impl Fn(u64) -> Rational + Send + Sync + 'static,
        modulus: impl Fn(PrecisionExp) -> u64 + Send + Sync + 'static,
    ) -> Self {
        ConstructiveReal {
            inner: Arc::new(Inner {
                seq: Box::new(seq),
                modulus: Box::new(modulus),
                memo: Some(Mutex::new(HashMap::new())),
            }),
        }
    }

    /// The constant sequence `a_n = a` with modulus `M = 0`.
    pub fn from_rational(a: Rational) -> Self {
        ConstructiveReal {
            inner: Arc::new(Inner {
                seq: Box::new(move |_| a.clone()),
                modulus: Box::new(|_| 0),
                memo: None,
            }),
        }
    }

    /// The `n`-th sequence term.
    pub fn term(&self, n: u64) -> Rational {
        let Some(memo) = &self.inner.memo else {
            return (self.inner.seq)(n);
        };
        if let Some(hit) = memo.lock().expect("memo lock").get(&n) {
            return hit.clone();
        }
        let value = (self.inner.seq)(n);
        memo.lock().expect("memo lock").insert(n, value.clone());
        value
    }

    pub fn modulus(&self, p: PrecisionExp) -> u64 {
        (self.inner.modulus)(p)
    }

    /// `a_{M(p)}`, a rational within `2^-p` of the real.
    pub fn approx(&self, p: PrecisionExp) -> Rational {
        self.term(self.modulus(p))
    }

    pub fn neg(&self) -> Self {
        let x = self.clone();
        let m = self.clone();
        ConstructiveReal::new(move |n| -x.term(n), move |p| m.modulus(p))
    }

    /// Sum with modulus `max(Mx(p+1), My(p+1))`.
    pub fn add(&self, other: &ConstructiveReal) -> Self {
        let (x, y) = (self.clone(), other.clone());
        let (mx, my) = (self.clone(), other.clone());
        ConstructiveReal::new(
            move |n| x.term(n) + y.term(n),
            move |p| mx.modulus(p + 1).max(my.modulus(p + 1)),
        )
    }

    pub fn sub(&self, other: &ConstructiveReal) -> Self {
        self.add(&other.neg())
    }

    /// Product. Each operand's terms past `M(1)` are bounded by
    /// `2^(k+1)` with `k = le_abs_bound(a_{M(1)})`; the modulus shifts the
    /// other operand's precision by `k + 2`.
    pub fn mul(&self, other: &ConstructiveReal) -> Self {
        let kx = self.approx(PrecisionExp::ONE).le_abs_bound().get() + 2;
        let ky = other.approx(PrecisionExp::ONE).le_abs_bound().get() + 2;
        let floor = self
            .modulus(PrecisionExp::ONE)
            .max(other.modulus(PrecisionExp::ONE));
        let (x, y) = (self.clone(), other.clone());
        let (mx, my) = (self.clone(), other.clone());
        ConstructiveReal::new(
            move |n| x.term(n) * y.term(n),
            move |p| mx.modulus(p + ky).max(my.modulus(p + kx)).max(floor),
        )
    }

    pub fn abs(&self) -> Self {
        let x = self.clone();
        let m = self.clone();
        ConstructiveReal::new(move |n| x.term(n).abs(), move |p| m.modulus(p))
    }

    /// Non-negativity witnessed up to `2^-p`: `-2^-p <= a_{M(p+1)}`.
    pub fn is_nonneg_up_to(&self, p: PrecisionExp) -> bool {
        -p.tolerance() <= self.approx(p + 1)
    }

    /// Strict positivity witness: `2^-p <= a_{M(p+1)}`.
    pub fn is_pos_up_to(&self, p: PrecisionExp) -> bool {
        p.tolerance() <= self.approx(p + 1)
    }

    /// `|a_{M(p+1)} - b_{N(p+1)}| <= 2^-p`.
    pub fn eq_up_to(&self, other: &ConstructiveReal, p: PrecisionExp) -> bool {
        (self.approx(p + 1) - other.approx(p + 1)).abs() <= p.tolerance()
    }

    /// Dyadic compression: `b_n = floor(a_{M(n)} 2^n) / 2^n` with modulus
    /// `N(p) = p + 2`. Index 0 reads `a_{M(1)}`.
    pub fn compress(&self) -> Self {
        let x = self.clone();
        ConstructiveReal::new(
            move |n| {
                let a = x.approx(PrecisionExp::saturating(n as i64));
                dyadic_floor(&a, n)
            },
            |p| p.get() as u64 + 2,
        )
    }

    /// First `(p, n, m)` with `n, m >= M(p)` and `|a_n - a_m| > 2^-p`, sampling
    /// `p = 1..=p_max` and indices `M(p) ..= M(p) + span`.
    pub fn regularity_violation(&self, p_max: u32, span: u64) -> Option<(u32, u64, u64)> {
        for p in 1..=p_max {
            let prec = PrecisionExp::new(p).expect("p >= 1");
            let start = self.modulus(prec);
            let base = self.term(start);
            let tol = prec.tolerance();
            let mut indices: Vec<u64> = (start..=start + span.min(16)).collect();
            indices.extend([start + span / 2, start + span]);
            for &n in &indices {
                if (self.term(n) - &base).abs() > tol {
                    return Some((p, start, n));
                }
            }
            for pair in indices.windows(2) {
                if (self.term(pair[0]) - self.term(pair[1])).abs() > tol {
                    return Some((p, pair[0], pair[1]));
                }
            }
        }
        None
    }

    /// Checks `M(p) <= M(p+1)` for `p < p_max`.
    pub fn modulus_is_monotone(&self, p_max: u32) -> bool {
        (1..p_max).all(|p| {
            let p = PrecisionExp::new(p).expect("p >= 1");
            self.modulus(p) <= self.modulus(p + 1)
        })
    }

    /// `n,a_n` rows for `n = 0..=upto`, with a header line.
    pub fn dump_csv(&self, upto: u64) -> String {
        let mut out = String::from("n,a_n\n");
        for n in 0..=upto {
            let _ = writeln!(out, "{},{}", n, self.term(n));
        }
        out
    }
}

impl fmt::Debug for ConstructiveReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstructiveReal")
            .field("approx_p20", &self.approx(PrecisionExp::saturating(20)))
            .finish()
    }
}

/// `floor(a * 2^n) / 2^n`.
pub(crate) fn dyadic_floor(a: &Rational, n: u64) -> Rational {
    let scaled: BigInt = a.mul_pow2(n as i64).floor();
    Rational::from_integer(scaled).mul_pow2(-(n as i64))
}

/// A nonempty vector of constructive reals.
#[derive(Clone, Debug)]
pub struct RealVector {
    components: Vec<ConstructiveReal>,
}

impl RealVector {
    pub fn new(components: Vec<ConstructiveReal>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("a real vector needs at least one component".into()));
        }
        Ok(RealVector { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ConstructiveReal] {
        &self.components
    }

    /// Rational vector `e` with `||e - x||_1 <= 2^-p`.
    pub fn approx(&self, p: PrecisionExp) -> Vec<Rational> {
        let each = component_precisions(self.dim(), p);
        self.components
            .iter()
            .zip(each)
            .map(|(x, q)| x.approx(q))
            .collect()
    }
}

/// Per-component precisions used by [`RealVector::approx`]: each component
/// is approximated to `p + ceil(log2(dim))`, so the errors sum to at most
/// `2^-p`.
pub fn component_precisions(dim: usize, p: PrecisionExp) -> Vec<PrecisionExp> {
    let extra = ceil_log2(dim.max(1));
    vec![p + extra; dim]
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n - 1).leading_zeros()
}
