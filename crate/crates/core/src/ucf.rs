//! Uniformly continuous functions given by an approximating map `h`, a
//! modulus of convergence `alpha` and a modulus of continuity `omega`.
//!
//! A scalar function lives on a rational interval `[lo, hi]`; a vector
//! function lives on a rational 1-norm ball `B(c, R)`. For right-hand sides
//! of `x' = f(t, x)` the first input coordinate is time and the remaining
//! ones are state.
//!
//! The defining clauses are
//!
//! * `(h(a, n))_n` is Cauchy with modulus `alpha` for every rational `a` in
//!   the domain, and
//! * `||a - b||_1 <= 2^(-omega(p) + 1)` implies `||h(a, n) - h(b, n)||_1 <= 2^-p`
//!   for all `n >= alpha(p)`,
//!
//! with both moduli weakly increasing. They are not proved here; the
//! `validate` functions search for counterexamples by sampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{norm1, vec_sub, PrecisionExp, Rational};
use crate::real::{ConstructiveReal, RealVector};

pub type ScalarMap = dyn Fn(&Rational, u64) -> Rational + Send + Sync;
pub type VectorMap = dyn Fn(&[Rational], u64) -> Vec<Rational> + Send + Sync;
pub type ConvergenceModulus = dyn Fn(PrecisionExp) -> u64 + Send + Sync;
pub type ContinuityModulus = dyn Fn(PrecisionExp) -> PrecisionExp + Send + Sync;

/// Precision at which [`UcfScalar::apply`] checks that its argument lies in
/// the domain.
const DOMAIN_CHECK_PREC: u32 = 20;

/// Application modulus `p -> max(alpha(p+2), M(max(omega(p+1) - 1, 1)))`.
fn application_modulus(
    alpha: &ConvergenceModulus,
    omega: &ContinuityModulus,
    input: impl Fn(PrecisionExp) -> u64,
    p: PrecisionExp,
) -> u64 {
    let shifted = PrecisionExp::saturating(omega(p + 1).get() as i64 - 1);
    alpha(p + 2).max(input(shifted))
}

/// A uniformly continuous `f : [lo, hi] -> R`.
#[derive(Clone)]
pub struct UcfScalar {
    lo: Rational,
    hi: Rational,
    approx: Arc<ScalarMap>,
    alpha: Arc<ConvergenceModulus>,
    omega: Arc<ContinuityModulus>,
}

impl UcfScalar {
    pub fn new(
        lo: Rational,
        hi: Rational,
        approx: impl Fn(&Rational, u64) -> Rational + Send + Sync + 'static,
        alpha: impl Fn(PrecisionExp) -> u64 + Send + Sync + 'static,
        omega: impl Fn(PrecisionExp) -> PrecisionExp + Send + Sync + 'static,
    ) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(UcfScalar {
            lo,
            hi,
            approx: Arc::new(approx),
            alpha: Arc::new(alpha),
            omega: Arc::new(omega),
        })
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn eval(&self, a: &Rational, n: u64) -> Rational {
        (self.approx)(a, n)
    }

    pub fn alpha(&self, p: PrecisionExp) -> u64 {
        (self.alpha)(p)
    }

    pub fn omega(&self, p: PrecisionExp) -> PrecisionExp {
        (self.omega)(p)
    }

    /// `f(x)`: the sequence `h(a_n, n)` under the application modulus.
    ///
    /// Approximants of `x` that overshoot the interval are clamped to the
    /// nearest endpoint. A real whose `2^-20` approximation lies farther
    /// than `2^-20` outside the interval is rejected.
    pub fn apply(&self, x: &ConstructiveReal) -> Result<ConstructiveReal> {
        let check = PrecisionExp::new(DOMAIN_CHECK_PREC).expect("positive");
        let probe = x.approx(check);
        let slack = check.tolerance();
        if probe < &self.lo - &slack || probe > &self.hi + &slack {
            return Err(Error::Range(format!(
                "argument {probe} lies outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        let (f, xs) = (self.clone(), x.clone());
        let (g, xm) = (self.clone(), x.clone());
        Ok(ConstructiveReal::new(
            move |n| {
                let a = xs.term(n).clamp_to(&f.lo, &f.hi);
                f.eval(&a, n)
            },
            move |p| application_modulus(&*g.alpha, &*g.omega, |q| xm.modulus(q), p),
        ))
    }

    pub fn validate(&self, samples: usize, p_max: PrecisionExp) -> ValidationReport {
        run_validation(&ScalarDomain(self), samples, p_max)
    }
}

impl fmt::Debug for UcfScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UcfScalar")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

/// Human-readable description of a [`UcfVector`], used for introspection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UcfMetadata {
    pub name: String,
    pub center: Vec<Rational>,
    pub radius: Rational,
    pub dim_in: usize,
    pub dim_out: usize,
    pub approx: String,
    pub conv_modulus: String,
    pub cont_modulus: String,
}

/// A uniformly continuous `f : B(c, R) -> R^m`, `B` a 1-norm ball.
#[derive(Clone)]
pub struct UcfVector {
    center: Vec<Rational>,
    radius: Rational,
    dim_out: usize,
    approx: Arc<VectorMap>,
    alpha: Arc<ConvergenceModulus>,
    omega: Arc<ContinuityModulus>,
    meta: UcfMetadata,
}

/// Symbolic descriptions attached to a [`UcfVector`].
#[derive(Debug, Clone, Default)]
pub struct Descriptions {
    pub name: String,
    pub approx: String,
    pub conv_modulus: String,
    pub cont_modulus: String,
}

impl UcfVector {
    pub fn new(
        center: Vec<Rational>,
        radius: Rational,
        dim_out: usize,
        approx: impl Fn(&[Rational], u64) -> Vec<Rational> + Send + Sync + 'static,
        alpha: impl Fn(PrecisionExp) -> u64 + Send + Sync + 'static,
        omega: impl Fn(PrecisionExp) -> PrecisionExp + Send + Sync + 'static,
        descriptions: Descriptions,
    ) -> Result<Self> {
        if center.is_empty() || dim_out == 0 {
            return Err(Error::Domain("dimensions must be positive".into()));
        }
        if !radius.is_positive() {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        let meta = UcfMetadata {
            name: descriptions.name,
            center: center.clone(),
            radius: radius.clone(),
            dim_in: center.len(),
            dim_out,
            approx: descriptions.approx,
            conv_modulus: descriptions.conv_modulus,
            cont_modulus: descriptions.cont_modulus,
        };
        Ok(UcfVector {
            center,
            radius,
            dim_out,
            approx: Arc::new(approx),
            alpha: Arc::new(alpha),
            omega: Arc::new(omega),
            meta,
        })
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn center(&self) -> &[Rational] {
        &self.center
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn dim_in(&self) -> usize {
        self.center.len()
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn metadata(&self) -> &UcfMetadata {
        &self.meta
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata serializes")
    }

    pub fn eval(&self, point: &[Rational], n: u64) -> Vec<Rational> {
        (self.approx)(point, n)
    }

    pub fn alpha(&self, p: PrecisionExp) -> u64 {
        (self.alpha)(p)
    }

    pub fn omega(&self, p: PrecisionExp) -> PrecisionExp {
        (self.omega)(p)
    }

    /// 1-norm distance from the ball's center.
    pub fn distance_from_center(&self, point: &[Rational]) -> Rational {
        norm1(&vec_sub(point, &self.center))
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        point.len() == self.dim_in() && self.distance_from_center(point) <= self.radius
    }

    /// The real vector `f(point)` for a rational point, as the sequence
    /// `n -> h(point, n)` under the application modulus. With `compress`
    /// every component is replaced by its dyadic compression.
    pub fn apply_real(&self, point: &[Rational], compress: bool) -> Result<RealVector> {
        let point = self.admit(point, None)?;
        Ok(self.real_image(point, compress))
    }

    /// A rational vector within `2^-p` (1-norm) of `f(t, x)`, compressed.
    pub fn apply_vector(&self, t: &Rational, x: &[Rational], p: PrecisionExp) -> Result<Vec<Rational>> {
        self.apply_vector_with(t, x, p, true)
    }

    pub fn apply_vector_with(
        &self,
        t: &Rational,
        x: &[Rational],
        p: PrecisionExp,
        compress: bool,
    ) -> Result<Vec<Rational>> {
        let mut point = Vec::with_capacity(x.len() + 1);
        point.push(t.clone());
        point.extend_from_slice(x);
        self.eval_point(&point, p, compress)
    }

    /// Like [`UcfVector::apply_vector_with`] for an arbitrary input point.
    /// Points up to `2^-p` outside the ball are pulled radially onto it.
    pub fn eval_point(&self, point: &[Rational], p: PrecisionExp, compress: bool) -> Result<Vec<Rational>> {
        let point = self.admit(point, Some(p))?;
        Ok(self.real_image(point, compress).approx(p))
    }

    fn admit(&self, point: &[Rational], p: Option<PrecisionExp>) -> Result<Vec<Rational>> {
        if point.len() != self.dim_in() {
            return Err(Error::Domain(format!(
                "expected a point of dimension {}, got {}",
                self.dim_in(),
                point.len()
            )));
        }
        let dist = self.distance_from_center(point);
        if dist <= self.radius {
            return Ok(point.to_vec());
        }
        let overshoot = &dist - &self.radius;
        if p.is_some_and(|p| overshoot <= p.tolerance()) {
            let scale = self.radius.checked_div(&dist)?;
            return Ok(self
                .center
                .iter()
                .zip(point)
                .map(|(c, a)| c + &(&scale * &(a - c)))
                .collect());
        }
        Err(Error::Range(format!(
            "point {} lies outside the ball of radius {} around {}",
            fmt_vec(point),
            self.radius,
            fmt_vec(&self.center)
        )))
    }

    fn real_image(&self, point: Vec<Rational>, compress: bool) -> RealVector {
        let shared = Arc::new(SharedImage {
            f: self.clone(),
            point,
            memo: Mutex::new(HashMap::new()),
        });
        let components = (0..self.dim_out)
            .map(|i| {
                let seq = Arc::clone(&shared);
                let f = self.clone();
                // constant input: its modulus is identically zero
                let real = ConstructiveReal::new(
                    move |n| seq.term(n)[i].clone(),
                    move |p| application_modulus(&*f.alpha, &*f.omega, |_| 0, p),
                );
                if compress {
                    real.compress()
                } else {
                    real
                }
            })
            .collect();
        RealVector::new(components).expect("dim_out >= 1")
    }

    pub fn validate(&self, samples: usize, p_max: PrecisionExp) -> ValidationReport {
        run_validation(&BallDomain(self), samples, p_max)
    }
}

impl fmt::Debug for UcfVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UcfVector").field("meta", &self.meta).finish_non_exhaustive()
    }
}

struct SharedImage {
    f: UcfVector,
    point: Vec<Rational>,
    memo: Mutex<HashMap<u64, Arc<Vec<Rational>>>>,
}

impl SharedImage {
    fn term(&self, n: u64) -> Arc<Vec<Rational>> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&n) {
            return Arc::clone(hit);
        }
        let value = Arc::new(self.f.eval(&self.point, n));
        self.memo
            .lock()
            .expect("memo lock")
            .insert(n, Arc::clone(&value));
        value
    }
}

pub(crate) fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(Rational::to_string).collect();
    format!("({})", parts.join(", "))
}

/// `f'` of a curve with a modulus of differentiability `delta`:
/// `||phi(t2) - phi(t1) - phi'(t1, phi(t1)) (t2 - t1)|| <= 2^-p (t2 - t1)`
/// whenever `t1 < t2 <= t1 + 2^-delta(p)`.
#[derive(Clone)]
pub struct DerivativeWitness {
    /// The curve `t -> phi(t)`; a function of one input.
    pub base: UcfVector,
    /// `(t, x) -> phi'(t, x)`.
    pub derivative: UcfVector,
    pub diff_modulus: Arc<ContinuityModulus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeViolation {
    pub p: u32,
    pub t1: Rational,
    pub t2: Rational,
    pub residual: Rational,
}

impl DerivativeWitness {
    pub fn new(
        base: UcfVector,
        derivative: UcfVector,
        diff_modulus: impl Fn(PrecisionExp) -> PrecisionExp + Send + Sync + 'static,
    ) -> Result<Self> {
        if base.dim_in() != 1 || derivative.dim_in() != base.dim_out() + 1 {
            return Err(Error::Domain("derivative witness dimensions do not match".into()));
        }
        if derivative.dim_out() != base.dim_out() {
            return Err(Error::Domain("derivative witness dimensions do not match".into()));
        }
        Ok(DerivativeWitness {
            base,
            derivative,
            diff_modulus: Arc::new(diff_modulus),
        })
    }

    /// Samples pairs `t1 < t2 <= t1 + 2^-delta(p)` in `[t_lo, t_hi]`.
    /// Function values are taken `8` bits beyond the tolerance being
    /// checked and the comparison allows for that evaluation error.
    pub fn check(
        &self,
        t_lo: &Rational,
        t_hi: &Rational,
        samples: usize,
        p_max: PrecisionExp,
    ) -> Result<Vec<DerivativeViolation>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xde71);
        let mut out = Vec::new();
        let width = t_hi - t_lo;
        for p in 1..=p_max.get() {
            let prec = PrecisionExp::new(p)?;
            let reach = Rational::pow2(-i64::from((self.diff_modulus)(prec).get())).min(width.clone());
            for _ in 0..samples {
                let u = random_unit(&mut rng);
                let v = Rational::frac(rng.gen_range(1..=1024), 1024);
                let h = &reach * &v;
                let t1 = t_lo + &(&(&width - &h) * &u);
                let t2 = &t1 + &h;
                let eval = prec + 8 + recip_bits(&h);
                let phi1 = self.base.eval_point(std::slice::from_ref(&t1), eval, true)?;
                let phi2 = self.base.eval_point(std::slice::from_ref(&t2), eval, true)?;
                let slope = self.derivative.apply_vector(&t1, &phi1, eval)?;
                let residual = norm1(
                    &phi2
                        .iter()
                        .zip(&phi1)
                        .zip(&slope)
                        .map(|((b, a), s)| &(b - a) - &(s * &h))
                        .collect::<Vec<_>>(),
                );
                // phi(t1), phi(t2) and the slope are each off by at most 2^-eval
                let slack = eval.tolerance() * Rational::from(4);
                if residual > &(&prec.tolerance() * &h) + &slack {
                    out.push(DerivativeViolation { p, t1, t2, residual });
                }
            }
        }
        Ok(out)
    }
}

fn recip_bits(h: &Rational) -> u32 {
    Rational::one()
        .checked_div(h)
        .map(|r| r.le_abs_bound().get())
        .unwrap_or(1)
}

/// A sampled violation of one of the defining clauses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    Cauchy {
        p: u32,
        point: Vec<Rational>,
        n: u64,
        m: u64,
        gap: Rational,
    },
    Continuity {
        p: u32,
        a: Vec<Rational>,
        b: Vec<Rational>,
        n: u64,
        gap: Rational,
    },
    ConvergenceModulusDecreases {
        p: u32,
    },
    ContinuityModulusDecreases {
        p: u32,
    },
}

/// Outcome of a sampling check. Empty means no counterexample was found,
/// which is evidence, not proof.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_continuity_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::Continuity { .. }))
    }
}

trait SampledDomain {
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Rational>;
    /// Points worth always testing, such as interval endpoints.
    fn extreme_points(&self) -> Vec<Vec<Rational>>;
    /// A domain point at 1-norm distance at most `delta` from `a`,
    /// preferably exactly `delta`.
    fn partner(&self, a: &[Rational], delta: &Rational, rng: &mut ChaCha8Rng) -> Vec<Rational>;
    fn eval(&self, a: &[Rational], n: u64) -> Vec<Rational>;
    fn alpha(&self, p: PrecisionExp) -> u64;
    fn omega(&self, p: PrecisionExp) -> PrecisionExp;
}

fn random_unit(rng: &mut ChaCha8Rng) -> Rational {
    Rational::frac(rng.gen_range(0..=4096), 4096)
}

struct ScalarDomain<'a>(&'a UcfScalar);

impl SampledDomain for ScalarDomain<'_> {
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let f = self.0;
        vec![&f.lo + &(&(&f.hi - &f.lo) * &random_unit(rng))]
    }

    fn extreme_points(&self) -> Vec<Vec<Rational>> {
        vec![vec![self.0.lo.clone()], vec![self.0.hi.clone()]]
    }

    fn partner(&self, a: &[Rational], delta: &Rational, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let f = self.0;
        let up = &a[0] + delta;
        let down = &a[0] - delta;
        let b = match (up <= f.hi, down >= f.lo) {
            (true, true) if rng.gen_bool(0.5) => up,
            (true, _) => up,
            (_, true) => down,
            // the whole interval is within reach
            _ => {
                if rng.gen_bool(0.5) {
                    f.hi.clone()
                } else {
                    f.lo.clone()
                }
            }
        };
        vec![b]
    }

    fn eval(&self, a: &[Rational], n: u64) -> Vec<Rational> {
        vec![self.0.eval(&a[0], n)]
    }

    fn alpha(&self, p: PrecisionExp) -> u64 {
        self.0.alpha(p)
    }

    fn omega(&self, p: PrecisionExp) -> PrecisionExp {
        self.0.omega(p)
    }
}

struct BallDomain<'a>(&'a UcfVector);

impl BallDomain<'_> {
    /// Random direction with 1-norm exactly one.
    fn direction(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let dim = self.0.dim_in();
        loop {
            let raw: Vec<i64> = (0..dim).map(|_| rng.gen_range(-64..=64)).collect();
            let total: i64 = raw.iter().map(|v| v.abs()).sum();
            if total > 0 {
                return raw.into_iter().map(|v| Rational::frac(v, total)).collect();
            }
        }
    }
}

impl SampledDomain for BallDomain<'_> {
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let f = self.0;
        let dir = self.direction(rng);
        let scale = &f.radius * &random_unit(rng);
        f.center.iter().zip(&dir).map(|(c, d)| c + &(&scale * d)).collect()
    }

    fn extreme_points(&self) -> Vec<Vec<Rational>> {
        let f = self.0;
        let mut out = vec![f.center.clone()];
        for i in 0..f.dim_in() {
            for sign in [1i64, -1] {
                let mut v = f.center.clone();
                v[i] = &v[i] + &(&f.radius * &Rational::from(sign));
                out.push(v);
            }
        }
        out
    }

    fn partner(&self, a: &[Rational], delta: &Rational, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let f = self.0;
        let diameter = &f.radius * &Rational::from(2);
        if *delta >= diameter {
            return self.random_point(rng);
        }
        let dir = self.direction(rng);
        for sign in [1i64, -1] {
            let s = delta * &Rational::from(sign);
            let b: Vec<Rational> = a.iter().zip(&dir).map(|(x, d)| x + &(&s * d)).collect();
            if f.contains(&b) {
                return b;
            }
        }
        // step straight toward the center; the ball is convex
        let to_center = f.distance_from_center(a);
        if to_center <= *delta {
            return f.center.clone();
        }
        let s = delta.checked_div(&to_center).expect("positive distance");
        a.iter().zip(&f.center).map(|(x, c)| x + &(&s * &(c - x))).collect()
    }

    fn eval(&self, a: &[Rational], n: u64) -> Vec<Rational> {
        self.0.eval(a, n)
    }

    fn alpha(&self, p: PrecisionExp) -> u64 {
        self.0.alpha(p)
    }

    fn omega(&self, p: PrecisionExp) -> PrecisionExp {
        self.0.omega(p)
    }
}

fn run_validation(domain: &dyn SampledDomain, samples: usize, p_max: PrecisionExp) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut violations = Vec::new();
    for p in 1..=p_max.get() {
        let prec = PrecisionExp::new(p).expect("p >= 1");
        if p < p_max.get() {
            if domain.alpha(prec) > domain.alpha(prec + 1) {
                violations.push(Violation::ConvergenceModulusDecreases { p });
            }
            if domain.omega(prec) > domain.omega(prec + 1) {
                violations.push(Violation::ContinuityModulusDecreases { p });
            }
        }
        let tol = prec.tolerance();
        let start = domain.alpha(prec);
        let delta = Rational::pow2(1 - domain.omega(prec).get() as i64);

        let mut anchors = domain.extreme_points();
        anchors.extend((0..samples).map(|_| domain.random_point(&mut rng)));
        for a in &anchors {
            let base = domain.eval(a, start);
            for m in [start + 1, start + 3, start + 17] {
                let gap = norm1(&vec_sub(&base, &domain.eval(a, m)));
                if gap > tol {
                    violations.push(Violation::Cauchy {
                        p,
                        point: a.clone(),
                        n: start,
                        m,
                        gap,
                    });
                }
            }
            let b = domain.partner(a, &delta, &mut rng);
            let gap = norm1(&vec_sub(&base, &domain.eval(&b, start)));
            if gap > tol {
                violations.push(Violation::Continuity {
                    p,
                    a: a.clone(),
                    b,
                    n: start,
                    gap,
                });
            }
        }
    }
    ValidationReport { violations }
}

/// A named initial value problem shipped with the crate.
#[derive(Debug, Clone)]
pub struct BuiltinSystem {
    pub rhs: UcfVector,
    pub x0: Vec<Rational>,
    pub t_a: Rational,
    pub x_b: Rational,
    pub bound_c: Rational,
    pub lipschitz_l: Rational,
}

/// Built-in right-hand side names.
pub const BUILTIN_NAMES: [&str; 2] = ["exp", "circle"];

/// `x' = x` on inputs `(t, x)`, defined on the ball of radius 64 around `(0, 1)`.
pub fn exp_rhs() -> UcfVector {
    UcfVector::new(
        vec![Rational::zero(), Rational::one()],
        Rational::from(64),
        1,
        |a, _| vec![a[1].clone()],
        |_| 0,
        |p| p + 1,
        Descriptions {
            name: "exp".into(),
            approx: "h(t, x, n) = x".into(),
            conv_modulus: "alpha(p) = 0".into(),
            cont_modulus: "omega(p) = p + 1".into(),
        },
    )
    .expect("valid built-in")
}

/// `x' = -y, y' = x` on inputs `(t, x, y)`, defined on the ball of radius
/// 64 around the origin.
pub fn circle_rhs() -> UcfVector {
    UcfVector::new(
        vec![Rational::zero(); 3],
        Rational::from(64),
        2,
        |a, _| vec![-&a[2], a[1].clone()],
        |_| 0,
        |p| p + 1,
        Descriptions {
            name: "circle".into(),
            approx: "h(t, x, y, n) = (-y, x)".into(),
            conv_modulus: "alpha(p) = 0".into(),
            cont_modulus: "omega(p) = p + 1".into(),
        },
    )
    .expect("valid built-in")
}

/// The built-in system `name` with its default problem data.
pub fn builtin(name: &str) -> Option<BuiltinSystem> {
    match name {
        "exp" => Some(BuiltinSystem {
            rhs: exp_rhs(),
            x0: vec![Rational::one()],
            t_a: Rational::one(),
            x_b: Rational::one(),
            bound_c: Rational::from(2),
            lipschitz_l: Rational::one(),
        }),
        // x_b = 1/2 keeps ||f||_1 <= 2 on every restart box along the unit circle
        "circle" => Some(BuiltinSystem {
            rhs: circle_rhs(),
            x0: vec![Rational::one(), Rational::zero()],
            t_a: Rational::one(),
            x_b: Rational::frac(1, 2),
            bound_c: Rational::from(2),
            lipschitz_l: Rational::one(),
        }),
        _ => None,
    }
}

/// Named right-hand sides available for lookup and introspection.
#[derive(Debug, Clone, Default)]
pub struct UcfRegistry {
    entries: BTreeMap<String, UcfVector>,
}

impl UcfRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = UcfRegistry::default();
        reg.insert(exp_rhs());
        reg.insert(circle_rhs());
        reg
    }

    pub fn insert(&mut self, f: UcfVector) {
        self.entries.insert(f.name().to_string(), f);
    }

    pub fn get(&self, name: &str) -> Option<&UcfVector> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn metadata_json(&self) -> String {
        let metas: Vec<&UcfMetadata> = self.entries.values().map(UcfVector::metadata).collect();
        serde_json::to_string_pretty(&metas).expect("metadata serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn prec(p: u32) -> PrecisionExp {
        PrecisionExp::new(p).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn square_on_0_2(omega: fn(PrecisionExp) -> PrecisionExp) -> UcfScalar {
        UcfScalar::new(Rational::zero(), Rational::from(2), |a, _| a * a, |_| 0, omega).unwrap()
    }

    fn square_vec() -> UcfVector {
        UcfVector::new(
            vec![Rational::one()],
            Rational::one(),
            1,
            |a, _| vec![&a[0] * &a[0]],
            |_| 0,
            |p| p + 3,
            Descriptions::default(),
        )
        .unwrap()
    }

    /// Newton iterates for sqrt(2) from 3/2; the n-th iterate is within
    /// 2^-(2^n) of sqrt(2), so M(p) = ceil(log2 p) + 1 is a modulus.
    fn sqrt2() -> ConstructiveReal {
        ConstructiveReal::new(
            |n| {
                // eight steps already agree with sqrt 2 to far below 2^-300
                let mut x = r(3, 2);
                for _ in 0..n.min(8) {
                    x = (&x + &Rational::from(2).checked_div(&x).unwrap()) * r(1, 2);
                }
                x
            },
            |p| (32 - (p.get() - 1).leading_zeros()) as u64 + 1,
        )
    }

    #[test]
    fn square_example_applies() {
        let f = square_on_0_2(|p| p + 3);
        let y = f.apply(&ConstructiveReal::from_rational(r(3, 2))).unwrap();
        assert_eq!(y.approx(prec(10)), r(9, 4));
    }

    #[test]
    fn identity_application() {
        let id = UcfScalar::new(Rational::from(-4), Rational::from(4), |a, _| a.clone(), |_| 0, |p| p).unwrap();
        let x = ConstructiveReal::new(|n| Rational::one() - Rational::pow2(-(n as i64)), |p| p.get() as u64);
        let y = id.apply(&x).unwrap();
        assert!((1..=16).all(|p| y.eq_up_to(&x, prec(p))));
        assert!(y.modulus_is_monotone(12));
    }

    #[test]
    fn square_of_sqrt2() {
        let f = square_on_0_2(|p| p + 3);
        let y = f.apply(&sqrt2()).unwrap();
        let v = y.approx(prec(10));
        assert!((v - Rational::from(2)).abs() <= prec(10).tolerance());
        assert!(y.regularity_violation(12, 16).is_none());
    }

    #[test]
    fn application_rejects_far_arguments() {
        let f = square_on_0_2(|p| p + 3);
        let err = f.apply(&ConstructiveReal::from_rational(r(5, 2))).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
        // a Cauchy approximation of 2 from above is clamped, not rejected
        let above = ConstructiveReal::new(|n| Rational::from(2) + Rational::pow2(-(n as i64)), |p| p.get() as u64);
        let y = f.apply(&above).unwrap();
        assert!((y.approx(prec(12)) - Rational::from(4)).abs() <= prec(12).tolerance());
    }

    #[test]
    fn application_modulus_clamps_small_omega() {
        let f = UcfScalar::new(Rational::zero(), Rational::one(), |_, _| Rational::zero(), |_| 0, |_| PrecisionExp::ONE).unwrap();
        let x = ConstructiveReal::new(|n| Rational::pow2(-(n as i64)), |p| p.get() as u64 * 3);
        let y = f.apply(&x).unwrap();
        // omega(p+1) - 1 = 0 is raised to 1, so M(1) = 3
        assert_eq!(y.modulus(prec(4)), 3);
    }

    #[test]
    fn vector_application_examples() {
        let circle = circle_rhs();
        let out = circle
            .apply_vector(&Rational::zero(), &[Rational::one(), Rational::zero()], prec(10))
            .unwrap();
        assert_eq!(out, vec![Rational::zero(), Rational::one()]);
        let exp = exp_rhs();
        assert_eq!(
            exp.apply_vector(&Rational::zero(), &[Rational::one()], prec(5)).unwrap(),
            vec![Rational::one()]
        );
        let zero = UcfVector::new(
            vec![Rational::zero(); 3],
            Rational::from(10),
            2,
            |_, _| vec![Rational::zero(); 2],
            |_| 0,
            |p| p,
            Descriptions::default(),
        )
        .unwrap();
        for p in [1, 7, 30] {
            let out = zero.apply_vector(&r(1, 3), &[r(-2, 7), r(5, 3)], prec(p)).unwrap();
            assert_eq!(out, vec![Rational::zero(); 2]);
        }
    }

    #[test]
    fn vector_application_accuracy_and_dyadic_output() {
        let circle = circle_rhs();
        let x = [r(1, 3), r(-2, 7)];
        for p in 1..=16 {
            let out = circle.apply_vector(&Rational::zero(), &x, prec(p)).unwrap();
            let exact = [r(2, 7), r(1, 3)];
            assert!(norm1(&vec_sub(&out, &exact)) <= prec(p).tolerance());
            for v in &out {
                // p + ceil(log2 2) + 2 bits
                assert_eq!((BigInt::from(1) << (p + 3)) % v.denom(), BigInt::from(0));
            }
            let raw = circle.apply_vector_with(&Rational::zero(), &x, prec(p), false).unwrap();
            assert_eq!(raw, exact.to_vec());
        }
    }

    #[test]
    fn ball_exit_is_a_range_error() {
        let circle = circle_rhs();
        let err = circle
            .apply_vector(&Rational::from(60), &[Rational::from(5), Rational::zero()], prec(4))
            .unwrap_err();
        assert!(matches!(err, Error::Range(_)));
        // a hair outside is pulled back onto the ball
        let edge = circle
            .apply_vector(&Rational::from(64), &[Rational::pow2(-12), Rational::zero()], prec(10))
            .unwrap();
        assert_eq!(edge.len(), 2);
    }

    #[test]
    fn successive_precisions_agree() {
        let f = square_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = r(rng.gen_range(0..=2000), 1000);
            for p in 1..=12 {
                let lo = f.eval_point(std::slice::from_ref(&a), prec(p), true).unwrap();
                let hi = f.eval_point(std::slice::from_ref(&a), prec(p + 1), true).unwrap();
                let gap = norm1(&vec_sub(&lo, &hi));
                assert!(gap <= prec(p).tolerance() + prec(p + 1).tolerance());
            }
        }
    }

    #[test]
    fn square_matches_exact_square_on_random_points() {
        let f = square_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = r(rng.gen_range(0..=1 << 20), 1 << 19);
            for p in [1, 5, 10, 20] {
                let out = f.eval_point(std::slice::from_ref(&a), prec(p), true).unwrap();
                assert!((&out[0] - &(&a * &a)).abs() <= prec(p).tolerance());
            }
        }
    }

    #[test]
    fn validation_accepts_square_with_paper_modulus() {
        assert!(square_on_0_2(|p| p + 3).validate(200, prec(12)).is_empty());
    }

    #[test]
    fn validation_catches_bad_continuity_modulus() {
        let report = square_on_0_2(|_| PrecisionExp::ONE).validate(50, prec(6));
        assert!(report.has_continuity_violation());
    }

    #[test]
    fn validation_accepts_constant() {
        let c = UcfScalar::new(Rational::from(-3), Rational::from(3), |_, _| r(7, 5), |_| 0, |_| PrecisionExp::ONE).unwrap();
        assert!(c.validate(100, prec(12)).is_empty());
    }

    #[test]
    fn validation_checks_monotone_moduli() {
        let f = UcfScalar::new(Rational::zero(), Rational::one(), |a, _| a.clone(), |p| 10 - p.get() as u64 % 10, |p| p).unwrap();
        let report = f.validate(5, prec(4));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ConvergenceModulusDecreases { .. })));
    }

    #[test]
    fn validation_catches_non_cauchy_map() {
        let f = UcfScalar::new(Rational::zero(), Rational::one(), |_, n| Rational::from((n % 2) as i64), |_| 0, |p| p).unwrap();
        let report = f.validate(5, prec(3));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Cauchy { .. })));
    }

    #[test]
    fn builtins_pass_validation() {
        let report = exp_rhs().validate(100, prec(12));
        assert!(report.is_empty(), "{:?}", report.violations.first());
        assert!(circle_rhs().validate(100, prec(12)).is_empty());
    }

    #[test]
    fn omega_equal_to_p_fails_the_continuity_clause_for_circle() {
        let literal = UcfVector::new(
            vec![Rational::zero(); 3],
            Rational::from(64),
            2,
            |a, _| vec![-&a[2], a[1].clone()],
            |_| 0,
            |p| p,
            Descriptions::default(),
        )
        .unwrap();
        assert!(literal.validate(100, prec(8)).has_continuity_violation());
    }

    #[test]
    fn registry_introspection() {
        let reg = UcfRegistry::with_builtins();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["circle", "exp"]);
        let json: serde_json::Value = serde_json::from_str(&reg.metadata_json()).unwrap();
        assert_eq!(json[1]["name"], "exp");
        assert_eq!(json[1]["center"][1], "1");
        assert_eq!(json[0]["dim_in"], 3);
        assert!(builtin("circle").is_some());
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn derivative_witness_for_t_squared() {
        let base = UcfVector::new(
            vec![Rational::one()],
            Rational::one(),
            1,
            |a, _| vec![&a[0] * &a[0]],
            |_| 0,
            |p| p + 3,
            Descriptions::default(),
        )
        .unwrap();
        let deriv = UcfVector::new(
            vec![Rational::one(), Rational::from(2)],
            Rational::from(4),
            1,
            |a, _| vec![&a[0] * &Rational::from(2)],
            |_| 0,
            |p| p + 2,
            Descriptions::default(),
        )
        .unwrap();
        let good = DerivativeWitness::new(base.clone(), deriv.clone(), |p| p).unwrap();
        assert!(good.check(&Rational::zero(), &Rational::from(2), 30, prec(8)).unwrap().is_empty());
        let bad = DerivativeWitness::new(base, deriv, |_| PrecisionExp::ONE).unwrap();
        assert!(!bad.check(&Rational::zero(), &Rational::from(2), 30, prec(8)).unwrap().is_empty());
    }
}
