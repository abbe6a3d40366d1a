//! Cauchy-Euler approximate solutions of `x' = f(t, x)`, `x(t0) = x0`.
//!
//! Given a uniformly continuous right-hand side `f` with `||f||_1 <= C` on
//! the box `B' = {|t - t0| <= t_a, ||x - x0||_1 <= x_b}` and a precision
//! `p`, [`solve`] builds a piecewise linear `phi` on `[t0, t0 + T]`,
//! `T = min(t_a, x_b / C)`, whose defect `||phi'(t) - f(t, phi(t))||_1`
//! is at most `2^-p` wherever `phi'` exists:
//!
//! 1. `q = omega(p + 1)`, so inputs `2^(-q+1)` apart give outputs
//!    `2^-(p+1)` apart;
//! 2. a uniform partition with mesh `<= 2^-(q + le_abs_bound(C))`, which
//!    keeps every segment's time and state drift within `2^-q`;
//! 3. slopes `s_i` within `2^-(p+1)` of `f(c_i, b_i)` and exact nodes
//!    `b_{i+1} = b_i + (c_{i+1} - c_i) s_i`.
//!
//! With a Lipschitz constant `L` the distance to the exact solution is then
//! bounded by [`global_error_bound`].

use std::fmt::Write as _;

use num_integer::Integer;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{unif_p, Partition};
use crate::rational::{norm1, vec_axpy, vec_sub, PrecisionExp, Rational};
use crate::ucf::{fmt_vec, BuiltinSystem, UcfVector};

/// Precision used when spot-checking the bound `C` on `B'`.
const BOUND_CHECK_PREC: u32 = 8;
/// Random points per bound check, on top of the box corners.
const BOUND_CHECK_SAMPLES: usize = 24;

/// An initial value problem together with the data the construction needs.
#[derive(Debug, Clone)]
pub struct EulerProblem {
    pub rhs: UcfVector,
    pub x0: Vec<Rational>,
    /// Start time; zero unless the problem is a restart.
    pub t0: Rational,
    pub t_a: Rational,
    pub x_b: Rational,
    pub bound_c: Rational,
    pub lipschitz_l: Option<Rational>,
    /// Compress the reals behind every slope evaluation.
    pub compress: bool,
    /// Where `C` and `L` are known to hold, if narrower than the ball of
    /// `rhs`. Every (re)start box must lie inside it.
    pub region: Option<StateRegion>,
}

/// The 1-norm ball `||x - center||_1 <= radius` in state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRegion {
    pub center: Vec<Rational>,
    pub radius: Rational,
}

impl EulerProblem {
    pub fn new(
        rhs: UcfVector,
        x0: Vec<Rational>,
        t_a: Rational,
        x_b: Rational,
        bound_c: Rational,
        lipschitz_l: Option<Rational>,
    ) -> Result<Self> {
        let problem = EulerProblem {
            rhs,
            x0,
            t0: Rational::zero(),
            t_a,
            x_b,
            bound_c,
            lipschitz_l,
            compress: true,
            region: None,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// The default problem of a built-in system.
    pub fn from_builtin(sys: &BuiltinSystem) -> Result<Self> {
        EulerProblem::new(
            sys.rhs.clone(),
            sys.x0.clone(),
            sys.t_a.clone(),
            sys.x_b.clone(),
            sys.bound_c.clone(),
            Some(sys.lipschitz_l.clone()),
        )
    }

    pub fn with_compression(mut self, compress: bool) -> Self {
        self.compress = compress;
        self
    }

    /// Restricts all (re)start boxes to `region`.
    pub fn with_region(mut self, region: StateRegion) -> Result<Self> {
        self.region = Some(region);
        self.validate()?;
        Ok(self)
    }

    /// The same problem restarted from `x0` at time `t0`, re-validated.
    pub fn restarted_at(&self, t0: Rational, x0: Vec<Rational>) -> Result<Self> {
        let problem = EulerProblem {
            t0,
            x0,
            ..self.clone()
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// `T = min(t_a, x_b / C)`.
    pub fn horizon(&self) -> Rational {
        let reach = self.x_b.checked_div(&self.bound_c).expect("C > 0 after validation");
        self.t_a.clone().min(reach)
    }

    /// Checks positivity of the box data, `B'` inside the ball of `rhs`, and
    /// `||f||_1 <= C + 2^-8` on the corners of `B'` and a few random points.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_a", &self.t_a), ("x_b", &self.x_b), ("C", &self.bound_c)] {
            if !v.is_positive() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(l) = &self.lipschitz_l {
            if !l.is_positive() {
                return Err(Error::Config(format!("L must be positive, got {l}")));
            }
        }
        if self.x0.is_empty() {
            return Err(Error::Config("initial state is empty".into()));
        }
        if self.rhs.dim_in() != self.dim() + 1 || self.rhs.dim_out() != self.dim() {
            return Err(Error::Config(format!(
                "right-hand side maps R^{} to R^{}, expected R^{} to R^{}",
                self.rhs.dim_in(),
                self.rhs.dim_out(),
                self.dim() + 1,
                self.dim()
            )));
        }
        let mut corner = vec![self.t0.clone()];
        corner.extend_from_slice(&self.x0);
        let reach = self.rhs.distance_from_center(&corner) + &self.t_a + &self.x_b;
        if reach > *self.rhs.radius() {
            return Err(Error::Config(format!(
                "box |t - {}| <= {}, ||x - {}||_1 <= {} is not inside the ball of radius {} around {}",
                self.t0,
                self.t_a,
                fmt_vec(&self.x0),
                self.x_b,
                self.rhs.radius(),
                fmt_vec(self.rhs.center())
            )));
        }
        if let Some(region) = &self.region {
            let offset = norm1(&vec_sub(&self.x0, &region.center));
            if region.center.len() != self.dim() || &offset + &self.x_b > region.radius {
                return Err(Error::Config(format!(
                    "box ||x - {}||_1 <= {} leaves the certified region ||x - {}||_1 <= {}",
                    fmt_vec(&self.x0),
                    self.x_b,
                    fmt_vec(&region.center),
                    region.radius
                )));
            }
        }
        self.check_bound()
    }

    fn check_bound(&self) -> Result<()> {
        let prec = PrecisionExp::new(BOUND_CHECK_PREC).expect("positive");
        let limit = &self.bound_c + &prec.tolerance();
        let mut points = Vec::new();
        for t in [&self.t0 - &self.t_a, self.t0.clone(), &self.t0 + &self.t_a] {
            points.push((t.clone(), self.x0.clone()));
            for i in 0..self.dim() {
                for sign in [1i64, -1] {
                    let mut x = self.x0.clone();
                    x[i] = &x[i] + &(&self.x_b * &Rational::from(sign));
                    points.push((t.clone(), x));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
        for _ in 0..BOUND_CHECK_SAMPLES {
            let t = &self.t0 + &(&self.t_a * &Rational::frac(rng.gen_range(-256..=256), 256));
            let raw: Vec<i64> = (0..self.dim()).map(|_| rng.gen_range(-64..=64)).collect();
            let total = raw.iter().map(|v| v.abs()).sum::<i64>().max(1);
            let radius = &self.x_b * &Rational::frac(rng.gen_range(0..=256), 256);
            let x = self
                .x0
                .iter()
                .zip(&raw)
                .map(|(c, v)| c + &(&radius * &Rational::frac(*v, total)))
                .collect();
            points.push((t, x));
        }
        for (t, x) in points {
            let value = self.rhs.apply_vector(&t, &x, prec)?;
            let size = norm1(&value);
            if size > limit {
                return Err(Error::Config(format!(
                    "||f(t, x)||_1 = {} exceeds C = {} at t = {}, x = {}",
                    size.to_decimal(6),
                    self.bound_c,
                    t,
                    fmt_vec(&x)
                )));
            }
        }
        Ok(())
    }
}

/// A piecewise linear approximate solution.
///
/// On `[c_{i-1}, c_i]` the curve is `b_{i-1} + (t - c_{i-1}) s_{i-1}`, so
/// `nodes[i]` is its value at `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSolution {
    pub partition: Partition,
    pub nodes: Vec<Vec<Rational>>,
    pub slopes: Vec<Vec<Rational>>,
    pub p: PrecisionExp,
    /// Length of the covered time interval.
    pub horizon: Rational,
    /// Start times of the solve segments; more than one after chaining.
    pub restarts: Vec<Rational>,
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    horizon: &'a Rational,
    p: u32,
    partition: &'a [Rational],
    nodes: &'a [Vec<Rational>],
    slopes: &'a [Vec<Rational>],
    defect_bound: String,
}

impl EulerSolution {
    pub fn start(&self) -> &Rational {
        self.partition.lo()
    }

    pub fn end(&self) -> &Rational {
        self.partition.hi()
    }

    pub fn steps(&self) -> usize {
        self.slopes.len()
    }

    pub fn defect_bound(&self) -> Rational {
        self.p.tolerance()
    }

    /// `phi(t)` by exact rational arithmetic.
    pub fn eval(&self, t: &Rational) -> Result<Vec<Rational>> {
        if t < self.start() || t > self.end() {
            return Err(Error::Range(format!(
                "t = {t} lies outside [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let points = self.partition.points();
        let i = points.partition_point(|c| c < t);
        if i == 0 {
            return Ok(self.nodes[0].clone());
        }
        Ok(vec_axpy(&self.nodes[i - 1], &(t - &points[i - 1]), &self.slopes[i - 1]))
    }

    /// Largest denominator bit length over all slope components.
    pub fn max_slope_denominator_bits(&self) -> u64 {
        self.slopes
            .iter()
            .flatten()
            .map(Rational::denom_bits)
            .max()
            .unwrap_or(0)
    }

    /// Exact structural checks: node recursion, `||s_i||_1 <= C` and
    /// admissibility of every node with respect to its segment's start.
    pub fn check_invariants(&self, problem: &EulerProblem) -> Result<()> {
        let points = self.partition.points();
        if self.nodes.len() != points.len() || self.slopes.len() + 1 != points.len() {
            return Err(Error::Config("solution arrays have inconsistent lengths".into()));
        }
        let mut anchor = self.nodes[0].clone();
        let mut next_restart = 1;
        for i in 0..self.slopes.len() {
            if next_restart < self.restarts.len() && points[i] == self.restarts[next_restart] {
                anchor = self.nodes[i].clone();
                next_restart += 1;
            }
            let step = &points[i + 1] - &points[i];
            if vec_axpy(&self.nodes[i], &step, &self.slopes[i]) != self.nodes[i + 1] {
                return Err(Error::Config(format!("node {} breaks the Euler recursion", i + 1)));
            }
            if norm1(&self.slopes[i]) > problem.bound_c {
                return Err(Error::Config(format!("slope {i} exceeds C")));
            }
            if norm1(&vec_sub(&self.nodes[i + 1], &anchor)) > problem.x_b {
                return Err(Error::Config(format!("node {} leaves the box", i + 1)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionJson {
            horizon: &self.horizon,
            p: self.p.get(),
            partition: self.partition.points(),
            nodes: &self.nodes,
            slopes: &self.slopes,
            defect_bound: format!("2^-{}", self.p),
        };
        serde_json::to_string_pretty(&doc).expect("solution serializes")
    }

    /// `t,x1,...,xn` per knot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.nodes[0].len() {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (c, b) in self.partition.points().iter().zip(&self.nodes) {
            let _ = write!(out, "{c}");
            for v in b {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    fn append(&mut self, next: EulerSolution) {
        let mut points = self.partition.points().to_vec();
        points.extend_from_slice(&next.partition.points()[1..]);
        self.partition = Partition::new(points).expect("segments are contiguous");
        self.nodes.extend(next.nodes.into_iter().skip(1));
        self.slopes.extend(next.slopes);
        self.horizon = &self.horizon + &next.horizon;
        self.restarts.extend(next.restarts);
    }
}

/// Literal recursive Euler map:
/// `E(0) = a`, `E(n+1) = E(n) + d f(n d, E(n))`, slopes at precision `p`.
///
/// The recursive call is made twice per level, as in the defining
/// equations, so the cost is exponential in `n`. It exists as the reference
/// against which [`euler_map_fast`] is checked.
pub fn euler_map(f: &UcfVector, a: &[Rational], n: u32, d: &Rational, p: PrecisionExp) -> Result<Vec<Rational>> {
    if n == 0 {
        return Ok(a.to_vec());
    }
    let prev = euler_map(f, a, n - 1, d, p)?;
    let time = d * &Rational::from(i64::from(n - 1));
    let slope = f.apply_vector(&time, &euler_map(f, a, n - 1, d, p)?, p)?;
    Ok(vec_axpy(&prev, d, &slope))
}

/// Iterative Euler map on a `(previous, current)` pair: each of the `n`
/// steps replaces `(l, r)` by `(r, r + d f(k d, r))`, `k = 0, 1, ...`.
/// Starting from `(_, a)` the right component equals
/// [`euler_map`]`(f, a, n, d, p)`.
pub fn euler_map_fast(
    f: &UcfVector,
    n: u32,
    state: (Vec<Rational>, Vec<Rational>),
    d: &Rational,
    p: PrecisionExp,
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let (mut left, mut right) = state;
    for k in 0..n {
        let time = d * &Rational::from(i64::from(k));
        let slope = f.apply_vector(&time, &right, p)?;
        let next = vec_axpy(&right, d, &slope);
        left = std::mem::replace(&mut right, next);
    }
    Ok((left, right))
}

/// Smallest `k >= 1` with `mesh(unif_p(length, k)) <= 2^-target`.
fn partition_precision(length: &Rational, target: u32) -> PrecisionExp {
    let lab = length.le_abs_bound().get() as i64;
    let goal = Rational::pow2(-(target as i64));
    (1..=target)
        .map(|k| PrecisionExp::new(k).expect("k >= 1"))
        .find(|k| length.mul_pow2(-(k.get() as i64 + lab)) <= goal)
        .unwrap_or_else(|| PrecisionExp::new(target).expect("target >= 1"))
}

/// Slope at `(t, x)` within `2^-(p+1)` of `f(t, x)` and with 1-norm at
/// most `C`.
fn slope(problem: &EulerProblem, t: &Rational, x: &[Rational], p: PrecisionExp) -> Result<Vec<Rational>> {
    let s = problem.rhs.apply_vector_with(t, x, p + 1, problem.compress)?;
    if norm1(&s) <= problem.bound_c {
        return Ok(s);
    }
    // Pull a 2^-(p+2) approximation radially onto the C-ball. Since
    // ||f|| <= C the pull moves it by at most 2^-(p+2).
    let s = problem.rhs.apply_vector_with(t, x, p + 2, problem.compress)?;
    let size = norm1(&s);
    if size <= problem.bound_c {
        return Ok(s);
    }
    let scale = problem.bound_c.checked_div(&size)?;
    Ok(s.iter().map(|v| v * &scale).collect())
}

/// The approximate solution on `[t0, t0 + T]` with defect at most `2^-p`.
pub fn solve(problem: &EulerProblem, p: PrecisionExp) -> Result<EulerSolution> {
    let q = problem.rhs.omega(p + 1);
    let target = q.get() + problem.bound_c.le_abs_bound().get();
    let horizon = problem.horizon();
    let partition = unif_p(&horizon, partition_precision(&horizon, target))?.shifted(&problem.t0);

    let points = partition.points();
    let mut nodes = Vec::with_capacity(points.len());
    let mut slopes = Vec::with_capacity(points.len() - 1);
    nodes.push(problem.x0.clone());
    for i in 0..points.len() - 1 {
        let here = &nodes[i];
        let s = slope(problem, &points[i], here, p)?;
        let next = vec_axpy(here, &(&points[i + 1] - &points[i]), &s);
        if norm1(&vec_sub(&next, &problem.x0)) > problem.x_b {
            return Err(Error::Range(format!(
                "node at t = {} leaves the box around {}",
                points[i + 1],
                fmt_vec(&problem.x0)
            )));
        }
        slopes.push(s);
        nodes.push(next);
    }
    Ok(EulerSolution {
        restarts: vec![problem.t0.clone()],
        partition,
        nodes,
        slopes,
        p,
        horizon,
    })
}

/// Repeats [`solve`] from each terminal node until the covered interval
/// reaches `t_end`. Every restart re-validates the problem data around the
/// new initial point.
pub fn solve_chained(problem: &EulerProblem, p: PrecisionExp, t_end: &Rational) -> Result<EulerSolution> {
    if t_end <= &problem.t0 {
        return Err(Error::Domain(format!("end time {t_end} is not after the start {}", problem.t0)));
    }
    let mut solution = solve(problem, p)?;
    while solution.end() < t_end {
        let restart = solution.end().clone();
        let x0 = solution.nodes.last().expect("nonempty").clone();
        let next = problem.restarted_at(restart.clone(), x0).map_err(|e| {
            let detail = match e {
                Error::Config(msg) | Error::Range(msg) | Error::Domain(msg) => msg,
                other => other.to_string(),
            };
            Error::Config(format!("restart at t = {restart}: {detail}"))
        })?;
        solution.append(solve(&next, p)?);
    }
    Ok(solution)
}

/// One sampled point whose defect exceeded the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectViolation {
    pub segment: usize,
    pub t: Rational,
    pub defect: Rational,
}

/// Result of [`defect_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub p: u32,
    pub tolerance: Rational,
    pub checked: usize,
    pub max_defect: Rational,
    pub violations: Vec<DefectViolation>,
}

impl CertificateReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `samples` interior points of every segment and checks
/// `||s_{i-1} - f(t, phi(t))||_1 <= 2^-p + 2^-(p+4)`, evaluating `f` to
/// `2^-(p+4)`.
pub fn defect_certificate(sol: &EulerSolution, problem: &EulerProblem, samples: usize) -> Result<CertificateReport> {
    let check = sol.p + 4;
    let tolerance = &sol.p.tolerance() + &check.tolerance();
    let points = sol.partition.points();
    let denom = Rational::from((samples + 1) as i64);
    let mut report = CertificateReport {
        p: sol.p.get(),
        tolerance: tolerance.clone(),
        checked: 0,
        max_defect: Rational::zero(),
        violations: Vec::new(),
    };
    for (i, slope) in sol.slopes.iter().enumerate() {
        let width = &points[i + 1] - &points[i];
        let step = width.checked_div(&denom)?;
        for j in 1..=samples {
            let offset = &step * &Rational::from(j as i64);
            let t = &points[i] + &offset;
            let phi = vec_axpy(&sol.nodes[i], &offset, slope);
            let value = problem.rhs.apply_vector(&t, &phi, check)?;
            let defect = norm1(&vec_sub(slope, &value));
            report.checked += 1;
            if defect > tolerance {
                report.violations.push(DefectViolation {
                    segment: i,
                    t,
                    defect: defect.clone(),
                });
            }
            if defect > report.max_defect {
                report.max_defect = defect;
            }
        }
    }
    Ok(report)
}

/// Rational upper bound of `2^-p (e^{L T} - 1) / L`, the distance between a
/// defect-`2^-p` approximate solution and the exact solution on `[0, T]`
/// when `f` is `L`-Lipschitz in the state.
pub fn global_error_bound(p: PrecisionExp, lipschitz_l: &Rational, horizon: &Rational) -> Result<Rational> {
    if !lipschitz_l.is_positive() || !horizon.is_positive() {
        return Err(Error::Domain(format!(
            "L and T must be positive, got L = {lipschitz_l}, T = {horizon}"
        )));
    }
    let x = lipschitz_l * horizon;
    let exp_upper = exp_upper_bound(&x);
    let growth = (exp_upper - Rational::one()).checked_div(lipschitz_l)?;
    Ok(&p.tolerance() * &growth)
}

/// Upper bound of `e^x` for `x >= 0`: the series through `x^K / K!` plus
/// `2 x^(K+1) / (K+1)!`, which dominates the tail once `K + 1 >= 2x`.
/// `K` is the least such index plus 8.
fn exp_upper_bound(x: &Rational) -> Rational {
    let twice = x * &Rational::from(2);
    let least = Integer::div_ceil(twice.numer(), twice.denom());
    let least = (i64::try_from(least).unwrap_or(i64::MAX) - 1).max(0);
    let last = least + 8;
    let mut term = Rational::one();
    let mut sum = Rational::one();
    for k in 1..=last {
        term = (&term * x).checked_div(&Rational::from(k)).expect("k > 0");
        sum += &term;
    }
    let remainder = (&term * x).checked_div(&Rational::from(last + 1)).expect("positive");
    sum + remainder * Rational::from(2)
}
