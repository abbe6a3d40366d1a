//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use exact_euler::rational::vec_sub;
use exact_euler::real::RealVector;
use exact_euler::{
    builtin, defect_certificate, euler_map, euler_map_fast, global_error_bound, norm1, solve, solve_chained, unif_p,
    ConstructiveReal, EulerProblem, EulerSolution, Partition, Rational,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exp_problem() -> EulerProblem {
    EulerProblem::from_builtin(&builtin("exp").unwrap()).unwrap()
}

fn circle_problem() -> EulerProblem {
    EulerProblem::from_builtin(&builtin("circle").unwrap()).unwrap()
}

fn sci(v: &Rational) -> String {
    format!("{:.3e}", v.to_decimal(12).parse::<f64>().unwrap_or(f64::NAN))
}

fn example_1() -> Outcome {
    let started = Instant::now();
    let sol = solve(&exp_problem(), prec(10)).map_err(|e| e.to_string())?;
    let value = sol.eval(&Rational::frac(1, 2)).map_err(|e| e.to_string())?[0].clone();
    let elapsed = started.elapsed();
    let oracle = dec(SQRT_E);
    let bound = global_error_bound(prec(10), &Rational::one(), &Rational::frac(1, 2)).unwrap();
    let err = (&value - &oracle).abs();
    check(&err + &oracle_slack() <= bound, || format!("error {} exceeds bound {}", sci(&err), sci(&bound)))?;
    let reference = Rational::frac(55317227, 33554432);
    let ref_err = (&reference - &oracle).abs();
    check(&ref_err + &oracle_slack() <= bound, || "reference value outside the bound".into())?;
    check(elapsed <= Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "x(1/2) = {} (error {}, bound {}, {:?})",
        value.to_decimal(8),
        sci(&err),
        sci(&bound),
        elapsed
    ))
}

fn example_2() -> Outcome {
    let started = Instant::now();
    let t_end = Rational::frac(TWO_PI_DYADIC.0, TWO_PI_DYADIC.1);
    let sol = solve_chained(&circle_problem(), prec(16), &t_end).map_err(|e| e.to_string())?;
    let value = sol.eval(&t_end).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let oracle = [dec(COS_TWO_PI_DYADIC), dec(SIN_TWO_PI_DYADIC)];
    let err = norm1(&vec_sub(&value, &oracle));
    let bound = global_error_bound(prec(16), &Rational::one(), &t_end).unwrap();
    let slack = &oracle_slack() * &Rational::from(2);
    check(&err + &slack <= bound, || format!("error {} exceeds bound {}", sci(&err), sci(&bound)))?;
    check(&err + &slack <= Rational::frac(1, 100), || format!("error {} above 1e-2", sci(&err)))?;
    check(elapsed <= Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} steps, {} restarts, error {}, bound {}, {:?}",
        sol.steps(),
        sol.restarts.len(),
        sci(&err),
        sci(&bound),
        elapsed
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let systems = [builtin("exp").unwrap(), builtin("circle").unwrap()];
    for case in 0..200 {
        let sys = &systems[case % 2];
        let n = rng.gen_range(0..=10);
        let d = Rational::frac(rng.gen_range(1..=64), 256);
        let p = prec(rng.gen_range(1..=20));
        let start: Vec<Rational> = sys
            .x0
            .iter()
            .map(|c| c + &Rational::frac(rng.gen_range(-64..=64), 256))
            .collect();
        let slow = euler_map(&sys.rhs, &start, n, &d, p).map_err(|e| e.to_string())?;
        let (_, fast) = euler_map_fast(&sys.rhs, n, (Vec::new(), start.clone()), &d, p).map_err(|e| e.to_string())?;
        check(slow == fast, || format!("case {case}: n = {n}, d = {d}, p = {p}"))?;
    }
    Ok("200 randomized instances agree exactly".into())
}

fn certificate(problem: &EulerProblem, p: u32) -> Result<(EulerSolution, usize), String> {
    let sol = solve(problem, prec(p)).map_err(|e| e.to_string())?;
    let report = defect_certificate(&sol, problem, 200).map_err(|e| e.to_string())?;
    check(report.is_empty(), || {
        format!("p = {p}: {} violations, max defect {}", report.violations.len(), sci(&report.max_defect))
    })?;
    Ok((sol, report.checked))
}

fn defect_certificates() -> Outcome {
    let mut checked = 0;
    for (name, problem) in [("exp", exp_problem()), ("circle", circle_problem())] {
        for p in [6, 8, 10] {
            let (mut sol, n) = certificate(&problem, p).map_err(|e| format!("{name}: {e}"))?;
            checked += n;
            let k = sol.steps() / 2;
            sol.slopes[k][0] = &sol.slopes[k][0] + &(&prec(p).tolerance() * &Rational::from(2));
            let report = defect_certificate(&sol, &problem, 200).map_err(|e| e.to_string())?;
            check(!report.is_empty(), || format!("{name}, p = {p}: perturbed slope not detected"))?;
        }
    }
    Ok(format!("{checked} sampled points certified, perturbations detected"))
}

fn partition_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let b = Rational::frac(rng.gen_range(1..=100_000), 1000);
        let p = prec(rng.gen_range(1..=10));
        let part = unif_p(&b, p).map_err(|e| e.to_string())?;
        Partition::new(part.points().to_vec()).map_err(|e| e.to_string())?;
        check(part.lo().is_zero() && part.hi() == &b, || format!("endpoints of unif_p({b}, {p})"))?;
        let mesh = part.mesh().map_err(|e| e.to_string())?;
        check(mesh <= p.tolerance(), || format!("mesh {mesh} of unif_p({b}, {p})"))?;
    }
    Ok("100 random (b, p) partitions".into())
}

enum Known {
    Value(Rational),
    Unknown,
}

fn random_real(rng: &mut ChaCha8Rng, depth: u32) -> (ConstructiveReal, Known) {
    let pick = if depth == 0 { rng.gen_range(0..4) } else { rng.gen_range(0..8) };
    match pick {
        0 => {
            let v = Rational::frac(rng.gen_range(-1000..=1000), rng.gen_range(1..=97));
            (ConstructiveReal::from_rational(v.clone()), Known::Value(v))
        }
        1 => (e(), Known::Value(dec(E))),
        2 => (exp_series(1, 2), Known::Value(dec(SQRT_E))),
        3 => (sqrt2(), Known::Value(dec(SQRT2))),
        4 => {
            let (a, _) = random_real(rng, depth - 1);
            let (b, _) = random_real(rng, depth - 1);
            (a.add(&b), Known::Unknown)
        }
        5 => {
            let (a, _) = random_real(rng, depth - 1);
            let (b, _) = random_real(rng, depth - 1);
            (a.mul(&b), Known::Unknown)
        }
        6 => {
            let (a, known) = random_real(rng, depth - 1);
            (a.compress(), known)
        }
        _ => {
            let (a, known) = random_real(rng, depth - 1);
            let known = match known {
                Known::Value(v) => Known::Value(-v),
                Known::Unknown => Known::Unknown,
            };
            (a.neg(), known)
        }
    }
}

fn real_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cases = 600;
    for case in 0..cases {
        let depth = rng.gen_range(0..=3);
        let (x, known) = random_real(&mut rng, depth);
        if let Some((p, n, m)) = x.regularity_violation(10, 24) {
            return Err(format!("case {case}: |a_{n} - a_{m}| > 2^-{p}"));
        }
        check(x.modulus_is_monotone(12), || format!("case {case}: modulus not monotone"))?;
        for p in [1, 4, 9, 14] {
            let approx = x.approx(prec(p));
            let sound = match &known {
                Known::Value(v) => (&approx - v).abs() <= &prec(p).tolerance() + &oracle_slack(),
                // proxy: agreement with a much finer approximation
                Known::Unknown => (&approx - &x.approx(prec(p + 30))).abs() <= &prec(p).tolerance() + &prec(p + 30).tolerance(),
            };
            check(sound, || format!("case {case}: approx at p = {p} off"))?;
        }
        let c = x.compress();
        check(c.eq_up_to(&x, prec(12)), || format!("case {case}: compressed real differs"))?;
        for n in [0u64, 1, 5, 13] {
            let bits = c.term(n).denom_bits();
            check(bits <= n + 1, || format!("case {case}: b_{n} has a {bits}-bit denominator"))?;
            let scaled = c.term(n).mul_pow2(n as i64);
            check(scaled.denom() == &1.into(), || format!("case {case}: 2^{n} b_{n} not an integer"))?;
        }
    }
    Ok(format!("{cases} generated reals"))
}

fn compression_benchmark() -> Outcome {
    let t_end = Rational::frac(1, 2);
    let p = prec(6);
    let on = Instant::now();
    let with = solve_chained(&circle_problem(), p, &t_end).map_err(|e| e.to_string())?;
    let on = on.elapsed();
    let off = Instant::now();
    let without = solve_chained(&circle_problem().with_compression(false), p, &t_end).map_err(|e| e.to_string())?;
    let off = off.elapsed();
    check(with.steps() >= 256, || format!("only {} steps", with.steps()))?;
    let (a, b) = (with.max_slope_denominator_bits(), without.max_slope_denominator_bits());
    check(a <= u64::from(p.get()) + 16, || format!("compressed slopes reach {a} bits"))?;
    check(a < b, || format!("compressed {a} bits, uncompressed {b} bits"))?;
    Ok(format!(
        "{} steps: {a} bits compressed ({on:?}), {b} bits uncompressed ({off:?})",
        with.steps()
    ))
}

fn real_vec_approx() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let dim = rng.gen_range(1..=5);
        let mut comps = Vec::new();
        let mut oracle = Vec::new();
        for _ in 0..dim {
            let (x, v) = match rng.gen_range(0..5) {
                0 => (e(), dec(E)),
                1 => (exp_series(1, 2), dec(SQRT_E)),
                2 => (sqrt2(), dec(SQRT2)),
                3 => (e().neg(), -dec(E)),
                _ => {
                    let v = Rational::frac(rng.gen_range(-500..=500), rng.gen_range(1..=31));
                    (ConstructiveReal::from_rational(v.clone()), v)
                }
            };
            comps.push(x);
            oracle.push(v);
        }
        let vector = RealVector::new(comps).map_err(|e| e.to_string())?;
        let p = prec(rng.gen_range(1..=12));
        let dist = norm1(&vec_sub(&vector.approx(p), &oracle));
        let slack = &oracle_slack() * &Rational::from(dim as i64);
        check(dist <= &p.tolerance() + &slack, || format!("case {case}: distance {} at p = {p}", sci(&dist)))?;
    }
    Ok("100 random vectors".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("example 1 enclosure", example_1),
        ("example 2 enclosure", example_2),
        ("fast/slow Euler map equivalence", oracle_equivalence),
        ("defect certificates", defect_certificates),
        ("partition property", partition_property),
        ("constructive-real invariants", real_invariants),
        ("compression benchmark", compression_benchmark),
        ("real vector approximation", real_vec_approx),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
