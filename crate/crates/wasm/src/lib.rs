//! Browser bindings for the solver demo in `www/`.
//!
//! Every export returns a JSON document as a string; errors come back as a
//! plain message. Curves are thinned to at most `max_points` knots before
//! they are serialized, and exact rationals are included alongside the
//! floating-point values used for plotting.

use std::time::Duration;

use exact_euler::{
    builtin, defect_certificate, global_error_bound, parse_rhs, polynomial_problem, solve_chained, EulerProblem,
    EulerSolution, PolynomialSetup, PrecisionExp, Rational,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Precision cap keeping a browser tab responsive.
pub const MAX_P: u32 = 14;
/// Certificate samples per interval in the demo.
const DEMO_SAMPLES: usize = 1;

fn rational(name: &str, text: &str) -> Result<Rational, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("{name}: cannot read {text:?} as a rational"))
}

fn precision(p: u32) -> Result<PrecisionExp, String> {
    if p > MAX_P {
        return Err(format!("p is capped at {MAX_P} in the browser demo"));
    }
    PrecisionExp::new(p).map_err(|e| e.to_string())
}

fn approx_f64(v: &Rational) -> f64 {
    v.to_decimal(12).parse().unwrap_or(f64::NAN)
}

fn curve(sol: &EulerSolution, max_points: usize) -> Vec<Vec<f64>> {
    let points = sol.partition.points();
    let stride = points.len().div_ceil(max_points.max(2)).max(1);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, (t, x)) in points.iter().zip(&sol.nodes).enumerate() {
        if i % stride == 0 || i + 1 == points.len() {
            let mut row = vec![approx_f64(t)];
            row.extend(x.iter().map(approx_f64));
            rows.push(row);
        }
    }
    rows
}

fn report(problem: &EulerProblem, l: &Rational, p: PrecisionExp, t_end: &Rational, max_points: usize) -> Result<Value, String> {
    let clock = Clock::start();
    let sol = solve_chained(problem, p, t_end).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    let value = sol.eval(t_end).map_err(|e| e.to_string())?;
    let bound = global_error_bound(p, l, t_end).map_err(|e| e.to_string())?;
    let cert = defect_certificate(&sol, problem, DEMO_SAMPLES).map_err(|e| e.to_string())?;
    Ok(json!({
        "p": p.get(),
        "t_end": t_end.to_string(),
        "steps": sol.steps(),
        "restarts": sol.restarts.len(),
        "value": value.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "value_decimal": value.iter().map(|v| v.to_decimal(8)).collect::<Vec<_>>(),
        "error_bound": approx_f64(&bound),
        "certified": cert.is_empty(),
        "max_defect": approx_f64(&cert.max_defect),
        "elapsed_ms": elapsed.map(|d| d.as_secs_f64() * 1000.0),
        "curve": curve(&sol, max_points),
    }))
}

/// Solves a built-in system ("exp" or "circle") from its default initial
/// state up to `t_end`.
#[wasm_bindgen]
pub fn solve_builtin(name: &str, p: u32, t_end: &str, compress: bool, max_points: usize) -> Result<String, String> {
    let sys = builtin(name).ok_or_else(|| format!("unknown system {name:?}"))?;
    let p = precision(p)?;
    let t_end = rational("t_end", t_end)?;
    let problem = EulerProblem::from_builtin(&sys)
        .map_err(|e| e.to_string())?
        .with_compression(compress);
    Ok(report(&problem, &sys.lipschitz_l, p, &t_end, max_points)?.to_string())
}

/// Solves `x' = rhs` (polynomial in `t, x1..xn`, components separated by
/// `;`) from the comma-separated initial state `x0`.
#[wasm_bindgen]
pub fn solve_rhs(rhs: &str, x0: &str, p: u32, t_end: &str, max_points: usize) -> Result<String, String> {
    let x0: Vec<Rational> = x0.split(',').map(|s| rational("x0", s)).collect::<Result<_, _>>()?;
    let expr = parse_rhs(rhs, x0.len()).map_err(|e| e.to_string())?;
    let p = precision(p)?;
    let t_end = rational("t_end", t_end)?;
    let setup = PolynomialSetup {
        x0,
        t_a: Rational::one(),
        x_b: Rational::one(),
        t_end: t_end.clone(),
        bound_c: None,
        lipschitz_l: None,
    };
    let (problem, l) = polynomial_problem(&expr, &setup).map_err(|e| e.to_string())?;
    let mut doc = report(&problem, &l, p, &t_end, max_points)?;
    doc["rhs"] = json!(expr.to_string());
    doc["C"] = json!(problem.bound_c.to_string());
    doc["L"] = json!(l.to_string());
    Ok(doc.to_string())
}

/// Slope-denominator bit lengths along the circle solution, with and
/// without compression, sampled at up to `max_points` steps.
#[wasm_bindgen]
pub fn compression_profile(p: u32, t_end: &str, max_points: usize) -> Result<String, String> {
    let sys = builtin("circle").expect("built-in");
    let p = precision(p)?;
    let t_end = rational("t_end", t_end)?;
    let mut series = serde_json::Map::new();
    for (key, compress) in [("compressed", true), ("plain", false)] {
        let problem = EulerProblem::from_builtin(&sys)
            .map_err(|e| e.to_string())?
            .with_compression(compress);
        let sol = solve_chained(&problem, p, &t_end).map_err(|e| e.to_string())?;
        let stride = sol.steps().div_ceil(max_points.max(1)).max(1);
        let bits: Vec<[u64; 2]> = sol
            .slopes
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(i, s)| [i as u64, s.iter().map(Rational::denom_bits).max().unwrap_or(0)])
            .collect();
        series.insert(key.into(), json!(bits));
    }
    Ok(Value::Object(series).to_string())
}

/// Wall-clock timing where available; `std::time::Instant` panics on
/// `wasm32-unknown-unknown`, so the browser build reports no timing.
struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Option<Duration> {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Some(self.0.elapsed())
        }
        #[cfg(target_arch = "wasm32")]
        {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn builtin_exp() {
        let doc = parse(&solve_builtin("exp", 8, "1/2", true, 50).unwrap());
        assert_eq!(doc["certified"], true);
        assert_eq!(doc["t_end"], "1/2");
        let curve = doc["curve"].as_array().unwrap();
        assert!(curve.len() <= 51);
        let last = curve.last().unwrap().as_array().unwrap();
        assert_eq!(last[0].as_f64().unwrap(), 0.5);
        assert!((last[1].as_f64().unwrap() - 0.5f64.exp()).abs() < 0.01);
    }

    #[test]
    fn parsed_rhs() {
        let doc = parse(&solve_rhs("-x2; x1", "1,0", 6, "1/2", 20).unwrap());
        assert_eq!(doc["rhs"], "-x2; x1");
        assert_eq!(doc["certified"], true);
        assert_eq!(doc["curve"][0], json!([0.0, 1.0, 0.0]));
    }

    #[test]
    fn compression_profile_shows_growth() {
        let doc = parse(&compression_profile(6, "1/2", 16).unwrap());
        let last = |key: &str| doc[key].as_array().unwrap().last().unwrap()[1].as_u64().unwrap();
        assert!(last("compressed") < last("plain"));
    }

    #[test]
    fn page_defaults_succeed() {
        let circle = parse(&solve_builtin("circle", 8, "6", true, 1500).unwrap());
        assert_eq!(circle["certified"], true);
        let damped = parse(&solve_rhs("x2; -x1 - 1/4 * x2", "1,0", 6, "3/4", 1500).unwrap());
        assert_eq!(damped["certified"], true);
        assert!(compression_profile(6, "1", 400).is_ok());
    }

    #[test]
    fn errors_are_messages() {
        assert!(solve_builtin("pendulum", 4, "1", true, 10).unwrap_err().contains("unknown system"));
        assert!(solve_builtin("exp", MAX_P + 1, "1", true, 10).unwrap_err().contains("capped"));
        assert!(solve_rhs("x1 +", "1", 4, "1", 10).unwrap_err().contains("column"));
        assert!(solve_rhs("x1", "a", 4, "1", 10).is_err());
    }
}
