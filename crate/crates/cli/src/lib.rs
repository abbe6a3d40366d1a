//! Command-line front end: builds a problem from a built-in system or a
//! polynomial right-hand side, solves it, certifies the defect and prints
//! the result.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use exact_euler::{
    builtin, defect_certificate, global_error_bound, parse_rhs, polynomial_problem, solve_chained, CertificateReport,
    EulerProblem, EulerSolution, PolynomialSetup, PrecisionExp, Rational, BUILTIN_NAMES,
};
use serde_json::json;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RANGE: u8 = 3;
pub const EXIT_CERTIFICATE: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] exact_euler::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(exact_euler::Error::Range(_)) => EXIT_RANGE,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "exact-euler", version, about = "Certified Euler solutions of x' = f(t, x) in exact arithmetic")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve with and without compression and report CSV timings.
    Bench(Box<BenchArgs>),
    /// List the built-in systems with their metadata.
    Systems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Decimal,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Built-in system (exp, circle).
    #[arg(long, conflicts_with = "rhs", required_unless_present = "rhs")]
    pub system: Option<String>,
    /// Polynomial right-hand side over t, x1..xn, components separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: Option<String>,
    /// Initial state, comma separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Precision exponent: the defect is at most 2^-p.
    #[arg(long, default_value_t = 10)]
    pub p: u32,
    /// End time.
    #[arg(long, default_value = "1")]
    pub t_end: String,
    /// Factor applied to --t-end, e.g. 2 with --t-end 355/113.
    #[arg(long)]
    pub t_end_scale: Option<String>,
    /// Time half-width of the solution box.
    #[arg(long)]
    pub t_a: Option<String>,
    /// State radius (1-norm) of the solution box.
    #[arg(long)]
    pub x_b: Option<String>,
    /// Bound on ||f||_1 over the box.
    #[arg(long = "C")]
    pub bound_c: Option<String>,
    /// Lipschitz constant of f in x.
    #[arg(long = "L")]
    pub lipschitz_l: Option<String>,
    /// Disable dyadic compression of intermediate reals.
    #[arg(long)]
    pub no_compress: bool,
    #[arg(long, value_enum, default_value_t = Format::Decimal)]
    pub format: Format,
    /// Certificate samples per partition interval.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Runs per compression setting.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeat: u64,
}

/// Everything needed to build and solve one problem.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub label: String,
    pub problem: EulerProblem,
    pub lipschitz_l: Rational,
    pub p: PrecisionExp,
    pub t_end: Rational,
    pub samples: usize,
    pub format: Format,
}

fn rational(flag: &str, text: &str) -> Result<Rational, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--{flag}: cannot read {text:?} as a rational")))
}

fn rational_list(flag: &str, text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',').map(|part| rational(flag, part)).collect()
}

fn optional(flag: &str, text: &Option<String>) -> Result<Option<Rational>, CliError> {
    text.as_deref().map(|t| rational(flag, t)).transpose()
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let p = PrecisionExp::new(args.p).map_err(|_| CliError::Config("--p must be at least 1".into()))?;
        let mut t_end = rational("t-end", &args.t_end)?;
        if let Some(scale) = optional("t-end-scale", &args.t_end_scale)? {
            t_end = &t_end * &scale;
        }
        if !t_end.is_positive() {
            return Err(CliError::Config(format!("--t-end must be positive, got {t_end}")));
        }
        let x0 = args.x0.as_deref().map(|s| rational_list("x0", s)).transpose()?;
        let t_a = optional("t-a", &args.t_a)?;
        let x_b = optional("x-b", &args.x_b)?;
        let bound_c = optional("C", &args.bound_c)?;
        let given_l = optional("L", &args.lipschitz_l)?;

        let (label, problem, lipschitz_l) = match (&args.system, &args.rhs) {
            (Some(name), _) => {
                let sys = builtin(name).ok_or_else(|| {
                    CliError::Config(format!("unknown system {name:?}; available: {}", BUILTIN_NAMES.join(", ")))
                })?;
                let lipschitz_l = given_l.unwrap_or_else(|| sys.lipschitz_l.clone());
                let problem = EulerProblem::new(
                    sys.rhs,
                    x0.unwrap_or(sys.x0),
                    t_a.unwrap_or(sys.t_a),
                    x_b.unwrap_or(sys.x_b),
                    bound_c.unwrap_or(sys.bound_c),
                    Some(lipschitz_l.clone()),
                )?;
                (name.clone(), problem, lipschitz_l)
            }
            (None, Some(text)) => {
                let x0 = x0.ok_or_else(|| CliError::Config("--rhs needs --x0".into()))?;
                let expr = parse_rhs(text, x0.len())?;
                let setup = PolynomialSetup {
                    x0,
                    t_a: t_a.unwrap_or_else(Rational::one),
                    x_b: x_b.unwrap_or_else(Rational::one),
                    t_end: t_end.clone(),
                    bound_c,
                    lipschitz_l: given_l,
                };
                let (problem, lipschitz_l) = polynomial_problem(&expr, &setup)?;
                (format!("rhs: {expr}"), problem, lipschitz_l)
            }
            (None, None) => return Err(CliError::Config("one of --system or --rhs is required".into())),
        };
        Ok(RunConfig {
            label,
            problem: problem.with_compression(!args.no_compress),
            lipschitz_l,
            p,
            t_end,
            samples: usize::try_from(args.samples).unwrap_or(usize::MAX),
            format: args.format,
        })
    }
}

/// Result of [`run`]: the solution, its certificate and timings.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: EulerSolution,
    pub value: Vec<Rational>,
    pub error_bound: Rational,
    pub certificate: CertificateReport,
    pub solve_time: Duration,
    pub certificate_time: Duration,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.certificate.is_empty() {
            EXIT_OK
        } else {
            EXIT_CERTIFICATE
        }
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let solution = solve_chained(&config.problem, config.p, &config.t_end)?;
    let solve_time = started.elapsed();
    let value = solution.eval(&config.t_end)?;
    let error_bound = global_error_bound(config.p, &config.lipschitz_l, &config.t_end)?;
    let started = Instant::now();
    let certificate = defect_certificate(&solution, &config.problem, config.samples)?;
    let certificate_time = started.elapsed();
    Ok(RunOutcome {
        solution,
        value,
        error_bound,
        certificate,
        solve_time,
        certificate_time,
    })
}

/// Significant decimals that `2^-p` justifies.
pub fn decimal_digits(p: PrecisionExp) -> usize {
    // ceil(p log10 2) + 1
    (f64::from(p.get()) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// Upper rounding of a positive bound to three significant digits.
fn bound_text(bound: &Rational) -> String {
    let mut exp = 0i32;
    let mut scaled = bound.clone();
    let ten = Rational::from(10);
    let hundred = Rational::from(100);
    let thousand = Rational::from(1000);
    while scaled < hundred {
        scaled = &scaled * &ten;
        exp -= 1;
    }
    while scaled >= thousand {
        scaled = scaled.checked_div(&ten).expect("nonzero");
        exp += 1;
    }
    let floor = scaled.floor();
    let digits = if Rational::from_integer(floor.clone()) == scaled {
        floor
    } else {
        floor + 1
    };
    let digits = digits.to_string();
    let mantissa = format!("{}.{}", &digits[..1], &digits[1..]);
    format!("{mantissa}e{}", exp + digits.len() as i32 - 1)
}

fn timing(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

pub fn render(config: &RunConfig, outcome: &RunOutcome) -> String {
    let sol = &outcome.solution;
    match config.format {
        Format::Json => {
            let solution: serde_json::Value = serde_json::from_str(&sol.to_json()).expect("valid json");
            let doc = json!({
                "system": config.label,
                "p": config.p.get(),
                "t_end": config.t_end.to_string(),
                "value": outcome.value.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "error_bound": outcome.error_bound.to_string(),
                "certificate": outcome.certificate,
                "timing_ms": {
                    "solve": timing(outcome.solve_time),
                    "certificate": timing(outcome.certificate_time),
                },
                "solution": solution,
            });
            format!("{doc}\n")
        }
        Format::Csv => sol.to_csv(),
        Format::Decimal => {
            let digits = decimal_digits(config.p);
            let bound = bound_text(&outcome.error_bound);
            let mut out = String::new();
            let _ = writeln!(out, "system: {}", config.label);
            let _ = writeln!(out, "t_end: {} ({})", config.t_end, config.t_end.to_decimal(digits));
            for (i, v) in outcome.value.iter().enumerate() {
                let _ = writeln!(out, "x{} = {} ±{bound}", i + 1, v.to_decimal(digits));
            }
            for (i, v) in outcome.value.iter().enumerate() {
                let _ = writeln!(out, "x{} exact = {v}", i + 1);
            }
            let _ = writeln!(
                out,
                "steps: {}, restarts: {}, defect bound: 2^-{}",
                sol.steps(),
                sol.restarts.len(),
                config.p
            );
            let cert = &outcome.certificate;
            let _ = writeln!(
                out,
                "certificate: {} ({} samples, max defect {}, tolerance {})",
                if cert.is_empty() { "ok" } else { "VIOLATED" },
                cert.checked,
                bound_text_or_zero(&cert.max_defect),
                bound_text(&cert.tolerance),
            );
            let _ = writeln!(
                out,
                "time: solve {:.1} ms, certificate {:.1} ms",
                timing(outcome.solve_time),
                timing(outcome.certificate_time)
            );
            out
        }
    }
}

fn bound_text_or_zero(v: &Rational) -> String {
    if v.is_zero() {
        "0".into()
    } else {
        bound_text(v)
    }
}

/// One row per run: `compress,steps,wall_ms,max_denominator_bits`.
pub fn bench(config: &RunConfig, repeat: u64) -> Result<String, CliError> {
    let mut out = String::from("compress,steps,wall_ms,max_denominator_bits\n");
    for compress in [true, false] {
        let problem = config.problem.clone().with_compression(compress);
        for _ in 0..repeat {
            let started = Instant::now();
            let sol = solve_chained(&problem, config.p, &config.t_end)?;
            let wall = started.elapsed();
            let _ = writeln!(
                out,
                "{compress},{},{:.3},{}",
                sol.steps(),
                timing(wall),
                sol.max_slope_denominator_bits()
            );
        }
    }
    Ok(out)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> u8 {
    let result = match &cli.command {
        Some(Command::Systems) => {
            println!("{}", exact_euler::UcfRegistry::with_builtins().metadata_json());
            Ok(EXIT_OK)
        }
        Some(Command::Bench(args)) => RunConfig::from_args(&args.run)
            .and_then(|config| bench(&config, args.repeat))
            .and_then(|csv| emit(&csv, &args.run.out))
            .map(|()| EXIT_OK),
        None => RunConfig::from_args(&cli.run).and_then(|config| {
            let outcome = run(&config)?;
            emit(&render(&config, &outcome), &cli.run.out)?;
            if config.format == Format::Csv {
                eprintln!(
                    "solve {:.1} ms, certificate {:.1} ms",
                    timing(outcome.solve_time),
                    timing(outcome.certificate_time)
                );
            }
            if !outcome.certificate.is_empty() {
                eprintln!("certificate violated at {} sample(s)", outcome.certificate.violations.len());
            }
            Ok(outcome.exit_code())
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_follow_precision() {
        assert_eq!(decimal_digits(PrecisionExp::new(10).unwrap()), 5);
        assert_eq!(decimal_digits(PrecisionExp::new(16).unwrap()), 6);
        assert_eq!(decimal_digits(PrecisionExp::new(1).unwrap()), 2);
    }

    #[test]
    fn bounds_round_up() {
        assert_eq!(bound_text(&Rational::frac(1, 1024)), "9.77e-4");
        assert_eq!(bound_text(&Rational::from(1)), "1.00e0");
        assert_eq!(bound_text(&Rational::frac(12345, 10)), "1.24e3");
        assert_eq!(bound_text(&Rational::frac(1, 1000)), "1.00e-3");
    }

    #[test]
    fn exit_code_mapping() {
        let range = CliError::from(exact_euler::Error::Range("outside".into()));
        assert_eq!(range.exit_code(), EXIT_RANGE);
        let config = CliError::from(exact_euler::Error::Config("bad".into()));
        assert_eq!(config.exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::Config("bad".into()).exit_code(), EXIT_CONFIG);

        let cli = Cli::try_parse_from(["exact-euler", "--system", "exp", "--p", "3", "--t-end", "1/2"]).unwrap();
        let config = RunConfig::from_args(&cli.run).unwrap();
        let mut outcome = run(&config).unwrap();
        assert_eq!(outcome.exit_code(), EXIT_OK);
        outcome.certificate.violations.push(exact_euler::solver::DefectViolation {
            segment: 0,
            t: Rational::zero(),
            defect: Rational::one(),
        });
        assert_eq!(outcome.exit_code(), EXIT_CERTIFICATE);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
