//! Exact-arithmetic Euler solver for ordinary differential equations.
//!
//! Every quantity is a rational number or a constructive real given by a
//! rational Cauchy sequence with an explicit modulus of convergence, so the
//! solver's output comes with a certified error bound instead of a
//! floating-point estimate.
//!
//! ```
//! use exact_euler::{builtin, EulerProblem, PrecisionExp, solve};
//!
//! let sys = builtin("exp").unwrap();
//! let problem = EulerProblem::from_builtin(&sys).unwrap();
//! let sol = solve(&problem, PrecisionExp::new(4).unwrap()).unwrap();
//! assert_eq!(sol.end(), &exact_euler::Rational::frac(1, 2));
//! ```

pub mod error;
pub mod expr;
pub mod interval;
pub mod partition;
pub mod rational;
pub mod real;
pub mod solver;
pub mod ucf;

pub use error::{Error, Result};
pub use expr::{derive_ucf, parse_rhs, polynomial_problem, DerivationBox, DerivedRhs, Expr, PolynomialSetup, RhsExpr};
pub use interval::Interval;
pub use partition::{unif_p, unif_p_core, Partition};
pub use rational::{norm1, PrecisionExp, Rational};
pub use real::{ConstructiveReal, RealVector};
pub use solver::{
    defect_certificate, euler_map, euler_map_fast, global_error_bound, solve, solve_chained, CertificateReport,
    EulerProblem, EulerSolution, StateRegion,
};
pub use ucf::{builtin, BuiltinSystem, Descriptions, UcfRegistry, UcfScalar, UcfVector, ValidationReport, BUILTIN_NAMES};
