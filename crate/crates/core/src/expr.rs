//! Polynomial right-hand sides written as text, e.g. `"-x2; x1"`.
//!
//! Grammar (components separated by `;`):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)?
//! atom    := rational | 't' | 'x' index | '(' sum ')'
//! rational:= integer ('/' integer)? | decimal
//! ```
//!
//! Because every expression is a polynomial, it evaluates exactly on
//! rationals, and interval arithmetic over a box gives certified bounds for
//! `||f||_1` and for the 1-norm of its Jacobian.

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rational::{PrecisionExp, Rational};
use crate::solver::{EulerProblem, StateRegion};
use crate::ucf::{Descriptions, UcfVector};

/// Largest accepted exponent in `a ^ k`.
pub const MAX_EXPONENT: u32 = 64;
/// Largest accepted number of tree nodes per component.
pub const MAX_NODES: usize = 4096;
/// Lipschitz bound used when the Jacobian vanishes on the box.
pub fn min_lipschitz() -> Rational {
    Rational::frac(1, 1024)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(Rational),
    Time,
    /// State variable `x_i`, 1-based.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn eval(&self, t: &Rational, x: &[Rational]) -> Rational {
        match self {
            Expr::Num(v) => v.clone(),
            Expr::Time => t.clone(),
            Expr::Var(i) => x[i - 1].clone(),
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Pow(a, k) => a.eval(t, x).pow(*k),
        }
    }

    /// Enclosure of the expression over `t in time`, `x_i in state[i-1]`.
    pub fn eval_interval(&self, time: &Interval, state: &[Interval]) -> Interval {
        match self {
            Expr::Num(v) => Interval::point(v.clone()),
            Expr::Time => time.clone(),
            Expr::Var(i) => state[i - 1].clone(),
            Expr::Neg(a) => -&a.eval_interval(time, state),
            Expr::Add(a, b) => &a.eval_interval(time, state) + &b.eval_interval(time, state),
            Expr::Sub(a, b) => &a.eval_interval(time, state) - &b.eval_interval(time, state),
            Expr::Mul(a, b) => &a.eval_interval(time, state) * &b.eval_interval(time, state),
            Expr::Pow(a, k) => a.eval_interval(time, state).pow(*k),
        }
    }

    /// Partial derivative with respect to `var` (`Time` or `Var(i)`),
    /// with trivial zero/one folding.
    pub fn derivative(&self, var: &Expr) -> Expr {
        match self {
            Expr::Num(_) => zero(),
            Expr::Time | Expr::Var(_) => {
                if self == var {
                    Expr::Num(Rational::one())
                } else {
                    zero()
                }
            }
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Pow(_, 0) => zero(),
            Expr::Pow(a, k) => {
                let lowered = if *k == 1 {
                    Expr::Num(Rational::one())
                } else {
                    Expr::Pow(a.clone(), k - 1)
                };
                mul(mul(Expr::Num(Rational::from(i64::from(*k))), lowered), a.derivative(var))
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Time | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn max_var(&self) -> usize {
        match self {
            Expr::Var(i) => *i,
            Expr::Num(_) | Expr::Time => 0,
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if v.is_negative() => 3,
            Expr::Num(v) if !v.denom().is_one_value() => 4,
            _ => 5,
        }
    }
}

trait OneValue {
    fn is_one_value(&self) -> bool;
}

impl OneValue for num_bigint::BigInt {
    fn is_one_value(&self) -> bool {
        *self == num_bigint::BigInt::from(1)
    }
}

fn zero() -> Expr {
    Expr::Num(Rational::zero())
}

fn is_num(e: &Expr, v: i64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn neg(a: Expr) -> Expr {
    if is_num(&a, 0) {
        a
    } else {
        Expr::Neg(Box::new(a))
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (is_num(&a, 0), is_num(&b, 0)) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (is_num(&a, 0), is_num(&b, 0)) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0) || is_num(&b, 0) {
        return zero();
    }
    if is_num(&a, 1) {
        return b;
    }
    if is_num(&b, 1) {
        return a;
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Time => write!(f, "t"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " * ")?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, k) => {
                write_child(f, a, 5)?;
                write!(f, "^{k}")
            }
        }
    }
}

/// One expression per state component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhsExpr {
    components: Vec<Expr>,
}

impl RhsExpr {
    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, t: &Rational, x: &[Rational]) -> Vec<Rational> {
        self.components.iter().map(|e| e.eval(t, x)).collect()
    }
}

impl fmt::Display for RhsExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Parses `n` semicolon-separated component expressions over `t, x1..xn`.
pub fn parse_rhs(text: &str, n: usize) -> Result<RhsExpr> {
    let mut parser = Parser::new(text);
    if parser.tokens.iter().all(|t| t.kind == Tok::End) {
        return Err(parser.error_at(0, "empty expression".into()));
    }
    let mut components = Vec::new();
    loop {
        let start = parser.peek().offset;
        let e = parser.sum()?;
        if e.max_var() > n {
            return Err(parser.error_at(start, format!("unknown variable x{} (state has dimension {n})", e.max_var())));
        }
        if e.node_count() > MAX_NODES {
            return Err(parser.error_at(start, format!("expression exceeds {MAX_NODES} nodes")));
        }
        components.push(e);
        match parser.peek().kind {
            Tok::Semi => {
                parser.pos += 1;
            }
            Tok::End => break,
            _ => {
                let tok = parser.peek().clone();
                return Err(parser.error_at(tok.offset, format!("unexpected {}", tok.kind.describe())));
            }
        }
    }
    if components.len() != n {
        return Err(parser.error_at(
            text.len(),
            format!("expected {n} component(s), found {}", components.len()),
        ));
    }
    Ok(RhsExpr { components })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Decimal(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
    Bad(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(s) | Tok::Decimal(s) => format!("number {s}"),
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Semi => "';'".into(),
            Tok::Bad(c) => format!("character {c:?}"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let bytes: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < bytes.len() {
            let (offset, c) = bytes[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let single = match c {
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '/' => Some(Tok::Slash),
                '^' => Some(Tok::Caret),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ';' => Some(Tok::Semi),
                _ => None,
            };
            if let Some(kind) = single {
                tokens.push(Token { kind, offset });
                i += 1;
                continue;
            }
            if c.is_ascii_digit() || c == '.' {
                let mut j = i;
                while j < bytes.len() && (bytes[j].1.is_ascii_digit() || bytes[j].1 == '.') {
                    j += 1;
                }
                let end = bytes.get(j).map_or(text.len(), |b| b.0);
                let lexeme = text[offset..end].to_string();
                let kind = if lexeme.contains('.') {
                    Tok::Decimal(lexeme)
                } else {
                    Tok::Int(lexeme)
                };
                tokens.push(Token { kind, offset });
                i = j;
                continue;
            }
            if c.is_ascii_alphabetic() {
                let mut j = i;
                while j < bytes.len() && bytes[j].1.is_ascii_alphanumeric() {
                    j += 1;
                }
                let end = bytes.get(j).map_or(text.len(), |b| b.0);
                tokens.push(Token {
                    kind: Tok::Ident(text[offset..end].to_string()),
                    offset,
                });
                i = j;
                continue;
            }
            tokens.push(Token { kind: Tok::Bad(c), offset });
            i += 1;
        }
        tokens.push(Token {
            kind: Tok::End,
            offset: text.len(),
        });
        Parser { text, tokens, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != Tok::End {
            self.pos += 1;
        }
        tok
    }

    fn error_at(&self, offset: usize, message: String) -> Error {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Error::Syntax { line, column, message }
    }

    fn unexpected(&self, tok: &Token, wanted: &str) -> Error {
        self.error_at(tok.offset, format!("expected {wanted}, found {}", tok.kind.describe()))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek().kind {
                Tok::Plus => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Minus => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().kind {
                Tok::Star => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    let tok = self.peek().clone();
                    return Err(self.error_at(
                        tok.offset,
                        "division is only allowed inside rational literals such as 3/4".into(),
                    ));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().kind == Tok::Minus {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().kind != Tok::Caret {
            return Ok(base);
        }
        self.pos += 1;
        let tok = self.next();
        match &tok.kind {
            Tok::Int(s) => {
                let k: u32 = s
                    .parse()
                    .ok()
                    .filter(|k| *k <= MAX_EXPONENT)
                    .ok_or_else(|| self.error_at(tok.offset, format!("exponent must be at most {MAX_EXPONENT}")))?;
                Ok(Expr::Pow(Box::new(base), k))
            }
            Tok::Decimal(_) | Tok::Minus => Err(self.error_at(
                tok.offset,
                "exponent must be a non-negative integer".into(),
            )),
            _ => Err(self.unexpected(&tok, "an integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.next();
        match &tok.kind {
            Tok::Int(s) => {
                let numer: Rational = s.parse()?;
                if self.peek().kind != Tok::Slash {
                    return Ok(Expr::Num(numer));
                }
                self.pos += 1;
                let den_tok = self.next();
                match &den_tok.kind {
                    Tok::Int(d) => {
                        let den: Rational = d.parse()?;
                        numer
                            .checked_div(&den)
                            .map(Expr::Num)
                            .map_err(|_| self.error_at(den_tok.offset, "zero denominator".into()))
                    }
                    _ => Err(self.error_at(
                        den_tok.offset,
                        "division is only allowed inside rational literals such as 3/4".into(),
                    )),
                }
            }
            Tok::Decimal(s) => s
                .parse()
                .map(Expr::Num)
                .map_err(|_| self.error_at(tok.offset, format!("malformed number {s}"))),
            Tok::Ident(name) => {
                if name == "t" {
                    return Ok(Expr::Time);
                }
                let index = name
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|i| *i >= 1);
                index
                    .map(Expr::Var)
                    .ok_or_else(|| self.error_at(tok.offset, format!("unknown variable {name}")))
            }
            Tok::LParen => {
                let inner = self.sum()?;
                let close = self.next();
                if close.kind != Tok::RParen {
                    return Err(self.unexpected(&close, "')'"));
                }
                Ok(inner)
            }
            _ => Err(self.unexpected(&tok, "a number, variable or '('")),
        }
    }
}

/// Region on which a parsed right-hand side is certified:
/// `|t| <= t_a`, `||x - x0||_1 <= x_b`.
#[derive(Debug, Clone)]
pub struct DerivationBox {
    pub t_a: Rational,
    pub x0: Vec<Rational>,
    pub x_b: Rational,
}

/// A parsed right-hand side turned into a uniformly continuous function
/// with certified bounds.
#[derive(Debug, Clone)]
pub struct DerivedRhs {
    pub rhs: UcfVector,
    /// Upper bound of `||f||_1` on the box.
    pub bound_c: Rational,
    /// Upper bound of the state Lipschitz constant (1-norm) on the box.
    pub lipschitz_l: Rational,
    /// Full-input Lipschitz bound on the function's ball, used for `omega`.
    pub input_lipschitz: Rational,
}

/// Column sums of the Jacobian magnitude, `max_j sum_i |d f_i / d v_j|`.
fn jacobian_norm(expr: &RhsExpr, vars: &[Expr], time: &Interval, state: &[Interval]) -> Rational {
    vars.iter()
        .map(|v| {
            expr.components
                .iter()
                .map(|e| e.derivative(v).eval_interval(time, state).mag())
                .fold(Rational::zero(), |acc, m| acc + m)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Builds the function `h(t, x, n) = expr(t, x)` (exact, so `alpha = 0`) on
/// the ball around `(0, x0)` of radius `t_a + x_b`, with
///
/// * `C` an interval bound of `||expr||_1` over the box,
/// * `L` an interval bound of the Jacobian's induced 1-norm over the box,
///   raised to `1/1024` when zero,
/// * `omega(p) = p + le_abs_bound(max(K, 1)) + 1`, `K` the Lipschitz bound
///   in all inputs over the ball.
pub fn derive_ucf(expr: &RhsExpr, region: &DerivationBox) -> Result<DerivedRhs> {
    let n = expr.dim();
    if region.x0.len() != n {
        return Err(Error::Config(format!(
            "initial state has dimension {}, expression has {n} component(s)",
            region.x0.len()
        )));
    }
    if !region.t_a.is_positive() || !region.x_b.is_positive() {
        return Err(Error::Config("derivation box needs positive t_a and x_b".into()));
    }
    let time = Interval::around(&Rational::zero(), &region.t_a);
    let state: Vec<Interval> = region.x0.iter().map(|c| Interval::around(c, &region.x_b)).collect();
    let mut bound_c = expr
        .components
        .iter()
        .map(|e| e.eval_interval(&time, &state).mag())
        .fold(Rational::zero(), |acc, m| acc + m);
    if bound_c.is_zero() {
        bound_c = Rational::one();
    }
    let state_vars: Vec<Expr> = (1..=n).map(Expr::Var).collect();
    let mut lipschitz_l = jacobian_norm(expr, &state_vars, &time, &state);
    if lipschitz_l.is_zero() {
        lipschitz_l = min_lipschitz();
    }

    let radius = &region.t_a + &region.x_b;
    let ball_time = Interval::around(&Rational::zero(), &radius);
    let ball_state: Vec<Interval> = region.x0.iter().map(|c| Interval::around(c, &radius)).collect();
    let mut all_vars = vec![Expr::Time];
    all_vars.extend(state_vars);
    let input_lipschitz = jacobian_norm(expr, &all_vars, &ball_time, &ball_state);
    let shift = input_lipschitz.clone().max(Rational::one()).le_abs_bound().get() + 1;

    let mut center = vec![Rational::zero()];
    center.extend(region.x0.iter().cloned());
    let evaluator = expr.clone();
    let rhs = UcfVector::new(
        center,
        radius,
        n,
        move |a, _| evaluator.eval(&a[0], &a[1..]),
        |_| 0,
        move |p: PrecisionExp| p + shift,
        Descriptions {
            name: format!("rhs:{expr}"),
            approx: format!("h(t, x, n) = ({expr})"),
            conv_modulus: "alpha(p) = 0".into(),
            cont_modulus: format!("omega(p) = p + {shift}"),
        },
    )?;
    Ok(DerivedRhs {
        rhs,
        bound_c,
        lipschitz_l,
        input_lipschitz,
    })
}

/// Inputs for [`polynomial_problem`]; `bound_c` and `lipschitz_l`
/// override the derived values when given.
#[derive(Debug, Clone)]
pub struct PolynomialSetup {
    pub x0: Vec<Rational>,
    pub t_a: Rational,
    pub x_b: Rational,
    pub t_end: Rational,
    pub bound_c: Option<Rational>,
    pub lipschitz_l: Option<Rational>,
}

/// A problem for `x' = expr` ready for chained solving up to `t_end`.
///
/// `C` and `L` are derived once over `|t| <= t_a + t_end` and the state box
/// of radius `2 x_b` around `x0`, and the problem is restricted to restart
/// boxes inside the 1-norm ball of that radius, so every restart stays
/// where the bounds hold.
pub fn polynomial_problem(expr: &RhsExpr, setup: &PolynomialSetup) -> Result<(EulerProblem, Rational)> {
    let region = DerivationBox {
        t_a: &setup.t_a + &setup.t_end,
        x0: setup.x0.clone(),
        x_b: &setup.x_b * &Rational::from(2),
    };
    let derived = derive_ucf(expr, &region)?;
    let lipschitz_l = setup.lipschitz_l.clone().unwrap_or(derived.lipschitz_l);
    let problem = EulerProblem::new(
        derived.rhs,
        setup.x0.clone(),
        setup.t_a.clone(),
        setup.x_b.clone(),
        setup.bound_c.clone().unwrap_or(derived.bound_c),
        Some(lipschitz_l.clone()),
    )?
    .with_region(StateRegion {
        center: setup.x0.clone(),
        radius: region.x_b,
    })?;
    Ok((problem, lipschitz_l))
}
