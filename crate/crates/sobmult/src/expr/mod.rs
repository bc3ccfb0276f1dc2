//! Symbol expressions: parsing, exact symbolic derivatives, evaluation.
//!
//! Symbols are written in a small grammar over the variable `x` with the
//! functions `sin`, `cos`, `exp`, `sqrt`, `log` (natural) and integer powers.
//! Derivatives are produced symbolically so that downstream energy integrals
//! never rely on numerical differentiation, and every expression can also be
//! evaluated in signed log scale (see [`Expr::evaluate_ln`]), which is what
//! keeps symbols like `exp(1/x)` computable arbitrarily close to 0.

mod parser;
pub mod token;

pub use parser::parse;

use crate::logscale::LnScalar;

/// Character offsets in errors are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    EmptyInput,
    #[error("unexpected character '{0}'")]
    UnexpectedCharacter(char),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
    #[error("expected an integer exponent")]
    ExpectedExponent,
    #[error("exponent must be an integer")]
    NonIntegerExponent,
    #[error("exponent out of range")]
    ExponentOutOfRange,
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
}

/// Evaluation failed at a point; these mark singular points of a symbol.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("{kind} at x = {x}")]
pub struct DomainError {
    pub x: f64,
    pub kind: DomainErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DomainErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    SqrtOfNegative,
    #[error("logarithm of a non-positive value")]
    LogOfNonPositive,
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("argument exceeds floating-point range")]
    UnrepresentableArgument,
}

/// ln(f64::MAX); arguments to sin/cos/exp beyond this cannot be materialized.
const LN_F64_MAX: f64 = 709.782712893384;

/// An expression tree over the variable `x`.
///
/// `Pow` exponents are integers (possibly negative), which keeps
/// differentiation closed over the grammar; real powers are expressed through
/// `exp`/`log` where needed.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    /// Recursive evaluation at `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64, DomainError> {
        match self {
            Expr::Constant(c) => Ok(*c),
            Expr::X => Ok(x),
            Expr::Neg(u) => Ok(-u.evaluate(x)?),
            Expr::Add(u, v) => Ok(u.evaluate(x)? + v.evaluate(x)?),
            Expr::Sub(u, v) => Ok(u.evaluate(x)? - v.evaluate(x)?),
            Expr::Mul(u, v) => Ok(u.evaluate(x)? * v.evaluate(x)?),
            Expr::Div(u, v) => {
                let d = v.evaluate(x)?;
                if d == 0.0 {
                    return Err(DomainError { x, kind: DomainErrorKind::DivisionByZero });
                }
                Ok(u.evaluate(x)? / d)
            }
            Expr::Pow(u, n) => {
                let b = u.evaluate(x)?;
                if b == 0.0 && *n < 0 {
                    return Err(DomainError { x, kind: DomainErrorKind::ZeroToNegativePower });
                }
                Ok(b.powi(*n))
            }
            Expr::Sin(u) => Ok(u.evaluate(x)?.sin()),
            Expr::Cos(u) => Ok(u.evaluate(x)?.cos()),
            Expr::Exp(u) => Ok(u.evaluate(x)?.exp()),
            Expr::Sqrt(u) => {
                let a = u.evaluate(x)?;
                if a < 0.0 {
                    return Err(DomainError { x, kind: DomainErrorKind::SqrtOfNegative });
                }
                Ok(a.sqrt())
            }
            Expr::Log(u) => {
                let a = u.evaluate(x)?;
                if a <= 0.0 {
                    return Err(DomainError { x, kind: DomainErrorKind::LogOfNonPositive });
                }
                Ok(a.ln())
            }
        }
    }

    /// Evaluation in signed log scale.
    ///
    /// Agrees with [`Expr::evaluate`] wherever the plain value is
    /// representable, and stays exact far beyond f64 range for products,
    /// quotients, powers and `exp` (for `exp(u)` the log of the result *is*
    /// `u`). Only `sin`/`cos`/`log` need their argument as a plain value;
    /// if that argument overflows f64 the evaluation reports
    /// [`DomainErrorKind::UnrepresentableArgument`].
    pub fn evaluate_ln(&self, x: f64) -> Result<LnScalar, DomainError> {
        match self {
            Expr::Constant(c) => Ok(LnScalar::from_value(*c)),
            Expr::X => Ok(LnScalar::from_value(x)),
            Expr::Neg(u) => Ok(-u.evaluate_ln(x)?),
            Expr::Add(u, v) => Ok(u.evaluate_ln(x)? + v.evaluate_ln(x)?),
            Expr::Sub(u, v) => Ok(u.evaluate_ln(x)? - v.evaluate_ln(x)?),
            Expr::Mul(u, v) => Ok(u.evaluate_ln(x)? * v.evaluate_ln(x)?),
            Expr::Div(u, v) => {
                let d = v.evaluate_ln(x)?;
                if d.is_zero() {
                    return Err(DomainError { x, kind: DomainErrorKind::DivisionByZero });
                }
                Ok(u.evaluate_ln(x)? / d)
            }
            Expr::Pow(u, n) => {
                let b = u.evaluate_ln(x)?;
                if b.is_zero() && *n < 0 {
                    return Err(DomainError { x, kind: DomainErrorKind::ZeroToNegativePower });
                }
                Ok(b.powi(*n))
            }
            Expr::Sin(u) => Ok(LnScalar::from_value(self.plain_argument(u, x)?.sin())),
            Expr::Cos(u) => Ok(LnScalar::from_value(self.plain_argument(u, x)?.cos())),
            Expr::Exp(u) => {
                let a = self.plain_argument(u, x)?;
                Ok(LnScalar::new(1, a))
            }
            Expr::Sqrt(u) => {
                let a = u.evaluate_ln(x)?;
                match a.sign() {
                    -1 => Err(DomainError { x, kind: DomainErrorKind::SqrtOfNegative }),
                    0 => Ok(LnScalar::ZERO),
                    _ => Ok(LnScalar::new(1, 0.5 * a.ln_abs())),
                }
            }
            Expr::Log(u) => {
                let a = u.evaluate_ln(x)?;
                if a.sign() <= 0 {
                    return Err(DomainError { x, kind: DomainErrorKind::LogOfNonPositive });
                }
                Ok(LnScalar::from_value(a.ln_abs()))
            }
        }
    }

    fn plain_argument(&self, u: &Expr, x: f64) -> Result<f64, DomainError> {
        let a = u.evaluate_ln(x)?;
        if a.ln_abs() > LN_F64_MAX {
            return Err(DomainError { x, kind: DomainErrorKind::UnrepresentableArgument });
        }
        Ok(a.to_f64())
    }

    /// Exact derivative tree (product, quotient and chain rules).
    ///
    /// The result is left unreduced; correctness is checked by evaluation,
    /// not by structure.
    pub fn differentiate(&self) -> Expr {
        use Expr::*;
        match self {
            Constant(_) => Constant(0.0),
            X => Constant(1.0),
            Neg(u) => Neg(Box::new(u.differentiate())),
            Add(u, v) => Add(Box::new(u.differentiate()), Box::new(v.differentiate())),
            Sub(u, v) => Sub(Box::new(u.differentiate()), Box::new(v.differentiate())),
            Mul(u, v) => Add(
                Box::new(Mul(Box::new(u.differentiate()), v.clone())),
                Box::new(Mul(u.clone(), Box::new(v.differentiate()))),
            ),
            Div(u, v) => Div(
                Box::new(Sub(
                    Box::new(Mul(Box::new(u.differentiate()), v.clone())),
                    Box::new(Mul(u.clone(), Box::new(v.differentiate()))),
                )),
                Box::new(Pow(v.clone(), 2)),
            ),
            Pow(u, n) => {
                if *n == 0 {
                    return Constant(0.0);
                }
                Mul(
                    Box::new(Mul(Box::new(Constant(f64::from(*n))), Box::new(Pow(u.clone(), n - 1)))),
                    Box::new(u.differentiate()),
                )
            }
            Sin(u) => Mul(Box::new(Cos(u.clone())), Box::new(u.differentiate())),
            Cos(u) => Mul(
                Box::new(Neg(Box::new(Sin(u.clone())))),
                Box::new(u.differentiate()),
            ),
            Exp(u) => Mul(Box::new(Exp(u.clone())), Box::new(u.differentiate())),
            Sqrt(u) => Div(
                Box::new(u.differentiate()),
                Box::new(Mul(Box::new(Constant(2.0)), Box::new(Sqrt(u.clone())))),
            ),
            Log(u) => Div(Box::new(u.differentiate()), u.clone()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Prints in the input grammar; `parse(format!("{e}"))` reconstructs `e`
/// for any tree the parser can produce.
impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, parent: u8) -> std::fmt::Result {
        let prec = self.precedence();
        let parens = prec < parent;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Constant(c) => write!(f, "{c}")?,
            Expr::X => write!(f, "x")?,
            Expr::Neg(u) => {
                write!(f, "-")?;
                u.fmt_prec(f, 4)?;
            }
            Expr::Add(u, v) => {
                u.fmt_prec(f, 1)?;
                write!(f, "+")?;
                v.fmt_prec(f, 2)?;
            }
            Expr::Sub(u, v) => {
                u.fmt_prec(f, 1)?;
                write!(f, "-")?;
                v.fmt_prec(f, 2)?;
            }
            Expr::Mul(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, "*")?;
                v.fmt_prec(f, 3)?;
            }
            Expr::Div(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, "/")?;
                v.fmt_prec(f, 3)?;
            }
            Expr::Pow(u, n) => {
                u.fmt_prec(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Sin(u) => write!(f, "sin({u})")?,
            Expr::Cos(u) => write!(f, "cos({u})")?,
            Expr::Exp(u) => write!(f, "exp({u})")?,
            Expr::Sqrt(u) => write!(f, "sqrt({u})")?,
            Expr::Log(u) => write!(f, "log({u})")?,
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    /// Central finite difference, the independent oracle for derivatives.
    fn central_fd(e: &Expr, x: f64, h: f64) -> f64 {
        let up = e.evaluate(x + h).unwrap();
        let dn = e.evaluate(x - h).unwrap();
        (up - dn) / (2.0 * h)
    }

    #[test]
    fn parses_reciprocal() {
        assert_eq!(parse("1/x").unwrap(), Expr::Div(b(Expr::Constant(1.0)), b(Expr::X)));
    }

    #[test]
    fn parses_topologist_sine() {
        assert_eq!(
            parse("sin(1/x)").unwrap(),
            Expr::Sin(b(Expr::Div(b(Expr::Constant(1.0)), b(Expr::X))))
        );
    }

    #[test]
    fn parses_semicircle() {
        let expected = Expr::Sqrt(b(Expr::Sub(
            b(Expr::Div(b(Expr::Constant(1.0)), b(Expr::Constant(4.0)))),
            b(Expr::Pow(
                b(Expr::Sub(b(Expr::X), b(Expr::Div(b(Expr::Constant(1.0)), b(Expr::Constant(2.0)))))),
                2,
            )),
        )));
        assert_eq!(parse("sqrt(1/4-(x-1/2)^2)").unwrap(), expected);
    }

    #[test]
    fn precedence_and_associativity() {
        // power > unary minus > mul/div > add/sub, binaries left-associative
        assert_eq!(
            parse("-x^2").unwrap(),
            Expr::Neg(b(Expr::Pow(b(Expr::X), 2)))
        );
        assert_eq!(
            parse("1-2-3").unwrap(),
            Expr::Sub(
                b(Expr::Sub(b(Expr::Constant(1.0)), b(Expr::Constant(2.0)))),
                b(Expr::Constant(3.0))
            )
        );
        assert_eq!(
            parse("-x*x").unwrap(),
            Expr::Mul(b(Expr::Neg(b(Expr::X))), b(Expr::X))
        );
        assert_eq!(parse("x^-2").unwrap(), Expr::Pow(b(Expr::X), -2));
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::EmptyInput);
        let e = parse("sin(1/x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParenthesis);
        let e = parse("tan(x)").unwrap_err();
        assert_eq!(e.position, 0);
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("tan".into()));
        let e = parse("x^2.5").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NonIntegerExponent);
        let e = parse("x^9999999999").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ExponentOutOfRange);
        let e = parse("x^2^3").unwrap_err();
        assert_eq!(e.position, 3);
        let e = parse("2x").unwrap_err();
        assert_eq!(e.position, 1);
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse("sin(1/x) + x^2*exp(-x)").unwrap();
        let bb = parse("sin(1/x) + x^2*exp(-x)").unwrap();
        assert_eq!(a, bb);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(parse("1/x").unwrap().evaluate(0.5).unwrap(), 2.0);
        assert_relative_eq!(
            parse("sqrt(1/4-(x-1/2)^2)").unwrap().evaluate(0.5).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        let err = parse("1/x").unwrap().evaluate(0.0).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::DivisionByZero);
        let err = parse("sqrt(-1-x)").unwrap().evaluate(0.5).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::SqrtOfNegative);
        let err = parse("log(x-1)").unwrap().evaluate(0.5).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::LogOfNonPositive);
        let err = parse("x^-1").unwrap().evaluate(0.0).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::ZeroToNegativePower);
    }

    #[test]
    fn derivative_power_rule() {
        let d = parse("x^2").unwrap().differentiate();
        for &x in &[0.1, 0.5, 0.9, 2.0] {
            assert_relative_eq!(d.evaluate(x).unwrap(), 2.0 * x, max_relative = 1e-15);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // seeded LCG so the assertion set is reproducible
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            0.1 + 0.8 * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        for text in [
            "sin(1/x)",
            "exp(1/x)",
            "sqrt(1/4-(x-1/2)^2)",
            "x^2*(1-x)",
            "log(x+1)/x",
            "cos(x)^3 - x^-2",
        ] {
            let e = parse(text).unwrap();
            let d = e.differentiate();
            for _ in 0..20 {
                let x = rnd();
                let fd = central_fd(&e, x, 1e-6);
                let sym = d.evaluate(x).unwrap();
                let denom = 1.0 + sym.abs();
                assert!(
                    ((sym - fd) / denom).abs() < 1e-5,
                    "{text} at {x}: sym {sym} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn exp_reciprocal_derivative_closed_form() {
        // d/dx exp(1/x) = -exp(1/x)/x^2
        let d = parse("exp(1/x)").unwrap().differentiate();
        for &x in &[0.2_f64, 0.35, 0.8] {
            let expected = -(1.0 / x).exp() / (x * x);
            assert_relative_eq!(d.evaluate(x).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn ln_evaluation_agrees_with_plain() {
        for text in ["sin(1/x)", "exp(1/x)", "sqrt(1/4-(x-1/2)^2)", "x^3-2*x+1", "log(x)"] {
            let e = parse(text).unwrap();
            for &x in &[0.07, 0.3, 0.55, 0.93] {
                let plain = e.evaluate(x).unwrap();
                let ln = e.evaluate_ln(x).unwrap().to_f64();
                assert_relative_eq!(plain, ln, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn ln_evaluation_survives_overflow() {
        // exp(2/x) at x = 2^-40 has log 2^41; the plain value overflows.
        let e = parse("exp(2/x)").unwrap();
        let x = (2.0_f64).powi(-40);
        assert_eq!(e.evaluate(x).unwrap(), f64::INFINITY);
        let ln = e.evaluate_ln(x).unwrap();
        assert_eq!(ln.sign(), 1);
        assert_relative_eq!(ln.ln_abs(), (2.0_f64).powi(41), max_relative = 1e-12);
        // and its derivative tree too: -2*exp(2/x)/x^2
        let d = e.differentiate();
        let ld = d.evaluate_ln(x).unwrap();
        assert_eq!(ld.sign(), -1);
        assert_relative_eq!(
            ld.ln_abs(),
            (2.0_f64).powi(41) + (2.0_f64).ln() - 2.0 * x.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn ln_evaluation_rejects_unrepresentable_arguments() {
        let e = parse("sin(exp(exp(x)))").unwrap();
        let err = e.evaluate_ln(7.0).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::UnrepresentableArgument);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "1/x",
            "sin(1/x)",
            "sqrt(1/4-(x-1/2)^2)",
            "-x^2",
            "x^-3",
            "1-2-3",
            "x*(1-x)",
            "(x+1)/(x-1)",
            "-(x*x)",
        ] {
            let e = parse(text).unwrap();
            let printed = format!("{e}");
            assert_eq!(parse(&printed).unwrap(), e, "printed form: {printed}");
        }
    }
}
