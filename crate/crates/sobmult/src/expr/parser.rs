//! Recursive-descent parser.
//!
//! ```text
//! expression := term { ('+' | '-') term }
//! term       := unary { ('*' | '/') unary }
//! unary      := '-' unary | power
//! power      := primary [ '^' exponent ]
//! exponent   := [ '-' ] integer
//! primary    := number | 'x' | func '(' expression ')' | '(' expression ')'
//! func       := 'sin' | 'cos' | 'exp' | 'sqrt' | 'log'
//! ```
//!
//! Binary operators are left-associative; `^` binds tighter than unary minus
//! and does not chain (`x^2^3` is rejected).

use super::token::{tokenize, Token, TokenKind};
use super::{Expr, ParseError, ParseErrorKind};

/// Largest accepted |exponent|; keeps derivative exponents away from i32 edges.
const MAX_EXPONENT: i64 = 1_000_000;

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { position: 0, kind: ParseErrorKind::EmptyInput });
    }
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.expression()?;
    let t = p.peek();
    if t.kind != TokenKind::End {
        return Err(ParseError {
            position: t.position,
            kind: ParseErrorKind::UnexpectedToken(t.lexeme.clone()),
        });
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, ops: &[&str]) -> Option<String> {
        let t = self.peek();
        if t.kind == TokenKind::Operator && ops.contains(&t.lexeme.as_str()) {
            return Some(self.bump().lexeme);
        }
        None
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&["+", "-"]) {
            let rhs = self.term()?;
            lhs = if op == "+" {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&["*", "/"]) {
            let rhs = self.unary()?;
            lhs = if op == "*" {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op(&["-"]).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&["^"]).is_some() {
            let n = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let negative = self.eat_op(&["-"]).is_some();
        let t = self.bump();
        if t.kind != TokenKind::Number {
            return Err(ParseError { position: t.position, kind: ParseErrorKind::ExpectedExponent });
        }
        let n: i64 = t
            .lexeme
            .parse()
            .map_err(|_| ParseError { position: t.position, kind: ParseErrorKind::NonIntegerExponent })?;
        if n > MAX_EXPONENT {
            return Err(ParseError { position: t.position, kind: ParseErrorKind::ExponentOutOfRange });
        }
        let n = if negative { -n } else { n };
        Ok(n as i32)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.kind {
            TokenKind::Number => {
                let v: f64 = t.lexeme.parse().map_err(|_| ParseError {
                    position: t.position,
                    kind: ParseErrorKind::UnexpectedToken(t.lexeme.clone()),
                })?;
                Ok(Expr::Constant(v))
            }
            TokenKind::Identifier => match t.lexeme.as_str() {
                "x" => Ok(Expr::X),
                "sin" | "cos" | "exp" | "sqrt" | "log" => {
                    let open = self.bump();
                    if open.lexeme != "(" {
                        return Err(ParseError {
                            position: open.position,
                            kind: ParseErrorKind::UnexpectedToken(open.lexeme),
                        });
                    }
                    let arg = Box::new(self.expression()?);
                    let close = self.bump();
                    if close.lexeme != ")" {
                        return Err(ParseError {
                            position: close.position,
                            kind: ParseErrorKind::UnbalancedParenthesis,
                        });
                    }
                    Ok(match t.lexeme.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        "exp" => Expr::Exp(arg),
                        "sqrt" => Expr::Sqrt(arg),
                        _ => Expr::Log(arg),
                    })
                }
                other => Err(ParseError {
                    position: t.position,
                    kind: ParseErrorKind::UnknownIdentifier(other.to_owned()),
                }),
            },
            TokenKind::Paren if t.lexeme == "(" => {
                let inner = self.expression()?;
                let close = self.bump();
                if close.lexeme != ")" {
                    return Err(ParseError {
                        position: close.position,
                        kind: ParseErrorKind::UnbalancedParenthesis,
                    });
                }
                Ok(inner)
            }
            _ => Err(ParseError {
                position: t.position,
                kind: ParseErrorKind::UnexpectedToken(t.lexeme.clone()),
            }),
        }
    }
}
