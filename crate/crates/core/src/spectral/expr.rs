//! Small arithmetic expression grammar for density definitions.
//!
//! Grammar (precedence low to high):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?          -- right associative power
//! unary  := '-' unary | primary
//! primary:= number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `u1..u3` (coordinates), `r` (Euclidean norm of u), `pi`,
//! `e`; functions: `cos`, `sin`, `exp`, `abs`, `sqrt`, `log`.

use crate::error::{Result, RigidityError};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| {
                    RigidityError::InvalidInput(format!("bad number literal '{text}'"))
                })?;
                toks.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(RigidityError::InvalidInput(format!(
                    "unexpected character '{other}' in expression"
                )))
            }
        }
    }
    Ok(toks)
}

/// Parsed expression tree.
#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Norm,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
    Exp(Box<Expr>),
    Abs(Box<Expr>),
    Sqrt(Box<Expr>),
    Log(Box<Expr>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(x) if x == t => Ok(()),
            other => Err(RigidityError::InvalidInput(format!(
                "expected {t:?}, found {other:?}"
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        // Unary minus binds looser than '^': -x^2 is -(x^2).
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            let exp = self.factor()?; // right associative; exponent may be signed
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.next();
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen)?;
                    return match name.as_str() {
                        "cos" => Ok(Expr::Cos(arg)),
                        "sin" => Ok(Expr::Sin(arg)),
                        "exp" => Ok(Expr::Exp(arg)),
                        "abs" => Ok(Expr::Abs(arg)),
                        "sqrt" => Ok(Expr::Sqrt(arg)),
                        "log" => Ok(Expr::Log(arg)),
                        other => Err(RigidityError::InvalidInput(format!(
                            "unknown function '{other}'"
                        ))),
                    };
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    "r" => Ok(Expr::Norm),
                    _ => {
                        if let Some(rest) = name.strip_prefix('u') {
                            if let Ok(i) = rest.parse::<usize>() {
                                if i >= 1 && i <= self.dim {
                                    return Ok(Expr::Coord(i - 1));
                                }
                                return Err(RigidityError::InvalidInput(format!(
                                    "coordinate u{i} out of range for dimension {}",
                                    self.dim
                                )));
                            }
                        }
                        Err(RigidityError::InvalidInput(format!(
                            "unknown identifier '{name}'"
                        )))
                    }
                }
            }
            other => Err(RigidityError::InvalidInput(format!(
                "unexpected token {other:?}"
            ))),
        }
    }
}

impl Expr {
    /// Parse an expression in dimension `dim` (coordinates `u1..u{dim}`).
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, dim };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(RigidityError::InvalidInput(format!(
                "trailing tokens in expression '{src}'"
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(i) => u[*i],
            Expr::Norm => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Expr::Add(a, b) => a.eval(u) + b.eval(u),
            Expr::Sub(a, b) => a.eval(u) - b.eval(u),
            Expr::Mul(a, b) => a.eval(u) * b.eval(u),
            Expr::Div(a, b) => a.eval(u) / b.eval(u),
            Expr::Pow(a, b) => {
                let base = a.eval(u);
                let exp = b.eval(u);
                if exp.fract() == 0.0 && exp.abs() < 1e9 {
                    base.powi(exp as i32)
                } else {
                    base.powf(exp)
                }
            }
            Expr::Neg(a) => -a.eval(u),
            Expr::Cos(a) => a.eval(u).cos(),
            Expr::Sin(a) => a.eval(u).sin(),
            Expr::Exp(a) => a.eval(u).exp(),
            Expr::Abs(a) => a.eval(u).abs(),
            Expr::Sqrt(a) => a.eval(u).sqrt(),
            Expr::Log(a) => a.eval(u).ln(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("(u1 - u2)^2", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 1.0]), 4.0);

        let e = Expr::parse("2 - 2*cos(u1)", 1).unwrap();
        let v = e.eval(&[std::f64::consts::PI]);
        assert!((v - 4.0).abs() < 1e-12);

        let e = Expr::parse("exp(-r^2 / (4*pi))", 2).unwrap();
        let v = e.eval(&[1.0, 1.0]);
        assert!((v - (-2.0 / (4.0 * std::f64::consts::PI)).exp()).abs() < 1e-12);
    }

    #[test]
    fn power_is_right_associative_and_unary_minus_binds() {
        let e = Expr::parse("2^3^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 512.0);
        let e = Expr::parse("-u1^2 + 1", 1).unwrap();
        // -(u1^2) + 1 at u1=2 -> -3
        assert_eq!(e.eval(&[2.0]), -3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("u3", 2).is_err());
        assert!(Expr::parse("foo(u1)", 1).is_err());
        assert!(Expr::parse("1 +", 1).is_err());
        assert!(Expr::parse("(u1", 1).is_err());
    }
}
