//! A small expression language for coordinate functions: real literals,
//! identifiers, `+ - * /`, integer powers with `^`, and `sin`, `cos`, `sqrt`.
//!
//! Parsed expressions print back to a canonical text form; parsing the
//! printed form yields the same tree.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(f64),
    Var(String),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    Pow(Box<Ast>, i32),
    Sin(Box<Ast>),
    Cos(Box<Ast>),
    Sqrt(Box<Ast>),
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse { offset: self.pos, message: message.into() }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Ast> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Ast::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.integer()?;
            return Ok(Ast::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse::<i32>()
            .map_err(|_| Error::Parse { offset: start, message: "expected integer exponent".into() })
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Ast> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                self.pos += 1;
                if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Ast::Num)
            .map_err(|_| Error::Parse { offset: start, message: "malformed number".into() })
    }

    fn identifier(&mut self) -> Result<Ast> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = &self.src[start..self.pos];
        if self.peek() == Some(b'(') {
            let func = match name {
                "sin" => Ast::Sin as fn(Box<Ast>) -> Ast,
                "cos" => Ast::Cos,
                "sqrt" => Ast::Sqrt,
                _ => {
                    return Err(Error::Parse {
                        offset: start,
                        message: format!("unknown function `{name}`"),
                    })
                }
            };
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(func(Box::new(arg)));
        }
        Ok(Ast::Var(name.to_string()))
    }
}

/// Parses an expression; errors carry the byte offset of the failure.
pub fn parse(src: &str) -> Result<Ast> {
    if src.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".into() });
    }
    let mut p = Parser::new(src);
    let ast = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error("trailing input"));
    }
    Ok(ast)
}

/// Checks that every identifier is a chart coordinate or a bound parameter.
pub fn check_identifiers(
    src: &str,
    ast: &Ast,
    coords: &[String],
    params: &BTreeMap<String, f64>,
) -> Result<()> {
    match ast {
        Ast::Var(name) => {
            if coords.iter().any(|c| c == name) || params.contains_key(name) {
                Ok(())
            } else {
                Err(Error::UnknownIdentifier {
                    name: name.clone(),
                    offset: src.find(name.as_str()).unwrap_or(0),
                })
            }
        }
        Ast::Num(_) => Ok(()),
        Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) | Ast::Div(a, b) => {
            check_identifiers(src, a, coords, params)?;
            check_identifiers(src, b, coords, params)
        }
        Ast::Neg(a) | Ast::Sin(a) | Ast::Cos(a) | Ast::Sqrt(a) | Ast::Pow(a, _) => {
            check_identifiers(src, a, coords, params)
        }
    }
}

fn precedence(ast: &Ast) -> u8 {
    match ast {
        Ast::Add(..) | Ast::Sub(..) => 1,
        Ast::Mul(..) | Ast::Div(..) => 2,
        Ast::Neg(..) => 3,
        Ast::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Ast, min: u8) -> fmt::Result {
    if precedence(child) < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Num(v) => write!(f, "{v}"),
            Ast::Var(name) => write!(f, "{name}"),
            Ast::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Ast::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Ast::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Ast::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 5)
            }
            Ast::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Ast::Pow(a, k) => {
                write_child(f, a, 5)?;
                write!(f, "^{k}")
            }
            Ast::Sin(a) => write!(f, "sin({a})"),
            Ast::Cos(a) => write!(f, "cos({a})"),
            Ast::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(ast: &Ast, vars: &BTreeMap<String, f64>) -> f64 {
        match ast {
            Ast::Num(v) => *v,
            Ast::Var(n) => vars[n],
            Ast::Add(a, b) => eval(a, vars) + eval(b, vars),
            Ast::Sub(a, b) => eval(a, vars) - eval(b, vars),
            Ast::Mul(a, b) => eval(a, vars) * eval(b, vars),
            Ast::Div(a, b) => eval(a, vars) / eval(b, vars),
            Ast::Neg(a) => -eval(a, vars),
            Ast::Pow(a, k) => eval(a, vars).powi(*k),
            Ast::Sin(a) => eval(a, vars).sin(),
            Ast::Cos(a) => eval(a, vars).cos(),
            Ast::Sqrt(a) => eval(a, vars).sqrt(),
        }
    }

    #[test]
    fn parse_print_parse_is_idempotent() {
        let samples = [
            "(1+y^2)*p_x",
            "sqrt(1+y^2)*p_x",
            "-mu*R*cos(phi)/I",
            "1 - x*(y - 2)^3 / (4.5e-1 + z)",
            "0",
        ];
        for src in samples {
            let a = parse(src).unwrap();
            let printed = a.to_string();
            let b = parse(&printed).unwrap();
            assert_eq!(a, b, "round-trip failed for `{src}`");
            assert_eq!(printed, b.to_string());
        }
    }

    #[test]
    fn printed_form_evaluates_identically() {
        let vars: BTreeMap<String, f64> =
            [("x", 0.3), ("y", -1.2), ("z", 2.0), ("p_x", 0.7)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        for src in ["(1+y^2)*p_x", "sin(x)*cos(y) - sqrt(z)/(1+p_x^2)", "-x^3 + y^-2"] {
            let a = parse(src).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert!((eval(&a, &vars) - eval(&b, &vars)).abs() <= 1e-12);
        }
    }

    #[test]
    fn errors_carry_byte_offsets() {
        match parse("1 + @") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("sin x").is_err());
    }
}
