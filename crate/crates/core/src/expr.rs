//! Arithmetic expressions over the coordinates of a point.
//!
//! Scalars use numeric literals, the variables `x`, `y`, `z` (or `x1`..`xn`),
//! binary `+ - * / ^`, unary `-`, parentheses and the functions `sin`, `cos`,
//! `exp`, `sqrt`, `abs`. `^` is right-associative and binds tighter than unary
//! minus, so `-x^2` is `-(x^2)`. Vectors are bracketed, comma-separated lists.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::field::VectorField;
use crate::region::{MapFn, ScalarFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    SyntaxError {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("expected {expected} components, found {found}")]
    ArityMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => pow(a.eval(x), b.eval(x)),
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number `{v}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lexeme = &text[start..i];
            let v: f64 = lexeme.parse().map_err(|_| ExprError::SyntaxError {
                position: start,
                expected: "a number".into(),
                found: format!("`{lexeme}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^(),[]".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap();
            return Err(ExprError::SyntaxError {
                position: i,
                expected: "an expression".into(),
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn position(&self) -> usize {
        self.toks[self.pos].1
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::SyntaxError {
            position: self.position(),
            expected: expected.into(),
            found: self.peek().to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            // The exponent may carry its own sign: `x^-2`.
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn variable(&self, name: &str) -> Option<usize> {
        let index = match name {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => {
                let digits = name.strip_prefix('x')?;
                if digits.starts_with('0') {
                    return None;
                }
                digits.parse::<usize>().ok()?.checked_sub(1)?
            }
        };
        (index < self.dim).then_some(index)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let position = self.position();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                self.variable(&name)
                    .map(Node::Var)
                    .ok_or(ExprError::UnknownIdentifier { name, position })
            }
            _ => Err(self.error("an expression")),
        }
    }

    fn finish(&self) -> Result<(), ExprError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }
}

/// A parsed scalar expression in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    root: Node,
    dim: usize,
}

impl ScalarExpr {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ExprError> {
        let mut p = Parser {
            toks: lex(text)?,
            pos: 0,
            dim,
        };
        let root = p.expr()?;
        p.finish()?;
        Ok(ScalarExpr { root, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    pub fn into_fn(self) -> ScalarFn {
        Arc::new(move |x: &[f64]| self.eval(x))
    }
}

/// A parsed vector expression mapping `in_dim` variables to `out_dim` values.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorExpr {
    components: Vec<Node>,
    in_dim: usize,
}

impl VectorExpr {
    /// Parses `[e1, ..., en]` with `out_dim` components over `in_dim` variables.
    pub fn parse(text: &str, in_dim: usize, out_dim: usize) -> Result<Self, ExprError> {
        let mut p = Parser {
            toks: lex(text)?,
            pos: 0,
            dim: in_dim,
        };
        p.expect('[')?;
        let mut components = vec![p.expr()?];
        while p.eat(',') {
            components.push(p.expr()?);
        }
        p.expect(']')?;
        p.finish()?;
        if components.len() != out_dim {
            return Err(ExprError::ArityMismatch {
                expected: out_dim,
                found: components.len(),
            });
        }
        Ok(VectorExpr { components, in_dim })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn into_map(self) -> MapFn {
        Arc::new(move |x: &[f64]| self.eval(x))
    }
}

/// Parses a vector field given as `[e1, ..., e_dim]`.
pub fn parse_field_expr(text: &str, dim: usize) -> Result<VectorField, ExprError> {
    let e = VectorExpr::parse(text, dim, dim)?;
    Ok(VectorField::from_map(dim, e.into_map()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(text: &str, at: &[f64]) -> f64 {
        ScalarExpr::parse(text, at.len()).unwrap().eval(at)
    }

    #[test]
    fn field_examples() {
        let f = parse_field_expr("[y, -1]", 2).unwrap();
        assert_eq!(f.eval(&[0.3, 0.7]).unwrap(), vec![0.7, -1.0]);
        let g = parse_field_expr("[x^2 - y^2, 2*x*y]", 2).unwrap();
        assert_eq!(g.eval(&[0.0, 1.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn precedence() {
        assert_eq!(scalar("-x^2", &[3.0]), -9.0);
        assert_eq!(scalar("2^3^2", &[0.0]), 512.0);
        assert_eq!(scalar("1 - 2 - 3", &[0.0]), -4.0);
        assert_eq!(scalar("8 / 4 / 2", &[0.0]), 1.0);
        assert_eq!(scalar("2 * -x", &[3.0]), -6.0);
        assert_eq!(scalar("x^-1", &[4.0]), 0.25);
        assert_eq!(scalar("--x", &[5.0]), 5.0);
        assert_eq!(scalar("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(scalar("1.5e2 + .5", &[0.0]), 150.5);
        assert_eq!(scalar("x1 + x2 * x3", &[1.0, 2.0, 3.0]), 7.0);
        assert_eq!(scalar("z", &[1.0, 2.0, 3.0]), 3.0);
        assert_eq!(
            scalar("abs(x) + sqrt(4) + exp(0) + cos(0) + sin(0)", &[-1.0]),
            5.0
        );
    }

    #[test]
    fn errors() {
        match VectorExpr::parse("[x, ", 2, 2).unwrap_err() {
            ExprError::SyntaxError {
                position, found, ..
            } => {
                assert_eq!(position, 4);
                assert_eq!(found, "end of input");
            }
            e => panic!("{e:?}"),
        }
        assert_eq!(
            ScalarExpr::parse("x + w", 2).unwrap_err(),
            ExprError::UnknownIdentifier {
                name: "w".into(),
                position: 4
            }
        );
        assert!(matches!(
            ScalarExpr::parse("z", 2),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("x0", 2),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert_eq!(
            VectorExpr::parse("[x, y, 1]", 2, 2).unwrap_err(),
            ExprError::ArityMismatch {
                expected: 2,
                found: 3
            }
        );
        assert!(matches!(
            ScalarExpr::parse("sin x", 1),
            Err(ExprError::SyntaxError { position: 4, .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("x $ 1", 1),
            Err(ExprError::SyntaxError { position: 2, .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("(x", 1),
            Err(ExprError::SyntaxError { position: 2, .. })
        ));
        assert!(matches!(
            ScalarExpr::parse("x y", 2),
            Err(ExprError::SyntaxError { position: 2, .. })
        ));
    }

    #[test]
    fn mixed_dimension_maps() {
        let up = VectorExpr::parse("[x - 0.5, 0]", 1, 2).unwrap();
        assert_eq!(up.eval(&[1.0]), vec![0.5, 0.0]);
        let down = VectorExpr::parse("[(x + 1)/2]", 2, 1).unwrap();
        assert_eq!(down.eval(&[-1.0, 0.0]), vec![0.0]);
    }

    proptest! {
        #[test]
        fn agrees_with_direct_arithmetic(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let e = ScalarExpr::parse("3*x*y - x/(1 + y^2) + sin(x)*cos(y) - abs(x - y)^3", 2).unwrap();
            let direct = 3.0 * x * y - x / (1.0 + y * y) + x.sin() * y.cos() - (x - y).abs().powi(3);
            let got = e.eval(&[x, y]);
            prop_assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
}
