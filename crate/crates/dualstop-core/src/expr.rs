//! A tiny arithmetic expression evaluator for user-defined basis columns.
//!
//! Supports `+ - * /`, unary minus, parentheses, numeric literals, named
//! variables, and the functions `exp(x)`, `max(a, b)` and `ncdf(x)` (the
//! standard normal CDF). Expressions are parsed once against a fixed
//! variable table and evaluated many times against value slices.

use crate::error::{Error, Result};
use alloc::boxed::Box;
use alloc::format;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Ncdf,
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression bound to a variable table.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    n_vars: usize,
}

impl Expr {
    /// Parse `src` with the given variable names in scope.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::ExprParse(format!(
                "unexpected trailing input at byte {} of {src:?}",
                p.pos
            )));
        }
        Ok(Expr {
            root,
            n_vars: vars.len(),
        })
    }

    /// Evaluate against variable values in table order. Non-finite results
    /// are rejected so degenerate columns cannot slip into an optimization.
    pub fn eval(&self, vals: &[f64]) -> Result<f64> {
        if vals.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: vals.len(),
            });
        }
        let v = eval_node(&self.root, vals);
        if !v.is_finite() {
            return Err(Error::ExprEval(format!("expression produced {v}")));
        }
        Ok(v)
    }
}

fn eval_node(node: &Node, vals: &[f64]) -> f64 {
    match node {
        Node::Num(x) => *x,
        Node::Var(i) => vals[*i],
        Node::Neg(a) => -eval_node(a, vals),
        Node::Add(a, b) => eval_node(a, vals) + eval_node(b, vals),
        Node::Sub(a, b) => eval_node(a, vals) - eval_node(b, vals),
        Node::Mul(a, b) => eval_node(a, vals) * eval_node(b, vals),
        Node::Div(a, b) => eval_node(a, vals) / eval_node(b, vals),
        Node::Max(a, b) => eval_node(a, vals).max(eval_node(b, vals)),
        Node::Call(Func::Exp, a) => libm::exp(eval_node(a, vals)),
        Node::Call(Func::Ncdf, a) => crate::math::norm_cdf(eval_node(a, vals)),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::ExprParse(format!(
                "expected '{}' at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.eat(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(Error::ExprParse(format!(
                "expected a value at byte {}",
                self.pos
            ))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let mut seen_exp = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let ok = c.is_ascii_digit()
                || c == b'.'
                || c == b'e'
                || c == b'E'
                || ((c == b'+' || c == b'-')
                    && self.pos > start
                    && matches!(self.src[self.pos - 1], b'e' | b'E'));
            if c == b'e' || c == b'E' {
                if seen_exp {
                    break;
                }
                seen_exp = true;
            }
            if !ok {
                break;
            }
            self.pos += 1;
        }
        let text = core::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii slice is valid utf8");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::ExprParse(format!("bad number literal {text:?}")))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii slice is valid utf8");
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let node = match name {
                "exp" => Node::Call(Func::Exp, Box::new(self.expr()?)),
                "ncdf" => Node::Call(Func::Ncdf, Box::new(self.expr()?)),
                "max" => {
                    let a = self.expr()?;
                    self.eat(b',')?;
                    let b = self.expr()?;
                    Node::Max(Box::new(a), Box::new(b))
                }
                other => {
                    return Err(Error::ExprParse(format!("unknown function {other:?}")))
                }
            };
            self.eat(b')')?;
            return Ok(node);
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(i) => Ok(Node::Var(i)),
            None => Err(Error::ExprParse(format!(
                "unknown variable {name:?}; in scope: {:?}",
                self.vars
            ))),
        }
    }
}
