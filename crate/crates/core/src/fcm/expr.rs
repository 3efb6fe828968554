//! Arithmetic expressions for structural and inverse node functions.
//!
//! Grammar: `+ - * /` (also `−` and `·`), unary minus, `exp(e)`, `log(e)`,
//! `neg(e)`, parentheses, `pa[i]`, `noise`, `x` and numeric literals.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Noise,
    X,
    Pa(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub pa: &'a [f64],
    pub noise: f64,
    pub x: f64,
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn pa(i: usize) -> Self {
        Expr::Pa(i)
    }

    pub fn exp(self) -> Self {
        Expr::Unary(UnaryOp::Exp, Box::new(self))
    }

    pub fn log(self) -> Self {
        Expr::Unary(UnaryOp::Log, Box::new(self))
    }

    pub fn eval(&self, b: &Bindings<'_>) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Noise => b.noise,
            Expr::X => b.x,
            Expr::Pa(i) => b.pa[*i],
            Expr::Unary(op, e) => {
                let v = e.eval(b);
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Log => v.ln(),
                }
            }
            Expr::Binary(op, l, r) => {
                let (l, r) = (l.eval(b), r.eval(b));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                }
            }
        }
    }

    /// Largest `pa[i]` index referenced, if any.
    pub fn max_parent(&self) -> Option<usize> {
        match self {
            Expr::Pa(i) => Some(*i),
            Expr::Num(_) | Expr::Noise | Expr::X => None,
            Expr::Unary(_, e) => e.max_parent(),
            Expr::Binary(_, l, r) => l.max_parent().max(r.max_parent()),
        }
    }

    pub fn uses_noise(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Noise))
    }

    pub fn uses_x(&self) -> bool {
        self.any(&|e| matches!(e, Expr::X))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self)
            || match self {
                Expr::Unary(_, e) => e.any(pred),
                Expr::Binary(_, l, r) => l.any(pred) || r.any(pred),
                _ => false,
            }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(self))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::Binary(BinOp::$op, Box::new(self), Box::new(rhs))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Noise => f.write_str("noise"),
            Expr::X => f.write_str("x"),
            Expr::Pa(i) => write!(f, "pa[{i}]"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "neg({e})"),
            Expr::Unary(UnaryOp::Exp, e) => write!(f, "exp({e})"),
            Expr::Unary(UnaryOp::Log, e) => write!(f, "log({e})"),
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({l} {sym} {r})")
            }
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            chars: s.chars().collect(),
            pos: 0,
        };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, what: &str) -> Error {
        let src: String = self.chars.iter().collect();
        Error::Expression(format!("{what} at offset {} in `{src}`", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-' | '−') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*' | '·') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-' | '−') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "noise" => Ok(Expr::Noise),
                    "x" => Ok(Expr::X),
                    "pa" => {
                        self.expect('[')?;
                        self.skip_ws();
                        let start = self.pos;
                        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
                            self.pos += 1;
                        }
                        let idx: String = self.chars[start..self.pos].iter().collect();
                        let idx = idx.parse().map_err(|_| self.error("expected a parent index"))?;
                        self.expect(']')?;
                        Ok(Expr::Pa(idx))
                    }
                    "exp" | "log" | "neg" => {
                        let op = match word.as_str() {
                            "exp" => UnaryOp::Exp,
                            "log" => UnaryOp::Log,
                            _ => UnaryOp::Neg,
                        };
                        self.expect('(')?;
                        let e = self.sum()?;
                        self.expect(')')?;
                        Ok(Expr::Unary(op, Box::new(e)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier `{word}`")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.chars.get(p.pos).is_some_and(char::is_ascii_digit) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map(Expr::Num).map_err(|_| {
            self.pos = start;
            self.error("malformed number")
        })
    }
}
