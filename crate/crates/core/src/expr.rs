//! Complex rational expressions in one variable `z`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' exponent)?
//! exponent := '-'? digits | '(' '-'? digits ')'
//! atom   := number 'i'? | 'i' | 'z' | '(' expr ')'
//! ```

use std::fmt;

use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::jets::{ComplexJet2, POLE_THRESHOLD};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Z,
    Const(Complex64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn constant(re: f64, im: f64) -> Self {
        Expr::Const(Complex64::new(re, im))
    }

    pub fn add(self, o: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(o))
    }

    pub fn sub(self, o: Expr) -> Self {
        Expr::Sub(Box::new(self), Box::new(o))
    }

    pub fn mul(self, o: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(o))
    }

    pub fn div(self, o: Expr) -> Self {
        Expr::Div(Box::new(self), Box::new(o))
    }

    pub fn pow(self, n: i32) -> Self {
        Expr::Pow(Box::new(self), n)
    }

    /// Value at `z`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(match self {
            Expr::Z => z,
            Expr::Const(c) => *c,
            Expr::Neg(a) => -a.eval(z)?,
            Expr::Add(a, b) => a.eval(z)? + b.eval(z)?,
            Expr::Sub(a, b) => a.eval(z)? - b.eval(z)?,
            Expr::Mul(a, b) => a.eval(z)? * b.eval(z)?,
            Expr::Div(a, b) => {
                let d = b.eval(z)?;
                if d.norm() < POLE_THRESHOLD {
                    return Err(GeomError::DivisionByZeroAtPole(d.norm()));
                }
                a.eval(z)? / d
            }
            Expr::Pow(a, n) => {
                let v = a.eval(z)?;
                if *n < 0 && v.norm() < POLE_THRESHOLD {
                    return Err(GeomError::DivisionByZeroAtPole(v.norm()));
                }
                v.powi(*n)
            }
        })
    }

    /// Value and first two derivatives at `z`.
    pub fn eval_jet(&self, z: Complex64) -> Result<ComplexJet2> {
        self.jet(&ComplexJet2::var(z))
    }

    fn jet(&self, z: &ComplexJet2) -> Result<ComplexJet2> {
        Ok(match self {
            Expr::Z => *z,
            Expr::Const(c) => ComplexJet2::constant(z.z, *c),
            Expr::Neg(a) => -a.jet(z)?,
            Expr::Add(a, b) => a.jet(z)? + b.jet(z)?,
            Expr::Sub(a, b) => a.jet(z)? - b.jet(z)?,
            Expr::Mul(a, b) => a.jet(z)? * b.jet(z)?,
            Expr::Div(a, b) => a.jet(z)?.checked_div(b.jet(z)?)?,
            Expr::Pow(a, n) => a.jet(z)?.powi(*n)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Z => write!(f, "z"),
            Expr::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Const(c) if c.re == 0.0 => write!(f, "{}i", c.im),
            Expr::Const(c) => write!(f, "({}+{}i)", c.re, c.im),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, n) => write!(f, "({a})^({n})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(GeomError::ParseError { position: self.pos, expected: expected.into() })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("'{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = lhs.add(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = lhs.sub(self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = lhs.mul(self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = lhs.div(self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let paren = self.peek() == Some(b'(');
        if paren {
            self.pos += 1;
        }
        let negative = self.peek() == Some(b'-');
        if negative {
            self.pos += 1;
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail("integer exponent");
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: i32 = match digits.parse() {
            Ok(n) => n,
            Err(_) => {
                self.pos = start;
                return self.fail("exponent within 32-bit range");
            }
        };
        if paren {
            self.expect(b')')?;
        }
        Ok(base.pow(if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'z') => {
                self.pos += 1;
                Ok(Expr::Z)
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Expr::constant(0.0, 1.0))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            _ => self.fail("number, 'i', 'z' or '('"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let len = self.src.len();
        while self.pos < len && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < len && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < len && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < len && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => {
                self.pos = start;
                return self.fail("decimal number");
            }
        };
        if self.pos < len && self.src[self.pos] == b'i' {
            self.pos += 1;
            return Ok(Expr::constant(0.0, v));
        }
        Ok(Expr::constant(v, 0.0))
    }
}

/// Parses an expression in `z`; byte offsets in errors refer to `src`.
pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.fail("operator or end of input");
    }
    Ok(e)
}
