//! Scalar expression engine: parsing, evaluation and exact symbolic
//! differentiation of coordinate functions.
//!
//! Every geometric field in the toolkit (metric entries, map components,
//! vector fields) is an [`Expr`] over chart coordinates `x0..x{d-1}`, so
//! first and second derivatives are exact and identity residuals measure
//! only rounding.
//!
//! Grammar:
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' integer)?
//! unary  := '-'? atom
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ident  := 'x' digits
//! func   ∈ { sin, cos, exp, log, sqrt }
//! ```

use crate::scalar::{Dual64, Scalar};
use std::fmt;
use thiserror::Error;

/// Differentiable scalar expression over chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based coordinate index.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Integer exponents only; fractional powers go through Sqrt/Exp∘Log.
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { name: String, offset: usize },
    #[error("variable index out of range: x{index} with dim {dim} (byte {offset})")]
    VarOutOfRange {
        index: usize,
        dim: usize,
        offset: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("domain error: {op} of {arg} in `{node}`")]
    Domain {
        op: &'static str,
        arg: f64,
        node: String,
    },
    #[error("point has {got} coordinates, expression expects index {index}")]
    PointDim { index: usize, got: usize },
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::Syntax {
                offset: self.pos,
                msg: format!("expected `{}`", c as char),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.text[start..self.pos]
            .parse::<i32>()
            .map_err(|_| ParseError::Syntax {
                offset: start,
                msg: "expected integer exponent".into(),
            })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(ParseError::Syntax {
                offset: self.pos,
                msg: "expected number, identifier or `(`".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // scientific notation: 1e-3, 2.5e4
        if self.bytes.get(self.pos) == Some(&b'e') || self.bytes.get(self.pos) == Some(&b'E') {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        self.text[start..self.pos]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                msg: "malformed number".into(),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if let Some(digits) = name.strip_prefix('x') {
            if let Ok(index) = digits.parse::<usize>() {
                if index >= self.dim {
                    return Err(ParseError::VarOutOfRange {
                        index,
                        dim: self.dim,
                        offset: start,
                    });
                }
                return Ok(Expr::Var(index));
            }
        }
        let func = match name {
            "sin" => Expr::Sin as fn(Box<Expr>) -> Expr,
            "cos" => Expr::Cos,
            "exp" => Expr::Exp,
            "log" => Expr::Log,
            "sqrt" => Expr::Sqrt,
            _ => {
                return Err(ParseError::UnknownIdent {
                    name: name.to_string(),
                    offset: start,
                })
            }
        };
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(func(Box::new(arg)))
    }
}

impl Expr {
    /// Parse an infix expression over `x0..x{dim-1}`.
    pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
        let mut p = Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            dim,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(ParseError::Syntax {
                offset: p.pos,
                msg: "trailing input".into(),
            });
        }
        Ok(e)
    }

    /// Evaluate over any scalar type (plain reals or dual numbers).
    pub fn eval_s<S: Scalar>(&self, point: &[S]) -> Result<S, EvalError> {
        match self {
            Expr::Const(c) => Ok(S::from_f64(*c)),
            Expr::Var(i) => point.get(*i).copied().ok_or(EvalError::PointDim {
                index: *i,
                got: point.len(),
            }),
            Expr::Add(a, b) => Ok(a.eval_s(point)? + b.eval_s(point)?),
            Expr::Sub(a, b) => Ok(a.eval_s(point)? - b.eval_s(point)?),
            Expr::Mul(a, b) => Ok(a.eval_s(point)? * b.eval_s(point)?),
            Expr::Div(a, b) => {
                let den = b.eval_s(point)?;
                if den.value() == 0.0 {
                    return Err(EvalError::Domain {
                        op: "division by zero",
                        arg: 0.0,
                        node: self.to_string(),
                    });
                }
                Ok(a.eval_s(point)? / den)
            }
            Expr::Neg(a) => Ok(-a.eval_s(point)?),
            Expr::Pow(a, n) => {
                let base = a.eval_s(point)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(EvalError::Domain {
                        op: "negative power of zero",
                        arg: 0.0,
                        node: self.to_string(),
                    });
                }
                Ok(base.powi(*n))
            }
            Expr::Sin(a) => Ok(a.eval_s(point)?.sin()),
            Expr::Cos(a) => Ok(a.eval_s(point)?.cos()),
            Expr::Exp(a) => Ok(a.eval_s(point)?.exp()),
            Expr::Log(a) => {
                let v = a.eval_s(point)?;
                if v.value() <= 0.0 {
                    return Err(EvalError::Domain {
                        op: "log of non-positive",
                        arg: v.value(),
                        node: self.to_string(),
                    });
                }
                Ok(v.ln())
            }
            Expr::Sqrt(a) => {
                let v = a.eval_s(point)?;
                if v.value() < 0.0 {
                    return Err(EvalError::Domain {
                        op: "sqrt of negative",
                        arg: v.value(),
                        node: self.to_string(),
                    });
                }
                Ok(v.sqrt())
            }
        }
    }

    /// Plain IEEE-754 double evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval_s(point)
    }

    /// Value and directional derivative `⟨∇e(point), direction⟩`.
    pub fn eval_dual(&self, point: &[f64], direction: &[f64]) -> Result<Dual64, EvalError> {
        let p: Vec<Dual64> = point
            .iter()
            .zip(direction)
            .map(|(&v, &d)| Dual64::new(v, d))
            .collect();
        self.eval_s(&p)
    }

    /// Exact symbolic partial derivative with respect to `x{var}`.
    /// Results are unreduced ASTs; no simplification beyond dropping
    /// structurally-zero branches.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr::*;
        let zero = || Const(0.0);
        match self {
            Const(_) => zero(),
            Var(i) => {
                if *i == var {
                    Const(1.0)
                } else {
                    zero()
                }
            }
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Div(a, b) => {
                // (a/b)' = (a'b - ab') / b^2
                let num = sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                );
                div(num, Pow(b.clone(), 2))
            }
            Neg(a) => neg(a.diff(var)),
            Pow(a, n) => {
                if *n == 0 {
                    zero()
                } else {
                    mul(
                        mul(Const(*n as f64), Pow(a.clone(), n - 1)),
                        a.diff(var),
                    )
                }
            }
            Sin(a) => mul(Cos(a.clone()), a.diff(var)),
            Cos(a) => neg(mul(Sin(a.clone()), a.diff(var))),
            Exp(a) => mul(Exp(a.clone()), a.diff(var)),
            Log(a) => div(a.diff(var), (**a).clone()),
            Sqrt(a) => div(a.diff(var), mul(Const(2.0), Sqrt(a.clone()))),
        }
    }

    /// Largest variable index + 1 occurring in the tree.
    pub fn max_dim(&self) -> usize {
        use Expr::*;
        match self {
            Const(_) => 0,
            Var(i) => i + 1,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.max_dim().max(b.max_dim()),
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Log(a) | Sqrt(a) => a.max_dim(),
            Pow(a, _) => a.max_dim(),
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        Expr::Neg(Box::new(b))
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(0.0)
    } else if matches!(a, Expr::Const(c) if c == 1.0) {
        b
    } else if matches!(b, Expr::Const(c) if c == 1.0) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(0.0)
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

fn neg(a: Expr) -> Expr {
    if is_zero(&a) {
        a
    } else {
        Expr::Neg(Box::new(a))
    }
}

impl fmt::Display for Expr {
    /// Unparse with full parenthesization of compound operands, so that
    /// parse ∘ unparse is the identity on ASTs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atomic(e: &Expr) -> bool {
            matches!(
                e,
                Expr::Const(_)
                    | Expr::Var(_)
                    | Expr::Sin(_)
                    | Expr::Cos(_)
                    | Expr::Exp(_)
                    | Expr::Log(_)
                    | Expr::Sqrt(_)
            )
        }
        fn wrap(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if atomic(e) && !matches!(e, Expr::Const(c) if *c < 0.0) {
                write!(f, "{e}")
            } else {
                write!(f, "({e})")
            }
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => {
                wrap(a, f)?;
                write!(f, " + ")?;
                wrap(b, f)
            }
            Expr::Sub(a, b) => {
                wrap(a, f)?;
                write!(f, " - ")?;
                wrap(b, f)
            }
            Expr::Mul(a, b) => {
                wrap(a, f)?;
                write!(f, " * ")?;
                wrap(b, f)
            }
            Expr::Div(a, b) => {
                wrap(a, f)?;
                write!(f, " / ")?;
                wrap(b, f)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(a, f)
            }
            Expr::Pow(a, n) => {
                wrap(a, f)?;
                write!(f, "^{n}")
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Expr::*;

    #[test]
    fn parse_basic_shapes() {
        let e = Expr::parse("x0^2 + sin(x1)", 2).unwrap();
        assert_eq!(
            e,
            Add(
                Box::new(Pow(Box::new(Var(0)), 2)),
                Box::new(Sin(Box::new(Var(1))))
            )
        );
    }

    #[test]
    fn var_out_of_range() {
        match Expr::parse("x2", 2) {
            Err(ParseError::VarOutOfRange { index: 2, dim: 2, .. }) => {}
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn rational_eval() {
        let e = Expr::parse("1/(1+x0^2+x1^2)", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(
            Expr::parse("x0*x1", 2).unwrap().eval(&[3.0, 4.0]).unwrap(),
            12.0
        );
        assert_eq!(
            Expr::parse("exp(0*x0)", 1).unwrap().eval(&[7.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn log_domain_error() {
        let e = Expr::parse("log(x0)", 1).unwrap();
        assert!(matches!(
            e.eval(&[-1.0]),
            Err(EvalError::Domain { op: "log of non-positive", .. })
        ));
    }

    #[test]
    fn diff_examples() {
        let e = Expr::parse("x0^2", 1).unwrap();
        let d = e.diff(0);
        for &x in &[0.0, 1.3, -2.2] {
            assert!((d.eval(&[x]).unwrap() - 2.0 * x).abs() < 1e-15);
        }
        let s = Expr::parse("sin(x1)", 2).unwrap();
        assert_eq!(s.diff(0), Const(0.0));
    }

    #[test]
    fn eval_dual_examples() {
        let e = Expr::parse("x0*x0", 1).unwrap();
        let d = e.eval_dual(&[3.0], &[1.0]).unwrap();
        assert_eq!((d.val, d.der), (9.0, 6.0));
        let c = Expr::parse("42", 3).unwrap();
        let d = c.eval_dual(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((d.val, d.der), (42.0, 0.0));
    }

    #[test]
    fn syntax_error_carries_offset() {
        match Expr::parse("x0 + ", 1) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            Expr::parse("tan(x0)", 1),
            Err(ParseError::UnknownIdent { .. })
        ));
    }

    #[test]
    fn roundtrip_identity_on_asts() {
        let samples = [
            "x0^2 + sin(x1)",
            "1/(1+x0^2+x1^2)",
            "-(x0*x1) + exp(x1)/sqrt(1+x0^2)",
            "cos(x0 - x1)^3 * log(2 + x0)",
        ];
        for s in samples {
            let e = Expr::parse(s, 2).unwrap();
            let back = Expr::parse(&e.to_string(), 2).unwrap();
            assert_eq!(e, back, "roundtrip failed for {s}");
        }
    }
}
