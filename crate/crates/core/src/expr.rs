//! Scalar expression language used for maps, sections and vector fields.
//!
//! Grammar (ASCII, whitespace-insensitive):
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := base ("^" exponent)?
//! exponent := "-"? number
//! base     := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and does not chain:
//! `x^2^3` is rejected, write `(x^2)^3`. Variables are `x1..xm` and `t`;
//! functions are `sin cos exp log sqrt abs`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Elementary, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Zero-based space coordinate (`x1` is `Space(0)`).
    Space(usize),
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn elementary(self) -> Elementary {
        match self {
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Exp => Elementary::Exp,
            Func::Log => Elementary::Log,
            Func::Sqrt => Elementary::Sqrt,
            Func::Abs => Elementary::Abs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
}

impl Expr {
    pub fn parse(src: &str, dim: usize, allow_time: bool) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            dim,
            allow_time,
            end: src.len(),
        };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(Error::Syntax {
                offset: tok.offset,
                msg: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(e)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn space(i: usize) -> Expr {
        Expr::Var(Var::Space(i))
    }

    pub fn time() -> Expr {
        Expr::Var(Var::Time)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == Var::Time,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.uses_time(),
            Expr::Binary(_, a, b) => a.uses_time() || b.uses_time(),
        }
    }

    /// Largest space index used, plus one.
    pub fn space_arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(Var::Space(i)) => i + 1,
            Expr::Var(Var::Time) => 0,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.space_arity(),
            Expr::Binary(_, a, b) => a.space_arity().max(b.space_arity()),
        }
    }

    /// Replaces `x_i` by `space[i]` and `t` by `time` (when given).
    pub fn substitute(&self, space: &[Expr], time: Option<&Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(Var::Space(i)) => space.get(*i).cloned().unwrap_or_else(|| self.clone()),
            Expr::Var(Var::Time) => time.cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(space, time))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(space, time))),
            Expr::Pow(a, r) => Expr::Pow(Box::new(a.substitute(space, time)), *r),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(space, time)),
                Box::new(b.substitute(space, time)),
            ),
        }
    }

    /// Bottom-up evaluation over any [`Scalar`]; `space[i]` is bound to `x_{i+1}`.
    pub fn eval<R: Scalar>(&self, space: &[R], time: Option<&R>) -> Result<R> {
        let proto = space.first().or(time).ok_or(Error::Environment {
            needed: self.space_arity().max(1),
            given: 0,
        })?;
        self.eval_with(proto, space, time)
    }

    fn eval_with<R: Scalar>(&self, proto: &R, space: &[R], time: Option<&R>) -> Result<R> {
        Ok(match self {
            Expr::Const(c) => proto.lift(*c),
            Expr::Var(Var::Space(i)) => space
                .get(*i)
                .cloned()
                .ok_or(Error::Environment {
                    needed: i + 1,
                    given: space.len(),
                })?,
            Expr::Var(Var::Time) => time.cloned().ok_or(Error::Environment {
                needed: space.len() + 1,
                given: space.len(),
            })?,
            Expr::Neg(a) => -a.eval_with(proto, space, time)?,
            Expr::Call(f, a) => a.eval_with(proto, space, time)?.apply(f.elementary())?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_with(proto, space, time)?;
                let b = b.eval_with(proto, space, time)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.checked_div(&b)?,
                }
            }
            Expr::Pow(a, r) => powr(a.eval_with(proto, space, time)?, *r)?,
        })
    }
}

/// `u^r`; small integer exponents use repeated multiplication so negative
/// bases are fine, everything else goes through the binomial series.
fn powr<R: Scalar>(u: R, r: f64) -> Result<R> {
    if r.fract() == 0.0 && r.abs() <= 16.0 {
        let n = r.abs() as u32;
        let mut acc = u.lift(1.0);
        let mut base = u.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        if r < 0.0 {
            return u.lift(1.0).checked_div(&acc);
        }
        return Ok(acc);
    }
    u.apply(Elementary::Pow(r))
}

fn render_number(c: f64) -> String {
    // `{:?}` is the shortest round-tripping form ("2.0", "1e-7")
    format!("{c:?}")
}

/// Fully parenthesized rendering; `Expr::parse` inverts it.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", render_number(-c))
                } else {
                    write!(f, "{}", render_number(*c))
                }
            }
            Expr::Var(Var::Space(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Time) => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, r) => write!(f, "({a}^{})", render_number(*r)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let kind = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
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
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    msg: format!("malformed number '{text}'"),
                })?;
                out.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    msg: format!("unexpected byte 0x{b:02x}"),
                })
            }
        };
        i += 1;
        out.push(Token { kind, offset: start });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    allow_time: bool,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        let offset = self.offset();
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(Error::Syntax {
                offset,
                msg: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                offset,
                msg: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek_kind() != Some(&TokenKind::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let offset = self.offset();
        let negative = if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let r = match self.next() {
            Some(Token {
                kind: TokenKind::Number(n),
                ..
            }) => n,
            Some(_) => return Err(Error::NonConstantExponent { offset }),
            None => {
                return Err(Error::Syntax {
                    offset: self.end,
                    msg: "expected exponent, found end of input".into(),
                })
            }
        };
        if self.peek_kind() == Some(&TokenKind::Caret) {
            return Err(Error::Syntax {
                offset: self.offset(),
                msg: "'^' does not chain; add parentheses".into(),
            });
        }
        Ok(Expr::Pow(Box::new(base), if negative { -r } else { r }))
    }

    fn base(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let tok = self.next().ok_or(Error::Syntax {
            offset,
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Number(n) => Ok(Expr::Const(n)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if self.peek_kind() == Some(&TokenKind::LParen) {
                    let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier {
                        name: name.clone(),
                        offset,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.variable(&name, offset)
            }
            other => Err(Error::Syntax {
                offset,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr> {
        if name == "t" {
            if !self.allow_time {
                return Err(Error::TimeNotAllowed { offset });
            }
            return Ok(Expr::Var(Var::Time));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && !digits.starts_with('0') && digits.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(i) = digits.parse::<usize>() {
                    if i >= 1 && i <= self.dim {
                        return Ok(Expr::Var(Var::Space(i - 1)));
                    }
                }
            }
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, JetContext};

    #[test]
    fn parses_and_counts_nodes() {
        let e = Expr::parse("x1^2 + sin(t*x2)", 2, true).unwrap();
        assert_eq!(e.node_count(), 7);
    }

    #[test]
    fn truncated_input_reports_offset() {
        match Expr::parse("x1 +", 1, true) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identifier_errors() {
        assert!(matches!(
            Expr::parse("x3", 2, true),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            Expr::parse("1 + t", 2, false),
            Err(Error::TimeNotAllowed { offset: 4 })
        ));
        assert!(matches!(
            Expr::parse("foo(x1)", 2, false),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expr::parse("x0", 2, false),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expr::parse("x1^x2", 2, false),
            Err(Error::NonConstantExponent { offset: 3 })
        ));
        assert!(matches!(
            Expr::parse("x1^2^3", 2, false),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn precedence() {
        let e = Expr::parse("-x1^2", 1, false).unwrap();
        assert_eq!(e.eval(&[3.0], None).unwrap(), -9.0);
        let e = Expr::parse("1 - 2 * 3 / 4 + 2^-1", 1, false).unwrap();
        assert_eq!(e.eval(&[0.0], None).unwrap(), 1.0 - 1.5 + 0.5);
        let e = Expr::parse("2 * -x1", 1, false).unwrap();
        assert_eq!(e.eval(&[3.0], None).unwrap(), -6.0);
    }

    #[test]
    fn real_evaluation() {
        let e = Expr::parse("x1^2", 1, false).unwrap();
        assert_eq!(e.eval(&[3.0], None).unwrap(), 9.0);
        let e = Expr::parse("1/x1", 1, false).unwrap();
        assert_eq!(e.eval(&[0.0], None), Err(Error::DivisionByZero));
        let e = Expr::parse("log(x1)", 1, false).unwrap();
        assert!(matches!(e.eval(&[-1.0], None), Err(Error::Domain { .. })));
        let e = Expr::parse("t * x1", 1, true).unwrap();
        assert!(matches!(e.eval(&[1.0], None), Err(Error::Environment { .. })));
    }

    #[test]
    fn jet_evaluation() {
        // hand expansion: e^t·x1 at (x1=2, t=0), K=1 → 2 + 2t + x̂1
        let ctx = JetContext::new(1, 1).unwrap();
        let x = Jet::variable(0, 2.0, &ctx).unwrap();
        let t = Jet::variable(1, 0.0, &ctx).unwrap();
        let e = Expr::parse("exp(t)*x1", 1, true).unwrap();
        let j = e.eval(&[x], Some(&t)).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.coefficient(&[0, 1]).unwrap(), 2.0);
        assert_eq!(j.coefficient(&[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn render_round_trip() {
        for src in ["x1^2 + sin(t*x2)", "-(x1 - 3.5e-3)/cos(x2)^-1.5", "abs(x1) * 0.1"] {
            let e = Expr::parse(src, 2, true).unwrap();
            let again = Expr::parse(&e.to_string(), 2, true).unwrap();
            assert_eq!(e, again);
        }
    }
}
