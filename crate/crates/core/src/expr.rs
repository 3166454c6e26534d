//! Entrywise scalar expressions in `t` and `eps`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right-associative
//! atom    := number | 't' | 'eps' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | sqrt | abs
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::matrix::RealMat4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error: {what} at bytes {}..{}", span.start, span.end)]
    Domain { what: String, span: Range<usize> },
    #[error("entry ({i},{j}): {source}")]
    Entry {
        i: usize,
        j: usize,
        #[source]
        source: Box<ExprError>,
    },
    #[error("entries ({i},{j}) and ({j},{i}) disagree: `{upper}` vs `{lower}`")]
    SymmetryConflict {
        i: usize,
        j: usize,
        upper: String,
        lower: String,
    },
    #[error("invalid entry index ({i},{j}); indices run 0..=3")]
    BadIndex { i: usize, j: usize },
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A parsed expression. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Range<usize>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    fn new(kind: ExprKind, span: Range<usize>) -> Self {
        Self { kind, span }
    }

    fn synthetic(kind: ExprKind) -> Self {
        Self::new(kind, 0..0)
    }

    pub fn num(x: f64) -> Self {
        Self::synthetic(ExprKind::Num(x))
    }

    pub fn eval(&self, t: f64, eps: f64) -> Result<f64, ExprError> {
        let value = match &self.kind {
            ExprKind::Num(x) => return Ok(*x),
            ExprKind::Var(Var::T) => return Ok(t),
            ExprKind::Var(Var::Eps) => return Ok(eps),
            ExprKind::Neg(e) => -e.eval(t, eps)?,
            ExprKind::Binary(op, l, r) => {
                let a = l.eval(t, eps)?;
                let b = r.eval(t, eps)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            ExprKind::Call(f, arg) => {
                let x = arg.eval(t, eps)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain("square root of a negative number"));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    fn domain(&self, what: &str) -> ExprError {
        ExprError::Domain {
            what: what.to_string(),
            span: self.span.clone(),
        }
    }

    pub fn mentions_eps(&self) -> bool {
        match &self.kind {
            ExprKind::Num(_) | ExprKind::Var(Var::T) => false,
            ExprKind::Var(Var::Eps) => true,
            ExprKind::Neg(e) | ExprKind::Call(_, e) => e.mentions_eps(),
            ExprKind::Binary(_, l, r) => l.mentions_eps() || r.mentions_eps(),
        }
    }

    /// Splits `self = base + eps·slope` with `base`, `slope` free of `eps`,
    /// when `eps` occurs only linearly and never inside a function call or
    /// power. Returns `None` otherwise.
    pub fn linear_in_eps(&self) -> Option<(Expr, Expr)> {
        use ExprKind::*;
        let zero = || Expr::num(0.0);
        if !self.mentions_eps() {
            return Some((self.clone(), zero()));
        }
        let bin = |op, l: Expr, r: Expr| Expr::synthetic(Binary(op, Box::new(l), Box::new(r)));
        match &self.kind {
            Var(self::Var::Eps) => Some((zero(), Expr::num(1.0))),
            Neg(e) => {
                let (b, s) = e.linear_in_eps()?;
                Some((Expr::synthetic(Neg(Box::new(b))), Expr::synthetic(Neg(Box::new(s)))))
            }
            Binary(op @ (BinOp::Add | BinOp::Sub), l, r) => {
                let (lb, ls) = l.linear_in_eps()?;
                let (rb, rs) = r.linear_in_eps()?;
                Some((bin(*op, lb, rb), bin(*op, ls, rs)))
            }
            Binary(BinOp::Mul, l, r) => {
                if !l.mentions_eps() {
                    let (rb, rs) = r.linear_in_eps()?;
                    Some((bin(BinOp::Mul, (**l).clone(), rb), bin(BinOp::Mul, (**l).clone(), rs)))
                } else if !r.mentions_eps() {
                    let (lb, ls) = l.linear_in_eps()?;
                    Some((bin(BinOp::Mul, lb, (**r).clone()), bin(BinOp::Mul, ls, (**r).clone())))
                } else {
                    None
                }
            }
            Binary(BinOp::Div, l, r) if !r.mentions_eps() => {
                let (lb, ls) = l.linear_in_eps()?;
                Some((bin(BinOp::Div, lb, (**r).clone()), bin(BinOp::Div, ls, (**r).clone())))
            }
            _ => None,
        }
    }
}

fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        ExprKind::Neg(_) => 3,
        ExprKind::Binary(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

/// Prints with the minimum parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, needs: bool| {
            if needs {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &self.kind {
            ExprKind::Num(x) => write!(f, "{x}"),
            ExprKind::Var(Var::T) => write!(f, "t"),
            ExprKind::Var(Var::Eps) => write!(f, "eps"),
            ExprKind::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            ExprKind::Neg(e) => {
                write!(f, "-")?;
                wrap(f, e, precedence(&e.kind) < 3)
            }
            ExprKind::Binary(op, l, r) => {
                let p = precedence(&self.kind);
                let (sym, left_needs, right_needs) = match op {
                    BinOp::Add => ("+", precedence(&l.kind) < p, precedence(&r.kind) <= p),
                    BinOp::Sub => ("-", precedence(&l.kind) < p, precedence(&r.kind) <= p),
                    BinOp::Mul => ("*", precedence(&l.kind) < p, precedence(&r.kind) <= p),
                    BinOp::Div => ("/", precedence(&l.kind) < p, precedence(&r.kind) <= p),
                    // base binds tighter than unary minus; exponent is a unary
                    BinOp::Pow => ("^", precedence(&l.kind) <= p, precedence(&r.kind) < 3),
                };
                wrap(f, l, left_needs)?;
                write!(f, " {sym} ")?;
                wrap(f, r, right_needs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token with its byte span.
    fn next(&mut self) -> Result<(Tok, Range<usize>), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start..start));
        };
        let single = |tok| Ok((tok, start..start + 1));
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                self.pos += 1;
                single(Tok::Op(c))
            }
            '(' => {
                self.pos += 1;
                single(Tok::LParen)
            }
            ')' => {
                self.pos += 1;
                single(Tok::RParen)
            }
            '0'..='9' | '.' => {
                let bytes = rest.as_bytes();
                let mut end = 0;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut k = end + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                let text = &rest[..end];
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    expected: vec!["number"],
                    found: format!("`{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ExprError::Syntax {
                        offset: start,
                        expected: vec!["finite number"],
                        found: format!("`{text}`"),
                    });
                }
                self.pos += end;
                Ok((Tok::Num(value), start..self.pos))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let end = rest
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(rest.len());
                self.pos += end;
                Ok((Tok::Ident(rest[..end].to_string()), start..self.pos))
            }
            other => Err(ExprError::Syntax {
                offset: start,
                expected: vec!["number", "identifier", "`(`"],
                found: format!("`{other}`"),
            }),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    span: Range<usize>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ExprError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, span) = lexer.next()?;
        Ok(Self { lexer, tok, span })
    }

    fn bump(&mut self) -> Result<(Tok, Range<usize>), ExprError> {
        let (tok, span) = self.lexer.next()?;
        let prev_tok = std::mem::replace(&mut self.tok, tok);
        let prev_span = std::mem::replace(&mut self.span, span);
        Ok((prev_tok, prev_span))
    }

    fn unexpected(&self, expected: Vec<&'static str>) -> ExprError {
        ExprError::Syntax {
            offset: self.span.start,
            expected,
            found: self.tok.describe(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            let span = lhs.span.start..rhs.span.end;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            let span = lhs.span.start..rhs.span.end;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            let (_, span) = self.bump()?;
            let inner = self.unary()?;
            let span = span.start..inner.span.end;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            let span = base.span.start..exponent.span.end;
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(x) => {
                let (_, span) = self.bump()?;
                Ok(Expr::new(ExprKind::Num(x), span))
            }
            Tok::LParen => {
                let (_, open) = self.bump()?;
                let mut inner = self.sum()?;
                let close = self.expect_rparen()?;
                inner.span = open.start..close.end;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, span) = self.bump()?;
                match name.as_str() {
                    "t" => Ok(Expr::new(ExprKind::Var(Var::T), span)),
                    "eps" => Ok(Expr::new(ExprKind::Var(Var::Eps), span)),
                    _ => {
                        let Some(func) = Func::from_name(&name) else {
                            return Err(ExprError::UnknownIdentifier {
                                name,
                                offset: span.start,
                            });
                        };
                        if self.tok != Tok::LParen {
                            return Err(self.unexpected(vec!["`(`"]));
                        }
                        self.bump()?;
                        let arg = self.sum()?;
                        let close = self.expect_rparen()?;
                        Ok(Expr::new(ExprKind::Call(func, Box::new(arg)), span.start..close.end))
                    }
                }
            }
            _ => Err(self.unexpected(vec!["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<Range<usize>, ExprError> {
        if self.tok != Tok::RParen {
            return Err(self.unexpected(vec!["`)`", "operator"]));
        }
        Ok(self.bump()?.1)
    }
}

pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.sum()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected(vec!["operator", "end of input"]));
    }
    Ok(expr)
}

/// Index of `(i, j)` (either order) in the packed upper triangle.
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * 4 - r * (r + 1) / 2 + c
}

/// A real symmetric matrix-valued function `A(t, eps)`, stored as its upper
/// triangle so that `A = Aᵀ` holds by construction.
#[derive(Debug, Clone)]
pub struct SymmetricCurve {
    entries: [Expr; 10],
    sources: [String; 10],
    has_eps: bool,
    /// Exact `∂A/∂eps` entries, present when every entry is linear in `eps`.
    eps_slope: Option<[Expr; 10]>,
}

impl SymmetricCurve {
    /// Builds a curve from `((i, j), text)` entries; unlisted entries are zero.
    /// Supplying both `(i, j)` and `(j, i)` is allowed only if they parse to
    /// the same expression.
    pub fn from_entries<'s>(entries: impl IntoIterator<Item = ((usize, usize), &'s str)>) -> Result<Self, ExprError> {
        let mut slots: BTreeMap<usize, (usize, usize, String, Expr)> = BTreeMap::new();
        for ((i, j), text) in entries {
            if i > 3 || j > 3 {
                return Err(ExprError::BadIndex { i, j });
            }
            let expr = parse(text).map_err(|e| ExprError::Entry {
                i,
                j,
                source: Box::new(e),
            })?;
            let k = packed(i, j);
            if let Some((pi, pj, prev_text, prev)) = slots.get(&k) {
                if *prev != expr {
                    let (upper, lower) = if pi <= pj {
                        (prev_text.clone(), text.to_string())
                    } else {
                        (text.to_string(), prev_text.clone())
                    };
                    return Err(ExprError::SymmetryConflict {
                        i: i.min(j),
                        j: i.max(j),
                        upper,
                        lower,
                    });
                }
                continue;
            }
            slots.insert(k, (i, j, text.to_string(), expr));
        }
        let entries: [Expr; 10] =
            std::array::from_fn(|k| slots.get(&k).map(|s| s.3.clone()).unwrap_or_else(|| Expr::num(0.0)));
        let sources: [String; 10] =
            std::array::from_fn(|k| slots.get(&k).map(|s| s.2.clone()).unwrap_or_else(|| "0".to_string()));
        let has_eps = entries.iter().any(Expr::mentions_eps);
        let eps_slope = if has_eps {
            let parts: Option<Vec<Expr>> = entries.iter().map(|e| e.linear_in_eps().map(|(_, s)| s)).collect();
            parts.map(|v| v.try_into().expect("ten entries"))
        } else {
            None
        };
        Ok(Self {
            entries,
            sources,
            has_eps,
            eps_slope,
        })
    }

    /// Curve with every upper-triangle entry given as text, row by row.
    pub fn constant(m: &RealMat4) -> Self {
        let texts: Vec<((usize, usize), String)> = (0..4)
            .flat_map(|i| (i..4).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), format!("{:e}", m.0[i][j])))
            .collect();
        Self::from_entries(texts.iter().map(|(k, s)| (*k, s.as_str()))).expect("formatted floats parse")
    }

    pub fn has_eps(&self) -> bool {
        self.has_eps
    }

    pub fn is_linear_in_eps(&self) -> bool {
        self.eps_slope.is_some()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[packed(i, j)]
    }

    pub fn source(&self, i: usize, j: usize) -> &str {
        &self.sources[packed(i, j)]
    }

    fn fill(exprs: &[Expr; 10], t: f64, eps: f64) -> Result<RealMat4, ExprError> {
        let mut m = RealMat4::zero();
        for i in 0..4 {
            for j in i..4 {
                let v = exprs[packed(i, j)].eval(t, eps).map_err(|e| ExprError::Entry {
                    i,
                    j,
                    source: Box::new(e),
                })?;
                m.0[i][j] = v;
                m.0[j][i] = v;
            }
        }
        Ok(m)
    }

    /// `A(t, eps)`; symmetric bit for bit.
    pub fn eval_matrix(&self, t: f64, eps: f64) -> Result<RealMat4, ExprError> {
        Self::fill(&self.entries, t, eps)
    }

    /// `∂A/∂eps (t, eps)`: exact when the curve is linear in `eps`, otherwise
    /// a central difference with step `h`.
    pub fn d_eps_matrix(&self, t: f64, eps: f64, h: f64) -> Result<RealMat4, ExprError> {
        if !(h > 0.0) {
            return Err(ExprError::BadStep(h));
        }
        if !self.has_eps {
            return Ok(RealMat4::zero());
        }
        if let Some(slope) = &self.eps_slope {
            return Self::fill(slope, t, eps);
        }
        let plus = self.eval_matrix(t, eps + h)?;
        let minus = self.eval_matrix(t, eps - h)?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    }

    /// `d_eps_matrix` with the default step `1e-6·(1 + |eps|)`.
    pub fn d_eps_matrix_default(&self, t: f64, eps: f64) -> Result<RealMat4, ExprError> {
        self.d_eps_matrix(t, eps, 1e-6 * (1.0 + eps.abs()))
    }

    /// `A(t, eps) − A(t, 0)`, exact up to one rounding per entry when the
    /// curve is linear in `eps`.
    pub fn eps_increment(&self, t: f64, eps: f64) -> Result<RealMat4, ExprError> {
        if !self.has_eps {
            return Ok(RealMat4::zero());
        }
        if let Some(slope) = &self.eps_slope {
            return Ok(Self::fill(slope, t, eps)?.scale(eps));
        }
        Ok(self.eval_matrix(t, eps)?.sub(&self.eval_matrix(t, 0.0)?))
    }

    /// Central-difference `∂A/∂eps` regardless of linearity.
    pub fn d_eps_matrix_fd(&self, t: f64, eps: f64, h: f64) -> Result<RealMat4, ExprError> {
        let plus = self.eval_matrix(t, eps + h)?;
        let minus = self.eval_matrix(t, eps - h)?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    }
}
