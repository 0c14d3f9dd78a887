//! Plain-text metric definitions.
//!
//! ```text
//! # round 2-sphere
//! dimension = 2
//! signature = "++"
//! coords = theta phi
//! g[1][1] = "1"
//! g[2][2] = "sin(theta)^2"
//! ```
//!
//! Component indices are 1-based in the file and 0-based everywhere else.
//! Absent components are zero; `g[i][j]` and `g[j][i]` name the same entry.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jet::{ElemFn, Jet, JetSpace};

/// Syntax or validation error with a 1-based source location.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Expression tree over chart coordinates. Coordinates are stored by index
/// into the owning metric's coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    /// Unary function; negation is `Func(ElemFn::Neg, _)`.
    Func(ElemFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a literal exponent.
    Pow(Box<Expr>, f64),
}

impl Expr {
    /// Negation; folds numeric constants so that `-2` is a single literal.
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::Func(ElemFn::Neg, Box::new(other)),
        }
    }

    pub fn func(f: ElemFn, e: Expr) -> Expr {
        if f == ElemFn::Neg {
            Expr::neg(e)
        } else {
            Expr::Func(f, Box::new(e))
        }
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn pow(base: Expr, exponent: f64) -> Expr {
        Expr::Pow(Box::new(base), exponent)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Func(_, e) | Expr::Pow(e, _) => e.max_coord(),
            Expr::Binary(_, l, r) => match (l.max_coord(), r.max_coord()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Floating point evaluation at coordinates `x`.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => x[*i],
            Expr::Func(f, e) => f.eval(e.eval_f64(x)),
            Expr::Pow(b, c) => ElemFn::Pow(*c).eval(b.eval_f64(x)),
            Expr::Binary(op, l, r) => {
                let (a, b) = (l.eval_f64(x), r.eval_f64(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        }
    }

    /// Jet evaluation given the coordinate jets.
    pub fn eval_jet(&self, coords: &[Jet]) -> Result<Jet> {
        let space = coords
            .first()
            .map(|j| j.space().clone())
            .ok_or_else(|| crate::error::usage("expression evaluation needs coordinate jets"))?;
        self.eval_in(&space, coords)
    }

    fn eval_in(&self, space: &Arc<JetSpace>, coords: &[Jet]) -> Result<Jet> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(space, *c),
            Expr::Coord(i) => coords
                .get(*i)
                .cloned()
                .ok_or_else(|| crate::error::usage(format!("coordinate {i} not seeded")))?,
            Expr::Func(f, e) => e.eval_in(space, coords)?.apply(*f)?,
            Expr::Pow(b, c) => b.eval_in(space, coords)?.powf(*c)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval_in(space, coords)?;
                let b = r.eval_in(space, coords)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.try_div(&b)?,
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Func(ElemFn::Neg, _) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Pretty-printer that re-parses to an identical tree.
    pub fn display<'a>(&'a self, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.coords, f)
    }
}

fn write_child(e: &Expr, coords: &[String], parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_expr(e, coords, f)?;
        f.write_str(")")
    } else {
        write_expr(e, coords, f)
    }
}

fn write_expr(e: &Expr, coords: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if c.is_sign_negative() {
                write!(f, "(-{})", -c)
            } else {
                write!(f, "{c}")
            }
        }
        Expr::Coord(i) => match coords.get(*i) {
            Some(name) => f.write_str(name),
            None => write!(f, "x{}", i + 1),
        },
        Expr::Func(ElemFn::Neg, inner) => {
            f.write_str("-")?;
            write_child(inner, coords, inner.precedence() < 3, f)
        }
        Expr::Func(func, inner) => {
            write!(f, "{}(", func.name())?;
            write_expr(inner, coords, f)?;
            f.write_str(")")
        }
        Expr::Pow(base, c) => {
            write_child(base, coords, base.precedence() < 5, f)?;
            write!(f, "^{c}")
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            write_child(l, coords, l.precedence() < p, f)?;
            write!(f, " {} ", op.symbol())?;
            write_child(r, coords, r.precedence() <= p, f)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize, col0: usize) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, line, col0, _src: src }
    }

    fn err(&self, at: usize, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col0 + at, msg)
    }

    fn tokens(mut self) -> core::result::Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let Some(&c) = self.chars.get(self.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            if c.is_ascii_digit() || c == '.' {
                out.push((self.number()?, start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(&c) = self.chars.get(self.pos) {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), start));
            } else if "+-*/^()".contains(c) {
                self.pos += 1;
                out.push((Tok::Op(c), start));
            } else {
                return Err(self.err(start, format!("unexpected character `{c}`")));
            }
        }
    }

    fn number(&mut self) -> core::result::Result<Tok, ParseError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.chars.get(lx.pos).is_some_and(|c| c.is_ascii_digit()) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(self.err(start, "malformed number"));
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| self.err(start, format!("malformed number `{text}`")))
    }
}

struct Parser<'c> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'c [String],
    line: usize,
    col0: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col0 + self.toks[self.pos].1, msg)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> core::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> core::result::Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> core::result::Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Expr::pow(base, self.exponent()?))
        } else {
            Ok(base)
        }
    }

    /// Signed literal exponent; chains fold right to left (`2^3^2 = 2^9`).
    fn exponent(&mut self) -> core::result::Result<f64, ParseError> {
        let negative = self.eat('-');
        let v = match self.bump() {
            Tok::Num(v) => if negative { -v } else { v },
            _ => {
                self.pos -= 1;
                return Err(self.err_here("exponent must be a numeric literal"));
            }
        };
        if self.eat('^') {
            Ok(libm::pow(v, self.exponent()?))
        } else {
            Ok(v)
        }
    }

    fn atom(&mut self) -> core::result::Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err_here("expected `)`"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    self.bump();
                    return Ok(Expr::Const(core::f64::consts::PI));
                }
                if let Some(f) = ElemFn::from_name(&name) {
                    self.bump();
                    if !self.eat('(') {
                        return Err(self.err_here(format!("expected `(` after `{name}`")));
                    }
                    let e = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.err_here("expected `)`"));
                    }
                    return Ok(Expr::func(f, e));
                }
                match self.coords.iter().position(|c| *c == name) {
                    Some(i) => {
                        self.bump();
                        Ok(Expr::Coord(i))
                    }
                    None => Err(self.err_here(format!("undeclared coordinate `{name}`"))),
                }
            }
            Tok::End => Err(self.err_here("unexpected end of expression")),
            Tok::Op(c) => Err(self.err_here(format!("unexpected `{c}`"))),
        }
    }
}

fn parse_expr_at(src: &str, coords: &[String], line: usize, col0: usize) -> core::result::Result<Expr, ParseError> {
    let toks = Lexer::new(src, line, col0).tokens()?;
    let mut p = Parser { toks, pos: 0, coords, line, col0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses an expression over the named coordinates.
pub fn parse_expr(src: &str, coords: &[String]) -> Result<Expr> {
    Ok(parse_expr_at(src, coords, 1, 1)?)
}

/// A metric on a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub dim: usize,
    pub signature: Vec<i8>,
    pub coords: Vec<String>,
    /// Upper-triangular storage, row-major over `i ≤ j`.
    components: Vec<Option<Expr>>,
    pub label: String,
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricSpec {
    /// An all-zero metric skeleton.
    pub fn new(label: impl Into<String>, signature: Vec<i8>, coords: Vec<String>) -> Self {
        let dim = coords.len();
        MetricSpec {
            dim,
            signature,
            coords,
            components: vec![None; dim * (dim + 1) / 2],
            label: label.into(),
        }
    }

    /// Helper for building specs in code from expression strings.
    pub fn from_strs(
        label: &str,
        signature: &str,
        coords: &[&str],
        entries: &[(usize, usize, &str)],
    ) -> Result<Self> {
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let sig = parse_signature(signature, 1, 1)?;
        let mut spec = MetricSpec::new(label, sig, coords);
        for &(i, j, text) in entries {
            let e = parse_expr(text, &spec.coords)?;
            spec.set(i, j, e);
        }
        Ok(spec)
    }

    pub fn component(&self, i: usize, j: usize) -> Option<&Expr> {
        self.components[tri_index(self.dim, i, j)].as_ref()
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        let k = tri_index(self.dim, i, j);
        self.components[k] = Some(e);
    }

    /// Coordinate jets seeded at `point` (value `p_k`, unit slope in slot `k`).
    pub fn coordinate_jets(&self, point: &[f64], space: &Arc<JetSpace>) -> Result<Vec<Jet>> {
        if point.len() != self.dim {
            return Err(crate::error::usage(format!(
                "point has {} coordinates, metric has {}",
                point.len(),
                self.dim
            )));
        }
        if space.vars() < self.dim {
            return Err(Error::DimensionMismatch(space.vars(), self.dim));
        }
        Ok((0..self.dim).map(|k| Jet::variable(space, k, point[k])).collect())
    }

    /// Jet of `g_ij` about `point`.
    pub fn eval_component(&self, i: usize, j: usize, point: &[f64], space: &Arc<JetSpace>) -> Result<Jet> {
        let coords = self.coordinate_jets(point, space)?;
        self.eval_component_with(i, j, &coords)
    }

    pub(crate) fn eval_component_with(&self, i: usize, j: usize, coords: &[Jet]) -> Result<Jet> {
        match self.component(i, j) {
            Some(e) => e.eval_jet(coords),
            None => Ok(Jet::zero(coords[0].space())),
        }
    }

    pub fn signature_string(&self) -> String {
        self.signature.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    /// Serializes into the metric file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            out.push_str(&format!("label = \"{}\"\n", self.label));
        }
        out.push_str(&format!("dimension = {}\n", self.dim));
        out.push_str(&format!("signature = \"{}\"\n", self.signature_string()));
        out.push_str(&format!("coords = {}\n", self.coords.join(" ")));
        for i in 0..self.dim {
            for j in i..self.dim {
                if let Some(e) = self.component(i, j) {
                    out.push_str(&format!("g[{}][{}] = \"{}\"\n", i + 1, j + 1, e.display(&self.coords)));
                }
            }
        }
        out
    }
}

fn parse_signature(s: &str, line: usize, col: usize) -> core::result::Result<Vec<i8>, ParseError> {
    s.chars()
        .enumerate()
        .map(|(k, c)| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            _ => Err(ParseError::new(line, col + k, format!("signature character `{c}` is not + or -"))),
        })
        .collect()
}

fn unquote(value: &str, line: usize, col: usize) -> core::result::Result<(String, usize), ParseError> {
    let v = value.trim();
    let lead = value.len() - value.trim_start().len();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        Ok((v[1..v.len() - 1].to_string(), col + lead + 1))
    } else {
        Err(ParseError::new(line, col + lead, "expected a double-quoted string"))
    }
}

fn parse_index(text: &str, line: usize, col: usize) -> core::result::Result<(usize, usize, usize), ParseError> {
    // text like "g[1][2]"; returns (i, j, consumed)
    let bad = || ParseError::new(line, col, "malformed component key, expected g[i][j]");
    let rest = text.strip_prefix("g[").ok_or_else(bad)?;
    let close = rest.find(']').ok_or_else(bad)?;
    let i: usize = rest[..close].trim().parse().map_err(|_| bad())?;
    let rest2 = rest[close + 1..].strip_prefix('[').ok_or_else(bad)?;
    let close2 = rest2.find(']').ok_or_else(bad)?;
    let j: usize = rest2[..close2].trim().parse().map_err(|_| bad())?;
    if !rest2[close2 + 1..].trim().is_empty() {
        return Err(bad());
    }
    Ok((i, j, 0))
}

const RESERVED: [&str; 9] = ["pi", "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh"];

/// Parses the metric file format.
pub fn parse_metric(text: &str) -> Result<MetricSpec> {
    struct Line<'a> {
        no: usize,
        key: &'a str,
        key_col: usize,
        value: &'a str,
        value_col: usize,
    }
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let content = strip_comment(raw);
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(ParseError::new(no, col, "expected `key = value`").into());
        };
        let key_raw = &content[..eq];
        let key_col = key_raw.len() - key_raw.trim_start().len() + 1;
        lines.push(Line { no, key: key_raw.trim(), key_col, value: &content[eq + 1..], value_col: eq + 2 });
    }

    let mut dim: Option<(usize, usize)> = None;
    let mut signature: Option<(Vec<i8>, usize)> = None;
    let mut coords: Option<(Vec<String>, usize)> = None;
    let mut label = String::new();
    for l in &lines {
        match l.key {
            "dimension" => {
                let v = l.value.trim();
                let n: usize = v
                    .parse()
                    .map_err(|_| ParseError::new(l.no, l.value_col, format!("invalid dimension `{v}`")))?;
                if n == 0 {
                    return Err(ParseError::new(l.no, l.value_col, "dimension must be positive").into());
                }
                dim = Some((n, l.no));
            }
            "signature" => {
                let (s, col) = unquote(l.value, l.no, l.value_col)?;
                signature = Some((parse_signature(&s, l.no, col)?, l.no));
            }
            "coords" => {
                let names: Vec<String> = l.value.split_whitespace().map(|s| s.to_string()).collect();
                for (k, name) in names.iter().enumerate() {
                    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if !ok || RESERVED.contains(&name.as_str()) {
                        return Err(ParseError::new(l.no, l.value_col, format!("invalid coordinate name `{name}`")).into());
                    }
                    if names[..k].contains(name) {
                        return Err(ParseError::new(l.no, l.value_col, format!("duplicate coordinate `{name}`")).into());
                    }
                }
                coords = Some((names, l.no));
            }
            "label" => {
                label = unquote(l.value, l.no, l.value_col)?.0;
            }
            k if k.starts_with("g[") => {}
            other => {
                return Err(ParseError::new(l.no, l.key_col, format!("unknown key `{other}`")).into());
            }
        }
    }
    let (n, _) = dim.ok_or_else(|| ParseError::new(1, 1, "missing `dimension`"))?;
    let (sig, sig_line) = signature.ok_or_else(|| ParseError::new(1, 1, "missing `signature`"))?;
    let (names, coord_line) = coords.ok_or_else(|| ParseError::new(1, 1, "missing `coords`"))?;
    if sig.len() != n {
        return Err(ParseError::new(sig_line, 1, format!("signature has length {}, dimension is {n}", sig.len())).into());
    }
    if names.len() != n {
        return Err(ParseError::new(coord_line, 1, format!("{} coordinates declared, dimension is {n}", names.len())).into());
    }

    let mut spec = MetricSpec::new(label, sig, names);
    let mut seen: Vec<Option<usize>> = vec![None; n * (n + 1) / 2];
    for l in lines.iter().filter(|l| l.key.starts_with("g[")) {
        let (i, j, _) = parse_index(l.key, l.no, l.key_col)?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(ParseError::new(l.no, l.key_col, format!("component index out of range 1..={n}")).into());
        }
        let slot = tri_index(n, i - 1, j - 1);
        if let Some(prev) = seen[slot] {
            return Err(ParseError::new(
                l.no,
                l.key_col,
                format!("duplicate assignment of g[{i}][{j}] (first set on line {prev})"),
            )
            .into());
        }
        seen[slot] = Some(l.no);
        let (src, col) = unquote(l.value, l.no, l.value_col)?;
        let e = parse_expr_at(&src, &spec.coords, l.no, col)?;
        spec.set(i - 1, j - 1, e);
    }
    Ok(spec)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    const SPHERE2: &str = "# round sphere\ndimension = 2\nsignature = \"++\"\ncoords = theta phi\ng[1][1] = \"1\"\ng[2][2] = \"sin(theta)^2\"\n";

    #[test]
    fn parses_round_two_sphere() {
        let spec = parse_metric(SPHERE2).unwrap();
        assert_eq!(spec.dim, 2);
        assert_eq!(spec.coords, names(&["theta", "phi"]));
        assert_eq!(spec.component(0, 0), Some(&Expr::Const(1.0)));
        assert_eq!(spec.component(1, 1), Some(&Expr::pow(Expr::func(ElemFn::Sin, Expr::Coord(0)), 2.0)));
        assert_eq!(spec.component(0, 1), None);
    }

    #[test]
    fn dangling_operator_is_a_syntax_error() {
        let text = "dimension = 3\nsignature = \"+++\"\ncoords = x1 x2 x3\ng[1][2] = \"x3 + \"\n";
        match parse_metric(text) {
            Err(Error::Parse(e)) => {
                assert_eq!(e.line, 4);
                assert!(e.message.contains("end of expression"), "{e}");
                // column of the end of the quoted expression
                assert_eq!(e.column, 17);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn two_pi_constant() {
        let e = parse_expr("2*pi", &[]).unwrap();
        assert!((e.eval_f64(&[]) - 6.283185307179586).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        let c = names(&["x", "y"]);
        let e = parse_expr("-x^2", &c).unwrap();
        assert_eq!(e, Expr::neg(Expr::pow(Expr::Coord(0), 2.0)));
        let e = parse_expr("x - y - 1", &c).unwrap();
        assert_eq!(e.eval_f64(&[5.0, 2.0]), 2.0);
        let e = parse_expr("x / y * 2", &c).unwrap();
        assert_eq!(e.eval_f64(&[6.0, 3.0]), 4.0);
        let e = parse_expr("1 + 2 * x^2", &c).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 0.0]), 19.0);
        let e = parse_expr("x^-2", &c).unwrap();
        assert_eq!(e.eval_f64(&[2.0, 0.0]), 0.25);
        assert!(parse_expr("x^y", &c).is_err());
    }

    #[test]
    fn validation_errors() {
        let undeclared = "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[1][1] = \"z\"\n";
        assert!(matches!(parse_metric(undeclared), Err(Error::Parse(e)) if e.message.contains("undeclared")));
        let mismatch = "dimension = 3\nsignature = \"++\"\ncoords = x y z\n";
        assert!(matches!(parse_metric(mismatch), Err(Error::Parse(e)) if e.message.contains("signature")));
        let dup = "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[1][2] = \"1\"\ng[2][1] = \"2\"\n";
        assert!(matches!(parse_metric(dup), Err(Error::Parse(e)) if e.line == 5 && e.message.contains("duplicate")));
        let range = "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[3][1] = \"1\"\n";
        assert!(parse_metric(range).is_err());
        let coords = "dimension = 2\nsignature = \"++\"\ncoords = x\n";
        assert!(parse_metric(coords).is_err());
    }

    #[test]
    fn component_jets() {
        let spec = parse_metric(SPHERE2).unwrap();
        let sp = JetSpace::new(2, 3);
        let p = [core::f64::consts::FRAC_PI_2, 0.3];
        let g22 = spec.eval_component(1, 1, &p, &sp).unwrap();
        assert!((g22.value() - 1.0).abs() < 1e-15);
        assert!(g22.derivative(&[1, 0]).unwrap().abs() < 1e-15);
        let g11 = spec.eval_component(0, 0, &p, &sp).unwrap();
        assert_eq!(g11, Jet::constant(&sp, 1.0));
        let g12 = spec.eval_component(0, 1, &p, &sp).unwrap();
        assert_eq!(g12, Jet::zero(&sp));
    }

    #[test]
    fn file_round_trip() {
        let spec = parse_metric(SPHERE2).unwrap();
        let again = parse_metric(&spec.to_file_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn printer_handles_negative_literals() {
        let c = names(&["x"]);
        for src in ["x * -2", "(-2)^2", "-2^2", "--x", "x - (1 - x)", "(x^2)^3", "exp(-x) / (1 + x)"] {
            let e = parse_expr(src, &c).unwrap();
            let printed = e.display(&c).to_string();
            assert_eq!(parse_expr(&printed, &c).unwrap(), e, "{src} -> {printed}");
        }
    }
}
