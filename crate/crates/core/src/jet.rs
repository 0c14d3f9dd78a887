//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f / α!` of a scalar function
//! about a base point, for every multi-index `α` with `|α| ≤ K` over the chart
//! variables. A [`JetSpace`] may additionally carry auxiliary variables that are
//! truncated at degree one each; they are used to differentiate along a
//! deformation parameter without paying for a full extra chart dimension.
//!
//! Coefficients are stored densely in graded order (chart degree first, then
//! the number of auxiliary variables, then lexicographically), so a jet of
//! order `k` is exactly a prefix of a jet of order `K ≥ k`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{exhausted, usage, Error, Result};

const NONE: u32 = u32::MAX;

/// Multi-index bookkeeping and multiplication tables shared by all jets of one
/// shape.
pub struct JetSpace {
    vars: usize,
    aux: usize,
    order: usize,
    width: usize,
    exps: Vec<u8>,
    x_degree: Vec<u8>,
    prefix: Vec<usize>,
    lookup: Vec<u32>,
    mul_pairs: Vec<(u32, u32)>,
    mul_offsets: Vec<u32>,
    shift: Vec<u32>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("vars", &self.vars)
            .field("aux", &self.aux)
            .field("order", &self.order)
            .field("len", &self.len())
            .finish()
    }
}

impl JetSpace {
    /// Jets in `vars` chart variables truncated at total order `order`.
    pub fn new(vars: usize, order: usize) -> Arc<Self> {
        Self::with_aux(vars, 0, order)
    }

    /// Jets with `aux` extra variables, each truncated at degree one.
    pub fn with_aux(vars: usize, aux: usize, order: usize) -> Arc<Self> {
        assert!(vars + aux > 0, "jet space needs at least one variable");
        assert!(order < 255, "jet order too large");
        assert!(aux <= 4, "at most four auxiliary variables are supported");
        let width = vars + aux;

        let mut x_parts: Vec<Vec<u8>> = Vec::new();
        let mut cur = vec![0u8; vars];
        enumerate_exponents(&mut cur, 0, order, &mut x_parts);

        let mut entries: Vec<Vec<u8>> = Vec::new();
        for x in &x_parts {
            for mask in 0..(1usize << aux) {
                let mut e = x.clone();
                for j in 0..aux {
                    e.push(((mask >> j) & 1) as u8);
                }
                entries.push(e);
            }
        }
        entries.sort_by(|a, b| {
            let key = |e: &Vec<u8>| {
                let xd: u32 = e[..vars].iter().map(|&v| v as u32).sum();
                let ad: u32 = e[vars..].iter().map(|&v| v as u32).sum();
                (xd, ad)
            };
            key(a).cmp(&key(b)).then_with(|| b.cmp(a))
        });

        let len = entries.len();
        let radix = order + 1;
        let lookup_len = radix.pow(vars as u32) << aux;
        let mut lookup = vec![NONE; lookup_len];
        let mut exps = Vec::with_capacity(len * width);
        let mut x_degree = Vec::with_capacity(len);
        for (idx, e) in entries.iter().enumerate() {
            lookup[encode(e, vars, radix)] = idx as u32;
            exps.extend_from_slice(e);
            x_degree.push(e[..vars].iter().sum());
        }
        let mut prefix = vec![0usize; order + 1];
        for k in 0..=order {
            prefix[k] = x_degree.iter().filter(|&&d| d as usize <= k).count();
        }

        let mut mul_pairs = Vec::new();
        let mut mul_offsets = Vec::with_capacity(len + 1);
        mul_offsets.push(0u32);
        let mut diff = vec![0u8; width];
        for k in 0..len {
            let ek = &entries[k];
            for (i, ei) in entries.iter().enumerate().take(k + 1) {
                if ei.iter().zip(ek).all(|(a, b)| a <= b) {
                    for t in 0..width {
                        diff[t] = ek[t] - ei[t];
                    }
                    let j = lookup[encode(&diff, vars, radix)];
                    debug_assert!(j != NONE);
                    mul_pairs.push((i as u32, j));
                }
            }
            mul_offsets.push(mul_pairs.len() as u32);
        }

        let mut shift = vec![NONE; vars * len];
        for v in 0..vars {
            for (idx, e) in entries.iter().enumerate() {
                if (x_degree[idx] as usize) < order {
                    let mut up = e.clone();
                    up[v] += 1;
                    shift[v * len + idx] = lookup[encode(&up, vars, radix)];
                }
            }
        }

        Arc::new(JetSpace {
            vars,
            aux,
            order,
            width,
            exps,
            x_degree,
            prefix,
            lookup,
            mul_pairs,
            mul_offsets,
            shift,
        })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn aux(&self) -> usize {
        self.aux
    }

    /// Maximal truncation order of jets in this space.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients at full order.
    pub fn len(&self) -> usize {
        self.x_degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of coefficients of a jet truncated at `order`.
    pub fn len_at(&self, order: usize) -> usize {
        self.prefix[order.min(self.order)]
    }

    /// Exponents of the multi-index stored at `rank`.
    pub fn exponents(&self, rank: usize) -> &[u8] {
        &self.exps[rank * self.width..(rank + 1) * self.width]
    }

    /// Rank of a multi-index given over all variables (chart then auxiliary).
    pub fn rank_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.width {
            return None;
        }
        let xd: usize = alpha[..self.vars].iter().sum();
        if xd > self.order || alpha[self.vars..].iter().any(|&a| a > 1) {
            return None;
        }
        let e: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        let r = self.lookup[encode(&e, self.vars, self.order + 1)];
        (r != NONE).then_some(r as usize)
    }

    fn same_shape(&self, other: &JetSpace) -> bool {
        self.vars == other.vars && self.aux == other.aux && self.order == other.order
    }
}

fn enumerate_exponents(cur: &mut Vec<u8>, pos: usize, budget: usize, out: &mut Vec<Vec<u8>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for e in 0..=budget {
        cur[pos] = e as u8;
        enumerate_exponents(cur, pos + 1, budget - e, out);
    }
    cur[pos] = 0;
}

fn encode(e: &[u8], vars: usize, radix: usize) -> usize {
    let mut key = 0usize;
    for &v in e[..vars].iter().rev() {
        key = key * radix + v as usize;
    }
    let mut mask = 0usize;
    for (j, &v) in e[vars..].iter().enumerate() {
        mask |= (v as usize) << j;
    }
    (key << (e.len() - vars)) | mask
}

/// Elementary functions that can be applied to a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElemFn {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    /// Constant real power.
    Pow(f64),
    Neg,
}

impl ElemFn {
    pub fn name(&self) -> &'static str {
        match self {
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
            ElemFn::Tan => "tan",
            ElemFn::Exp => "exp",
            ElemFn::Log => "log",
            ElemFn::Sqrt => "sqrt",
            ElemFn::Sinh => "sinh",
            ElemFn::Cosh => "cosh",
            ElemFn::Pow(_) => "pow",
            ElemFn::Neg => "neg",
        }
    }

    /// Named function of the metric grammar.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => ElemFn::Sin,
            "cos" => ElemFn::Cos,
            "tan" => ElemFn::Tan,
            "exp" => ElemFn::Exp,
            "log" => ElemFn::Log,
            "sqrt" => ElemFn::Sqrt,
            "sinh" => ElemFn::Sinh,
            "cosh" => ElemFn::Cosh,
            _ => return None,
        })
    }

    /// Plain floating point evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ElemFn::Sin => libm::sin(x),
            ElemFn::Cos => libm::cos(x),
            ElemFn::Tan => libm::tan(x),
            ElemFn::Exp => libm::exp(x),
            ElemFn::Log => libm::log(x),
            ElemFn::Sqrt => libm::sqrt(x),
            ElemFn::Sinh => libm::sinh(x),
            ElemFn::Cosh => libm::cosh(x),
            ElemFn::Pow(c) => powf(x, c),
            ElemFn::Neg => -x,
        }
    }
}

fn powf(x: f64, c: f64) -> f64 {
    if let Some(k) = small_integer(c) {
        powi(x, k)
    } else {
        libm::pow(x, c)
    }
}

fn powi(x: f64, k: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if k < 0 {
        1.0 / acc
    } else {
        acc
    }
}

fn small_integer(c: f64) -> Option<i32> {
    (c == libm::round(c) && libm::fabs(c) <= 64.0).then_some(c as i32)
}

/// Binary jet operations for the checked arithmetic entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A truncated Taylor expansion about a fixed base point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("vars", &self.space.vars)
            .field("aux", &self.space.aux)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_shape(&other.space) && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn constant(space: &Arc<JetSpace>, c: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = c;
        Jet { space: space.clone(), order: space.order, coeffs }
    }

    /// The chart coordinate `x_k` expanded about `value`.
    pub fn variable(space: &Arc<JetSpace>, k: usize, value: f64) -> Self {
        assert!(k < space.vars, "variable index out of range");
        let mut j = Self::constant(space, value);
        if space.order > 0 {
            let mut alpha = vec![0usize; space.width];
            alpha[k] = 1;
            j.coeffs[space.rank_of(&alpha).unwrap()] = 1.0;
        }
        j
    }

    /// The auxiliary variable `ε_j` (value zero, unit slope).
    pub fn aux_variable(space: &Arc<JetSpace>, j: usize) -> Self {
        assert!(j < space.aux, "auxiliary index out of range");
        let mut out = Self::zero(space);
        let mut alpha = vec![0usize; space.width];
        alpha[space.vars + j] = 1;
        out.coeffs[space.rank_of(&alpha).unwrap()] = 1.0;
        out
    }

    /// Builds a jet from Taylor coefficients in storage order.
    pub fn from_coeffs(space: &Arc<JetSpace>, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if order > space.order {
            return Err(usage(format!("order {order} exceeds space order {}", space.order)));
        }
        if coeffs.len() != space.len_at(order) {
            return Err(usage(format!(
                "expected {} coefficients, got {}",
                space.len_at(order),
                coeffs.len()
            )));
        }
        Ok(Jet { space: space.clone(), order, coeffs })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Number of chart variables.
    pub fn dim(&self) -> usize {
        self.space.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient at the multi-index `alpha` (chart variables, then
    /// auxiliary ones; missing trailing auxiliary entries count as zero).
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        let mut full = vec![0usize; self.space.width];
        full[..alpha.len().min(self.space.width)].copy_from_slice(&alpha[..alpha.len().min(self.space.width)]);
        match self.space.rank_of(&full) {
            Some(r) if r < self.coeffs.len() => self.coeffs[r],
            _ => 0.0,
        }
    }

    /// The exact partial derivative `∂^α f` at the base point.
    pub fn derivative(&self, alpha: &[usize]) -> Result<f64> {
        if alpha.len() != self.space.vars {
            return Err(Error::DimensionMismatch(alpha.len(), self.space.vars));
        }
        let total: usize = alpha.iter().sum();
        if total > self.order {
            return Err(exhausted(total, self.order));
        }
        let factorial: f64 = alpha.iter().map(|&a| (1..=a).map(|i| i as f64).product::<f64>()).product();
        Ok(factorial * self.coeff(alpha))
    }

    /// Jet of `∂f/∂x_v`, one order lower.
    pub fn partial(&self, v: usize) -> Result<Jet> {
        if v >= self.space.vars {
            return Err(usage(format!("no chart variable {v}")));
        }
        if self.order == 0 {
            return Err(exhausted(1, 0));
        }
        let order = self.order - 1;
        let n = self.space.len_at(order);
        let len = self.space.len();
        let coeffs = (0..n)
            .map(|i| {
                let up = self.space.shift[v * len + i] as usize;
                let e = self.space.exps[i * self.space.width + v] as f64 + 1.0;
                e * self.coeffs[up]
            })
            .collect();
        Ok(Jet { space: self.space.clone(), order, coeffs })
    }

    /// Coefficient of the auxiliary variable `ε_j`, as a jet over the chart
    /// variables (its own auxiliary part set to zero).
    pub fn aux_coefficient(&self, j: usize) -> Jet {
        assert!(j < self.space.aux, "auxiliary index out of range");
        let sp = &self.space;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let mut alpha = vec![0usize; sp.width];
        for (r, c) in coeffs.iter_mut().enumerate() {
            let e = sp.exponents(r);
            if e[sp.vars..].iter().any(|&a| a != 0) {
                continue;
            }
            for t in 0..sp.width {
                alpha[t] = e[t] as usize;
            }
            alpha[sp.vars + j] = 1;
            if let Some(src) = sp.rank_of(&alpha) {
                if src < self.coeffs.len() {
                    *c = self.coeffs[src];
                }
            }
        }
        Jet { space: sp.clone(), order: self.order, coeffs }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..self.space.len_at(order)].to_vec(),
        }
    }

    /// Largest absolute Taylor coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, &c| m.max(libm::fabs(c)))
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Checked arithmetic: operands must share dimension and order exactly.
    pub fn arith(a: &Jet, b: &Jet, op: JetOp) -> Result<Jet> {
        if !a.space.same_shape(&b.space) {
            return Err(Error::DimensionMismatch(a.space.vars, b.space.vars));
        }
        if a.order != b.order {
            return Err(Error::OrderMismatch(a.order, b.order));
        }
        Ok(match op {
            JetOp::Add => a + b,
            JetOp::Sub => a - b,
            JetOp::Mul => a * b,
            JetOp::Div => a.try_div(b)?,
        })
    }

    fn check_space(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space) || self.space.same_shape(&other.space),
            "jets from incompatible spaces: {:?} vs {:?}",
            self.space,
            other.space
        );
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let n = self.space.len_at(order);
        let coeffs = (0..n).map(|i| f(self.coeffs[i], other.coeffs[i])).collect();
        Jet { space: self.space.clone(), order, coeffs }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let sp = &self.space;
        let n = sp.len_at(order);
        let mut coeffs = vec![0.0; n];
        for (k, out) in coeffs.iter_mut().enumerate() {
            let lo = sp.mul_offsets[k] as usize;
            let hi = sp.mul_offsets[k + 1] as usize;
            let mut s = 0.0;
            for &(i, j) in &sp.mul_pairs[lo..hi] {
                s += self.coeffs[i as usize] * other.coeffs[j as usize];
            }
            *out = s;
        }
        Jet { space: sp.clone(), order, coeffs }
    }

    /// Division; fails when the divisor has a vanishing constant term.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check_space(other);
        let b0 = other.coeffs[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::Singular(format!("division by a jet with constant term {b0}")));
        }
        let order = self.order.min(other.order);
        let sp = &self.space;
        let n = sp.len_at(order);
        let mut c = vec![0.0; n];
        for k in 0..n {
            let lo = sp.mul_offsets[k] as usize;
            let hi = sp.mul_offsets[k + 1] as usize;
            let mut s = self.coeffs[k];
            for &(i, j) in &sp.mul_pairs[lo..hi] {
                if j != 0 {
                    s -= c[i as usize] * other.coeffs[j as usize];
                }
            }
            c[k] = s / b0;
        }
        Ok(Jet { space: sp.clone(), order, coeffs: c })
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(&self.space, 1.0).truncate(self.order).try_div(self)
    }

    /// Evaluates `Σ_m d_m (f - f(0))^m`, i.e. composes a univariate Taylor
    /// expansion (coefficients `d_m`) about the constant term.
    fn compose_series(&self, d: &[f64]) -> Jet {
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let m = d.len() - 1;
        let mut acc = Jet::constant(&self.space, d[m]).truncate(self.order);
        for k in (0..m).rev() {
            acc = acc.mul_jet(&nil);
            acc.coeffs[0] += d[k];
        }
        acc
    }

    /// Highest power of the non-constant part that can be nonzero.
    fn nilpotency(&self) -> usize {
        self.order + self.space.aux
    }

    /// `f ∘ self`, truncated at this jet's order.
    pub fn apply(&self, f: ElemFn) -> Result<Jet> {
        let a0 = self.value();
        let m = self.nilpotency();
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let series = |cycle: [f64; 4]| -> Vec<f64> { (0..=m).map(|k| cycle[k % 4] / fact(k)).collect() };
        match f {
            ElemFn::Neg => Ok(-self),
            ElemFn::Exp => {
                let e = libm::exp(a0);
                Ok(self.compose_series(&(0..=m).map(|k| e / fact(k)).collect::<Vec<_>>()))
            }
            ElemFn::Sin => {
                let (s, c) = (libm::sin(a0), libm::cos(a0));
                Ok(self.compose_series(&series([s, c, -s, -c])))
            }
            ElemFn::Cos => {
                let (s, c) = (libm::sin(a0), libm::cos(a0));
                Ok(self.compose_series(&series([c, -s, -c, s])))
            }
            ElemFn::Sinh => {
                let (s, c) = (libm::sinh(a0), libm::cosh(a0));
                Ok(self.compose_series(&series([s, c, s, c])))
            }
            ElemFn::Cosh => {
                let (s, c) = (libm::sinh(a0), libm::cosh(a0));
                Ok(self.compose_series(&series([c, s, c, s])))
            }
            ElemFn::Tan => {
                if libm::fabs(libm::cos(a0)) < 1e-300 {
                    return Err(Error::Singular(format!("tan at {a0}")));
                }
                self.apply(ElemFn::Sin)?.try_div(&self.apply(ElemFn::Cos)?)
            }
            ElemFn::Log => {
                if !(a0 > 0.0) {
                    return Err(Error::Singular(format!("log of nonpositive value {a0}")));
                }
                let mut d = vec![libm::log(a0)];
                for k in 1..=m {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    d.push(sign / (k as f64 * powi(a0, k as i32)));
                }
                Ok(self.compose_series(&d))
            }
            ElemFn::Sqrt => {
                if !(a0 > 0.0) {
                    return Err(Error::Singular(format!("sqrt at nonpositive value {a0}")));
                }
                self.apply(ElemFn::Pow(0.5))
            }
            ElemFn::Pow(c) => self.powf(c),
        }
    }

    pub fn powi(&self, k: i32) -> Result<Jet> {
        let mut acc = Jet::constant(&self.space, 1.0).truncate(self.order);
        let mut base = self.clone();
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        if k < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    pub fn powf(&self, c: f64) -> Result<Jet> {
        if let Some(k) = small_integer(c) {
            return self.powi(k);
        }
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(Error::Singular(format!("non-integer power {c} of nonpositive value {a0}")));
        }
        let m = self.nilpotency();
        let mut d = Vec::with_capacity(m + 1);
        let mut binom = 1.0;
        for k in 0..=m {
            d.push(binom * libm::pow(a0, c - k as f64));
            binom *= (c - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose_series(&d))
    }

    pub fn sin(&self) -> Jet {
        self.apply(ElemFn::Sin).expect("sin is entire")
    }

    pub fn cos(&self) -> Jet {
        self.apply(ElemFn::Cos).expect("cos is entire")
    }

    pub fn exp(&self) -> Jet {
        self.apply(ElemFn::Exp).expect("exp is entire")
    }

    pub fn square(&self) -> Jet {
        self.mul_jet(self)
    }
}

/// Sum of jets; the empty sum is the zero jet of full order.
pub fn jet_sum<I: IntoIterator<Item = Jet>>(space: &Arc<JetSpace>, iter: I) -> Jet {
    let mut acc: Option<Jet> = None;
    for j in iter {
        acc = Some(match acc {
            None => j,
            Some(mut a) => {
                a += &j;
                a
            }
        });
    }
    acc.unwrap_or_else(|| Jet::zero(space))
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
forward_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
forward_binop!(Mul, mul, |a, b| a.mul_jet(b));
forward_binop!(Div, div, |a, b| a.try_div(b).expect("jet division by zero constant term"));

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.check_space(rhs);
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(self.space.len_at(self.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.check_space(rhs);
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(self.space.len_at(self.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        for c in &mut self.coeffs {
            *c *= rhs;
        }
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self *= rhs;
        self
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self *= -1.0;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(space: &Arc<JetSpace>, v: f64) -> Jet {
        Jet::variable(space, 0, v)
    }

    #[test]
    fn square_of_one_plus_x() {
        let sp = JetSpace::new(1, 2);
        let a = x(&sp, 0.0) + 1.0;
        let p = &a * &a;
        assert_eq!(p.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn geometric_series() {
        let sp = JetSpace::new(1, 2);
        let one = Jet::constant(&sp, 1.0);
        let q = one.try_div(&(Jet::constant(&sp, 1.0) - x(&sp, 0.0))).unwrap();
        for (c, e) in q.coeffs().iter().zip([1.0, 1.0, 1.0]) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_taylor_table() {
        let sp = JetSpace::new(1, 3);
        let e = x(&sp, 0.0).exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (c, t) in e.coeffs().iter().zip(expect) {
            assert!((c - t).abs() < 1e-15);
        }
        assert!((e.derivative(&[3]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sin_of_zero_constant() {
        let sp = JetSpace::new(2, 3);
        let s = Jet::constant(&sp, 0.0).sin();
        assert!(s.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn sin_squared_at_half_pi() {
        let sp = JetSpace::new(1, 2);
        let s = x(&sp, core::f64::consts::FRAC_PI_2).sin();
        let s2 = &s * &s;
        assert!((s2.value() - 1.0).abs() < 1e-15);
        assert!(s2.derivative(&[1]).unwrap().abs() < 1e-15);
        assert!((s2.coeff(&[2]) + 1.0).abs() < 1e-15);
        assert!((s2.derivative(&[2]).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_basics() {
        let sp = JetSpace::new(1, 3);
        let xx = x(&sp, 0.0).square();
        assert_eq!(xx.derivative(&[2]).unwrap(), 2.0);
        let c = Jet::constant(&sp, 3.5);
        assert_eq!(c.derivative(&[1]).unwrap(), 0.0);
        assert_eq!(c.derivative(&[3]).unwrap(), 0.0);
        assert!(matches!(c.derivative(&[4]), Err(Error::OrderExhausted { .. })));
    }

    #[test]
    fn checked_arith_errors() {
        let a = Jet::constant(&JetSpace::new(2, 2), 1.0);
        let b = Jet::constant(&JetSpace::new(3, 2), 1.0);
        assert!(matches!(Jet::arith(&a, &b, JetOp::Add), Err(Error::DimensionMismatch(..))));
        let c = a.truncate(1);
        assert!(matches!(Jet::arith(&a, &c, JetOp::Mul), Err(Error::OrderMismatch(..))));
        let sp = JetSpace::new(2, 2);
        let z = Jet::variable(&sp, 0, 0.0);
        assert!(matches!(
            Jet::arith(&Jet::constant(&sp, 1.0), &z, JetOp::Div),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn domain_errors() {
        let sp = JetSpace::new(1, 2);
        assert!(matches!(x(&sp, -1.0).apply(ElemFn::Log), Err(Error::Singular(_))));
        assert!(matches!(x(&sp, 0.0).apply(ElemFn::Sqrt), Err(Error::Singular(_))));
        assert!(x(&sp, 0.0).apply(ElemFn::Pow(2.0)).is_ok());
    }

    #[test]
    fn partial_lowers_order() {
        let sp = JetSpace::new(2, 3);
        let f = Jet::variable(&sp, 0, 1.0) * Jet::variable(&sp, 1, 2.0).square();
        let fy = f.partial(1).unwrap();
        assert_eq!(fy.order(), 2);
        // ∂_y (x y²) = 2xy = 4 at (1, 2)
        assert!((fy.value() - 4.0).abs() < 1e-14);
        assert!((fy.derivative(&[1, 1]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn auxiliary_variable_is_linear() {
        let sp = JetSpace::with_aux(2, 1, 3);
        let e = Jet::aux_variable(&sp, 0);
        let xj = Jet::variable(&sp, 0, 0.5);
        // (x + ε)^3 = x^3 + 3x^2 ε + O(ε²)
        let f = (&xj + &e).powi(3).unwrap();
        let lin = f.aux_coefficient(0);
        let expect = (&xj * &xj) * 3.0;
        for (a, b) in lin.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((&e * &e).max_abs() == 0.0);
    }

    #[test]
    fn storage_is_graded_prefix() {
        let sp = JetSpace::new(3, 4);
        assert_eq!(sp.len(), 35);
        assert_eq!(sp.len_at(1), 4);
        assert_eq!(sp.len_at(2), 10);
        for r in 0..sp.len() {
            let e: Vec<usize> = sp.exponents(r).iter().map(|&v| v as usize).collect();
            assert_eq!(sp.rank_of(&e), Some(r));
        }
    }
}
