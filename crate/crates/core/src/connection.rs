//! Linear connections on trivialized bundles over a chart, and the
//! connection-coupled calculus of bundle-valued forms.
//!
//! A connection of rank `r` is described by coefficients `A_a^I_J` with
//! `∇_a s^I = ∂_a s^I + A_a^I_J s^J`. On form indices the Levi-Civita
//! connection of the ambient [`Geometry`] is coupled in.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{usage, Error, Result};
use crate::jet::{jet_sum, Jet};
use crate::riemann::Geometry;
use crate::tensor::{Co, JetTensor};

/// Descriptive metadata attached to a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConnectionFlags {
    pub metric_preserving: bool,
    pub tractor: bool,
    pub levi_civita: bool,
}

/// A connection evaluated pointwise from the ambient geometry.
pub trait Connection {
    fn rank(&self) -> usize;
    fn label(&self) -> String;
    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags::default()
    }
    /// Metric jet order consumed before the coefficients have a value.
    fn metric_order(&self) -> usize;
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients>;
}

impl<C: Connection + ?Sized> Connection for Box<C> {
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn flags(&self) -> ConnectionFlags {
        (**self).flags()
    }
    fn metric_order(&self) -> usize {
        (**self).metric_order()
    }
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        (**self).coefficients(geom)
    }
}

/// Jets of `A_a^I_J` at one point, stored at `[a][I][J]`.
#[derive(Debug, Clone)]
pub struct ConnectionCoefficients {
    n: usize,
    r: usize,
    data: Vec<Jet>,
}

impl ConnectionCoefficients {
    pub fn from_fn(n: usize, r: usize, mut f: impl FnMut(usize, usize, usize) -> Jet) -> Self {
        let mut data = Vec::with_capacity(n * r * r);
        for a in 0..n {
            for i in 0..r {
                for j in 0..r {
                    data.push(f(a, i, j));
                }
            }
        }
        ConnectionCoefficients { n, r, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn at(&self, a: usize, i: usize, j: usize) -> &Jet {
        &self.data[(a * self.r + i) * self.r + j]
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    /// Values of `A(v) = v^a A_a` as a row-major `r × r` matrix.
    pub fn contracted_value(&self, v: &[f64]) -> Vec<f64> {
        let r = self.r;
        let mut m = vec![0.0; r * r];
        for (a, &va) in v.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            for k in 0..r * r {
                m[k] += va * self.data[a * r * r + k].value();
            }
        }
        m
    }

    /// `∇_a s^I` stored at `[a][I]`.
    pub fn apply(&self, geom: &Geometry, s: &[Jet]) -> Result<Vec<Vec<Jet>>> {
        if s.len() != self.r {
            return Err(usage(format!("section has {} components, bundle rank is {}", s.len(), self.r)));
        }
        let space = geom.space();
        (0..self.n)
            .map(|a| {
                (0..self.r)
                    .map(|i| {
                        let d = s[i].partial(a)?;
                        let couple = jet_sum(space, (0..self.r).filter_map(|j| mul_nonzero(self.at(a, i, j), &s[j])));
                        Ok(d + couple)
                    })
                    .collect()
            })
            .collect()
    }

    /// Curvature `F_ab = ∂_a A_b - ∂_b A_a + [A_a, A_b]`.
    pub fn curvature(&self, geom: &Geometry) -> Result<CurvatureF> {
        let (n, r) = (self.n, self.r);
        let space = geom.space();
        let mut d = Vec::with_capacity(n * n * r * r);
        for e in 0..n {
            for a in 0..n {
                for k in 0..r * r {
                    d.push(self.data[a * r * r + k].partial(e)?);
                }
            }
        }
        let dd = |e: usize, a: usize, i: usize, j: usize| &d[((e * n + a) * r + i) * r + j];
        let comps = (0..r * r)
            .map(|ij| {
                let (i, j) = (ij / r, ij % r);
                JetTensor::from_fn(n, &[Co, Co], |idx| {
                    let (a, b) = (idx[0], idx[1]);
                    if a == b {
                        return Jet::zero(space);
                    }
                    let mut f = dd(a, b, i, j) - dd(b, a, i, j);
                    for k in 0..r {
                        if let Some(t) = mul_nonzero(self.at(a, i, k), self.at(b, k, j)) {
                            f += t;
                        }
                        if let Some(t) = mul_nonzero(self.at(b, i, k), self.at(a, k, j)) {
                            f -= t;
                        }
                    }
                    f
                })
            })
            .collect();
        Ok(CurvatureF { r, form: TwistedForm { degree: 2, comps } })
    }

    /// Induced connection on `End(V)`, fiber index `(I, J) ↦ I r + J`:
    /// `∇_a X = ∂_a X + [A_a, X]`.
    pub fn end(&self) -> ConnectionCoefficients {
        let r = self.r;
        let space = self.data[0].space().clone();
        ConnectionCoefficients::from_fn(self.n, r * r, |a, ij, kl| {
            let (i, j, k, l) = (ij / r, ij % r, kl / r, kl % r);
            let mut out = Jet::zero(&space);
            if l == j {
                out += self.at(a, i, k);
            }
            if i == k {
                out -= self.at(a, l, j);
            }
            out
        })
    }
}

fn mul_nonzero(a: &Jet, b: &Jet) -> Option<Jet> {
    if a.coeffs().iter().all(|&c| c == 0.0) || b.coeffs().iter().all(|&c| c == 0.0) {
        None
    } else {
        Some(a * b)
    }
}

/// A bundle-valued form of degree 0, 1 or 2: `comps[I]` is the scalar, covector
/// or 2-form attached to fiber index `I`.
#[derive(Debug, Clone)]
pub struct TwistedForm {
    pub degree: usize,
    pub comps: Vec<JetTensor>,
}

impl TwistedForm {
    pub fn new(degree: usize, comps: Vec<JetTensor>) -> Result<Self> {
        if degree > 2 {
            return Err(usage("twisted forms of degree above 2 are not supported"));
        }
        if comps.iter().any(|c| c.rank() != degree || c.slots().iter().any(|&s| s != Co)) {
            return Err(usage(format!("components must be covariant tensors of rank {degree}")));
        }
        Ok(TwistedForm { degree, comps })
    }

    /// Degree-0 form from a section.
    pub fn section(s: Vec<Jet>) -> Self {
        TwistedForm { degree: 0, comps: s.into_iter().map(JetTensor::scalar).collect() }
    }

    pub fn rank(&self) -> usize {
        self.comps.len()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|c| c.order()).min().unwrap_or(0)
    }

    /// Largest absolute component value at the base point.
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().map(|c| c.value().max_abs()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &TwistedForm) -> TwistedForm {
        assert_eq!(self.degree, other.degree, "degree mismatch");
        TwistedForm { degree: self.degree, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn add(&self, other: &TwistedForm) -> TwistedForm {
        assert_eq!(self.degree, other.degree, "degree mismatch");
        TwistedForm { degree: self.degree, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() }
    }

    /// Largest antisymmetry defect of a degree-2 form.
    pub fn antisymmetry_defect(&self) -> f64 {
        if self.degree != 2 {
            return 0.0;
        }
        let mut m: f64 = 0.0;
        for c in &self.comps {
            let n = c.n();
            for a in 0..n {
                for b in 0..n {
                    m = m.max(libm::fabs(c.at(&[a, b]).value() + c.at(&[b, a]).value()));
                }
            }
        }
        m
    }
}

/// Curvature of a connection as an `End(V)`-valued 2-form, fiber index
/// `(I, J) ↦ I r + J`.
#[derive(Debug, Clone)]
pub struct CurvatureF {
    pub r: usize,
    pub form: TwistedForm,
}

impl CurvatureF {
    pub fn at(&self, a: usize, b: usize, i: usize, j: usize) -> &Jet {
        self.form.comps[i * self.r + j].at(&[a, b])
    }

    /// `F_ab s` for a section.
    pub fn act(&self, a: usize, b: usize, s: &[Jet]) -> Vec<Jet> {
        let space = s[0].space();
        (0..self.r).map(|i| jet_sum(space, (0..self.r).map(|j| self.at(a, b, i, j) * &s[j]))).collect()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.form.max_abs_value()
    }
}

fn check_rank(phi: &TwistedForm, coeffs: &ConnectionCoefficients) -> Result<()> {
    if phi.rank() != coeffs.rank() {
        Err(usage(format!("form has rank {}, connection has rank {}", phi.rank(), coeffs.rank())))
    } else {
        Ok(())
    }
}

/// Coupled covariant derivative; the derivative index becomes slot 0.
pub fn coupled_derivative(geom: &Geometry, coeffs: &ConnectionCoefficients, phi: &TwistedForm) -> Result<Vec<JetTensor>> {
    check_rank(phi, coeffs)?;
    let n = geom.dim();
    let r = coeffs.rank();
    let lc: Vec<JetTensor> = phi.comps.iter().map(|c| geom.covariant_derivative(c)).collect::<Result<_>>()?;
    let slots = vec![Co; phi.degree + 1];
    let out = (0..r)
        .map(|i| {
            JetTensor::from_fn(n, &slots, |idx| {
                let a = idx[0];
                let mut v = lc[i].at(idx).clone();
                for j in 0..r {
                    if let Some(t) = mul_nonzero(coeffs.at(a, i, j), phi.comps[j].at(&idx[1..])) {
                        v += t;
                    }
                }
                v
            })
        })
        .collect();
    Ok(out)
}

/// Coupled exterior derivative on degree 0 and 1.
pub fn twisted_d(geom: &Geometry, coeffs: &ConnectionCoefficients, phi: &TwistedForm) -> Result<TwistedForm> {
    let n = geom.dim();
    let nabla = coupled_derivative(geom, coeffs, phi)?;
    match phi.degree {
        0 => Ok(TwistedForm { degree: 1, comps: nabla }),
        1 => Ok(TwistedForm {
            degree: 2,
            comps: nabla
                .iter()
                .map(|t| JetTensor::from_fn(n, &[Co, Co], |i| t.at(&[i[0], i[1]]) - t.at(&[i[1], i[0]])))
                .collect(),
        }),
        k => Err(usage(format!("twisted d is defined on degrees 0 and 1, got {k}"))),
    }
}

/// Formal adjoint of [`twisted_d`]: minus the coupled divergence on the first
/// slot.
pub fn twisted_delta(geom: &Geometry, coeffs: &ConnectionCoefficients, phi: &TwistedForm) -> Result<TwistedForm> {
    if phi.degree == 0 {
        return Err(usage("twisted δ is defined on degrees 1 and 2"));
    }
    let n = geom.dim();
    let gi = geom.inverse();
    let nabla = coupled_derivative(geom, coeffs, phi)?;
    let slots = vec![Co; phi.degree - 1];
    let comps = nabla
        .iter()
        .map(|t| {
            JetTensor::from_fn(n, &slots, |rest| {
                let mut s = Jet::zero(geom.space());
                let mut idx = vec![0usize; phi.degree + 1];
                idx[2..].copy_from_slice(rest);
                for c in 0..n {
                    for a in 0..n {
                        idx[0] = c;
                        idx[1] = a;
                        s -= gi.at(&[c, a]) * t.at(&idx);
                    }
                }
                s
            })
        })
        .collect();
    Ok(TwistedForm { degree: phi.degree - 1, comps })
}

/// `(F·φ)_a = g^{bc} F_ac φ_b` on a degree-1 form.
pub fn curvature_action(geom: &Geometry, f: &CurvatureF, phi: &TwistedForm) -> Result<TwistedForm> {
    if phi.degree != 1 || phi.rank() != f.r {
        return Err(usage("curvature action needs a degree-1 form of matching rank"));
    }
    let n = geom.dim();
    let r = f.r;
    // φ^b raised once
    let up: Vec<JetTensor> = phi.comps.iter().map(|c| geom.raise(c, 0)).collect();
    let comps = (0..r)
        .map(|i| {
            JetTensor::from_fn(n, &[Co], |idx| {
                let a = idx[0];
                let mut s = Jet::zero(geom.space());
                for j in 0..r {
                    for c in 0..n {
                        if let Some(t) = mul_nonzero(f.at(a, c, i, j), up[j].at(&[c])) {
                            s += t;
                        }
                    }
                }
                s
            })
        })
        .collect();
    Ok(TwistedForm { degree: 1, comps })
}

/// `M φ = δ d φ - F·φ` on degree-1 forms.
pub fn op_m(geom: &Geometry, coeffs: &ConnectionCoefficients, f: &CurvatureF, phi: &TwistedForm) -> Result<TwistedForm> {
    if phi.degree != 1 {
        return Err(usage("M acts on degree-1 forms"));
    }
    let dd = twisted_delta(geom, coeffs, &twisted_d(geom, coeffs, phi)?)?;
    let fphi = curvature_action(geom, f, phi)?;
    Ok(dd.sub(&fphi))
}

/// Yang-Mills current `δF`, an `End(V)`-valued 1-form.
pub fn ym_current(geom: &Geometry, coeffs: &ConnectionCoefficients, f: &CurvatureF) -> Result<TwistedForm> {
    twisted_delta(geom, &coeffs.end(), &f.form)
}

/// `ε(J) s`: the `End(V)`-valued 1-form `J` applied to a section.
pub fn exterior_action(j: &TwistedForm, r: usize, s: &TwistedForm) -> Result<TwistedForm> {
    if j.degree != 1 || s.degree != 0 || j.rank() != r * r || s.rank() != r {
        return Err(usage("exterior action needs an End-valued 1-form and a section"));
    }
    let n = j.comps[0].n();
    let space = j.comps[0].space().clone();
    let comps = (0..r)
        .map(|i| {
            JetTensor::from_fn(n, &[Co], |idx| {
                jet_sum(&space, (0..r).map(|k| j.comps[i * r + k].at(idx) * s.comps[k].at(&[])))
            })
        })
        .collect();
    Ok(TwistedForm { degree: 1, comps })
}

/// `ι(J) φ = g^{ab} J_a φ_b` for an `End(V)`-valued 1-form and a degree-1 form.
pub fn interior_action(geom: &Geometry, j: &TwistedForm, r: usize, phi: &TwistedForm) -> Result<TwistedForm> {
    if j.degree != 1 || phi.degree != 1 || j.rank() != r * r || phi.rank() != r {
        return Err(usage("interior action needs an End-valued 1-form and a degree-1 form"));
    }
    let n = geom.dim();
    let gi = geom.inverse();
    let space = geom.space();
    let comps = (0..r)
        .map(|i| {
            let mut s = Jet::zero(space);
            for k in 0..r {
                for a in 0..n {
                    for b in 0..n {
                        s += gi.at(&[a, b]) * j.comps[i * r + k].at(&[a]) * phi.comps[k].at(&[b]);
                    }
                }
            }
            JetTensor::scalar(s)
        })
        .collect();
    Ok(TwistedForm { degree: 0, comps })
}

/// The product connection `d` on a trivial bundle.
#[derive(Debug, Clone)]
pub struct TrivialConnection {
    pub rank: usize,
}

impl Connection for TrivialConnection {
    fn rank(&self) -> usize {
        self.rank
    }
    fn label(&self) -> String {
        format!("trivial(rank {})", self.rank)
    }
    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags { metric_preserving: true, ..Default::default() }
    }
    fn metric_order(&self) -> usize {
        0
    }
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        let sp = geom.space();
        Ok(ConnectionCoefficients::from_fn(geom.dim(), self.rank, |_, _, _| Jet::zero(sp)))
    }
}

/// Levi-Civita connection on 1-forms: `A_a^b_e = -Γ^e_ab`.
#[derive(Debug, Clone)]
pub struct LeviCivitaForms {
    pub n: usize,
}

impl Connection for LeviCivitaForms {
    fn rank(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        String::from("levi-civita(Λ¹)")
    }
    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags { metric_preserving: true, levi_civita: true, ..Default::default() }
    }
    fn metric_order(&self) -> usize {
        1
    }
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        dim_check(self.n, geom)?;
        let g = geom.christoffel();
        Ok(ConnectionCoefficients::from_fn(self.n, self.n, |a, b, e| -g.at(&[e, a, b])))
    }
}

/// Levi-Civita connection on contravariant 2-tensors `S^{cd}`, fiber index
/// `(c, d) ↦ c n + d`.
#[derive(Debug, Clone)]
pub struct LeviCivitaT2 {
    pub n: usize,
}

impl Connection for LeviCivitaT2 {
    fn rank(&self) -> usize {
        self.n * self.n
    }
    fn label(&self) -> String {
        String::from("levi-civita(T²)")
    }
    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags { metric_preserving: true, levi_civita: true, ..Default::default() }
    }
    fn metric_order(&self) -> usize {
        1
    }
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        let n = self.n;
        dim_check(n, geom)?;
        let g = geom.christoffel();
        let sp = geom.space();
        Ok(ConnectionCoefficients::from_fn(n, n * n, |a, cd, ef| {
            let (c, d, e, f) = (cd / n, cd % n, ef / n, ef % n);
            let mut out = Jet::zero(sp);
            if d == f {
                out += g.at(&[c, a, e]);
            }
            if c == e {
                out += g.at(&[d, a, f]);
            }
            out
        }))
    }
}

fn dim_check(n: usize, geom: &Geometry) -> Result<()> {
    if geom.dim() != n {
        Err(Error::DimensionMismatch(n, geom.dim()))
    } else {
        Ok(())
    }
}

/// Connection with coefficients quadratic polynomials in the chart
/// coordinates; generically not Yang-Mills.
#[derive(Debug, Clone)]
pub struct PolynomialConnection {
    n: usize,
    r: usize,
    /// `[a][I][J]` blocks of `1 + n + n(n+1)/2` monomial coefficients.
    coeffs: Vec<f64>,
}

impl PolynomialConnection {
    fn monomials(n: usize) -> usize {
        1 + n + n * (n + 1) / 2
    }

    /// Random coefficients in `[-scale, scale]`; `skew` makes every `A_a`
    /// antisymmetric, so the connection preserves the standard fiber metric.
    pub fn random(n: usize, r: usize, scale: f64, skew: bool, rng: &mut impl Rng) -> Self {
        let m = Self::monomials(n);
        let mut coeffs = vec![0.0; n * r * r * m];
        for a in 0..n {
            for i in 0..r {
                for j in 0..r {
                    if skew && j < i {
                        continue;
                    }
                    for k in 0..m {
                        let v = if skew && i == j { 0.0 } else { scale * rng.random_range(-1.0..=1.0) };
                        coeffs[((a * r + i) * r + j) * m + k] = v;
                        if skew {
                            coeffs[((a * r + j) * r + i) * m + k] = -v;
                        }
                    }
                }
            }
        }
        PolynomialConnection { n, r, coeffs }
    }
}

impl Connection for PolynomialConnection {
    fn rank(&self) -> usize {
        self.r
    }
    fn label(&self) -> String {
        format!("polynomial(rank {})", self.r)
    }
    fn metric_order(&self) -> usize {
        0
    }
    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        let n = self.n;
        dim_check(n, geom)?;
        let sp = geom.space();
        let x: Vec<Jet> = geom.point().iter().enumerate().map(|(k, &p)| Jet::variable(sp, k, p)).collect();
        let mut basis = vec![Jet::constant(sp, 1.0)];
        basis.extend(x.iter().cloned());
        for k in 0..n {
            for l in k..n {
                basis.push(&x[k] * &x[l]);
            }
        }
        let m = Self::monomials(n);
        let r = self.r;
        Ok(ConnectionCoefficients::from_fn(n, r, |a, i, j| {
            let c = &self.coeffs[((a * r + i) * r + j) * m..][..m];
            jet_sum(sp, c.iter().zip(&basis).map(|(&ck, bk)| bk.scale(ck)))
        }))
    }
}
