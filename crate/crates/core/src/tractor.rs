//! The standard tractor bundle in the splitting of the working scale `g`.
//!
//! Sections are triples `(σ, μ_b, ρ)` of weights 1, 1 and -1, all trivialized
//! by `g`. As a bundle of rank `n + 2` the fiber order is `σ, μ_0 … μ_{n-1}, ρ`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::connection::{
    twisted_delta, Connection, ConnectionCoefficients, ConnectionFlags, TwistedForm,
};
use crate::error::{exhausted, usage, Error, Result};
use crate::jet::{jet_sum, Jet};
use crate::riemann::Geometry;
use crate::tensor::{for_each_index, Co, Contra, JetTensor, TensorValue, Weight};

/// Absolute tolerance for accepting an input as trace-free symmetric.
pub const TRACE_FREE_TOL: f64 = 1e-8;

/// Tractor section with jet components.
#[derive(Debug, Clone)]
pub struct TractorJet {
    pub sigma: Jet,
    pub mu: JetTensor,
    pub rho: Jet,
}

/// Tractor value at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TractorValue {
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub rho: f64,
}

/// Tractor-valued 1-form `(α_a, ν_ab, τ_a)`: the form index is `a`, `b` is the
/// tractor `μ` index.
#[derive(Debug, Clone)]
pub struct TractorOneForm {
    pub alpha: JetTensor,
    pub nu: JetTensor,
    pub tau: JetTensor,
}

impl TractorValue {
    pub fn max_diff(&self, other: &TractorValue) -> f64 {
        let m = self.mu.iter().zip(&other.mu).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
        m.max(libm::fabs(self.sigma - other.sigma)).max(libm::fabs(self.rho - other.rho))
    }

    pub fn max_abs(&self) -> f64 {
        self.mu.iter().map(|v| libm::fabs(*v)).fold(libm::fabs(self.sigma).max(libm::fabs(self.rho)), f64::max)
    }
}

impl TractorJet {
    pub fn new(sigma: Jet, mu: JetTensor, rho: Jet) -> Result<Self> {
        if mu.slots() != [Co] {
            return Err(usage("the μ slot of a tractor is a covector"));
        }
        Ok(TractorJet { sigma, mu: mu.with_weight(Weight::whole(1)), rho })
    }

    pub fn dim(&self) -> usize {
        self.mu.n()
    }

    pub fn value(&self) -> TractorValue {
        TractorValue {
            sigma: self.sigma.value(),
            mu: self.mu.value().comps,
            rho: self.rho.value(),
        }
    }

    /// Components in fiber order.
    pub fn to_section(&self) -> Vec<Jet> {
        let mut s = Vec::with_capacity(self.dim() + 2);
        s.push(self.sigma.clone());
        s.extend(self.mu.comps().iter().cloned());
        s.push(self.rho.clone());
        s
    }

    pub fn from_section(s: &[Jet]) -> Result<Self> {
        if s.len() < 3 {
            return Err(usage("a tractor section has at least three components"));
        }
        let n = s.len() - 2;
        TractorJet::new(s[0].clone(), JetTensor::from_fn(n, &[Co], |i| s[1 + i[0]].clone()), s[n + 1].clone())
    }

    pub fn order(&self) -> usize {
        self.sigma.order().min(self.mu.order()).min(self.rho.order())
    }
}

impl TractorOneForm {
    pub fn dim(&self) -> usize {
        self.alpha.n()
    }

    /// The tractor attached to form index `a`.
    pub fn slot(&self, a: usize) -> TractorJet {
        let n = self.dim();
        TractorJet {
            sigma: self.alpha.at(&[a]).clone(),
            mu: JetTensor::from_fn(n, &[Co], |i| self.nu.at(&[a, i[0]]).clone()),
            rho: self.tau.at(&[a]).clone(),
        }
    }

    pub fn from_slots(slots: &[TractorJet]) -> Self {
        let n = slots.len();
        TractorOneForm {
            alpha: JetTensor::from_fn(n, &[Co], |i| slots[i[0]].sigma.clone()),
            nu: JetTensor::from_fn(n, &[Co, Co], |i| slots[i[0]].mu.at(&[i[1]]).clone()),
            tau: JetTensor::from_fn(n, &[Co], |i| slots[i[0]].rho.clone()),
        }
    }

    pub fn to_twisted(&self) -> TwistedForm {
        let n = self.dim();
        let mut comps = Vec::with_capacity(n + 2);
        comps.push(self.alpha.clone());
        for b in 0..n {
            comps.push(JetTensor::from_fn(n, &[Co], |i| self.nu.at(&[i[0], b]).clone()));
        }
        comps.push(self.tau.clone());
        TwistedForm { degree: 1, comps }
    }

    pub fn from_twisted(f: &TwistedForm) -> Result<Self> {
        if f.degree != 1 || f.rank() < 3 {
            return Err(usage("expected a tractor-valued 1-form"));
        }
        let n = f.rank() - 2;
        Ok(TractorOneForm {
            alpha: f.comps[0].clone(),
            nu: JetTensor::from_fn(n, &[Co, Co], |i| f.comps[1 + i[1]].at(&[i[0]]).clone()),
            tau: f.comps[n + 1].clone(),
        })
    }

    pub fn sub(&self, other: &TractorOneForm) -> TractorOneForm {
        TractorOneForm {
            alpha: self.alpha.sub(&other.alpha),
            nu: self.nu.sub(&other.nu),
            tau: self.tau.sub(&other.tau),
        }
    }

    /// Largest component value at the base point.
    pub fn max_abs_value(&self) -> f64 {
        self.alpha.value().max_abs().max(self.nu.value().max_abs()).max(self.tau.value().max_abs())
    }
}

/// `𝔻σ = (σ, ∇σ, -(Δσ + Jσ)/n)`.
pub fn splitting_bd(geom: &Geometry, sigma: &Jet) -> Result<TractorJet> {
    let n = geom.dim() as f64;
    let grad = geom.gradient(sigma)?;
    let lap = geom.laplacian(sigma)?;
    let j = geom.schouten_trace()?;
    let rho = -(lap + j * sigma).scale(1.0 / n);
    TractorJet::new(sigma.clone(), grad, rho)
}

/// `X(t) = σ`, the projection onto the top slot.
pub fn projection_x(t: &TractorJet) -> Jet {
    t.sigma.clone()
}

/// `Dσ = TF(∇_a∇_b σ + P_ab σ)`.
pub fn op_d(geom: &Geometry, sigma: &Jet) -> Result<JetTensor> {
    let hess = geom.hessian(sigma)?;
    let p = geom.schouten()?;
    let t = JetTensor::from_fn(geom.dim(), &[Co, Co], |i| hess.at(i) + p.at(i) * sigma);
    Ok(geom.trace_free(&t).with_weight(Weight::whole(1)))
}

/// Rejects tensors that are not symmetric trace-free to [`TRACE_FREE_TOL`].
pub fn check_trace_free_symmetric(geom: &Geometry, psi: &JetTensor) -> Result<()> {
    if psi.slots() != [Co, Co] || psi.n() != geom.dim() {
        return Err(usage("expected a covariant 2-tensor on the chart"));
    }
    let n = geom.dim();
    let scale = psi.comps().iter().map(|j| j.max_abs()).fold(1.0, f64::max);
    let mut worst: f64 = geom.trace(psi).max_abs();
    for a in 0..n {
        for b in 0..n {
            worst = worst.max((psi.at(&[a, b]) - psi.at(&[b, a])).max_abs());
        }
    }
    if worst > TRACE_FREE_TOL * scale {
        return Err(usage(format!("input is not trace-free symmetric (defect {worst:e})")));
    }
    Ok(())
}

/// `E(ψ) = (0, ψ_ab, -(n-1)^{-1} ∇^b ψ_ab)`.
pub fn op_e(geom: &Geometry, psi: &JetTensor) -> Result<TractorOneForm> {
    check_trace_free_symmetric(geom, psi)?;
    let n = geom.dim();
    let div = divergence_last(geom, psi)?;
    let sp = geom.space();
    Ok(TractorOneForm {
        alpha: JetTensor::zeros(sp, n, &[Co]),
        nu: psi.clone(),
        tau: div.scale(-1.0 / (n as f64 - 1.0)),
    })
}

/// Closed form of `∇^D 𝔻σ`: `(0, TF(∇∇σ + Pσ), -(1/n)∇(Δσ + Jσ) - P_a^c ∇_c σ)`.
pub fn commuting_column(geom: &Geometry, sigma: &Jet) -> Result<TractorOneForm> {
    let n = geom.dim();
    if geom.order() < 3 || sigma.order() < 3 {
        return Err(exhausted(3, geom.order().min(sigma.order())));
    }
    let p = geom.schouten()?;
    let j = geom.schouten_trace()?;
    let hess = geom.hessian(sigma)?;
    let grad = geom.gradient(sigma)?;
    let nu = geom.trace_free(&JetTensor::from_fn(n, &[Co, Co], |i| hess.at(i) + &(p.at(i) * sigma)));
    let lap = &geom.laplacian(sigma)? + &(j * sigma);
    let dlap = geom.gradient(&lap)?;
    let p_mixed = geom.raise(&p, 1);
    let tau = JetTensor::from_fn(n, &[Co], |i| {
        let mut s = dlap.at(i).scale(-1.0 / n as f64);
        for c in 0..n {
            s -= p_mixed.at(&[i[0], c]) * grad.at(&[c]);
        }
        s
    });
    let zero = Jet::zero(sigma.space());
    let alpha = JetTensor::from_fn(n, &[Co], |_| zero.clone());
    Ok(TractorOneForm { alpha, nu, tau })
}

/// Left inverse of [`op_e`]: the `ν` slot.
pub fn op_e_inverse(form: &TractorOneForm) -> JetTensor {
    form.nu.clone()
}

/// `∇^b ψ_ab`.
fn divergence_last(geom: &Geometry, psi: &JetTensor) -> Result<JetTensor> {
    let n = geom.dim();
    let d = geom.covariant_derivative(psi)?;
    let gi = geom.inverse();
    Ok(JetTensor::from_fn(n, &[Co], |i| {
        let mut s = Jet::zero(geom.space());
        for c in 0..n {
            for b in 0..n {
                s += gi.at(&[c, b]) * d.at(&[c, i[0], b]);
            }
        }
        s
    }))
}

/// `∇^a φ_a` for a covector.
fn divergence(geom: &Geometry, phi: &JetTensor) -> Result<Jet> {
    let d = geom.covariant_derivative(phi)?;
    Ok(geom.trace(&d))
}

/// The tractor connection written out slot by slot:
/// `(∇_a σ - μ_a, ∇_a μ_b + g_ab ρ + P_ab σ, ∇_a ρ - P_a^b μ_b)`.
pub fn tractor_connection_apply(geom: &Geometry, t: &TractorJet) -> Result<TractorOneForm> {
    let n = geom.dim();
    if t.dim() != n {
        return Err(Error::DimensionMismatch(t.dim(), n));
    }
    let g = geom.metric();
    let p = geom.schouten()?;
    let dsigma = geom.gradient(&t.sigma)?;
    let dmu = geom.covariant_derivative(&t.mu)?;
    let drho = geom.gradient(&t.rho)?;
    let mu_up = geom.raise(&t.mu, 0);
    Ok(TractorOneForm {
        alpha: JetTensor::from_fn(n, &[Co], |i| dsigma.at(i) - t.mu.at(i)),
        nu: JetTensor::from_fn(n, &[Co, Co], |i| dmu.at(i) + g.at(i) * &t.rho + p.at(i) * &t.sigma),
        tau: JetTensor::from_fn(n, &[Co], |i| {
            let a = i[0];
            drho.at(i) - jet_sum(geom.space(), (0..n).map(|b| p.at(&[a, b]) * mu_up.at(&[b])))
        }),
    })
}

/// The tractor connection as a rank `n + 2` connection.
#[derive(Debug, Clone)]
pub struct TractorConnection {
    pub n: usize,
}

impl TractorConnection {
    pub fn sigma_index(&self) -> usize {
        0
    }

    pub fn mu_index(&self, b: usize) -> usize {
        1 + b
    }

    pub fn rho_index(&self) -> usize {
        self.n + 1
    }
}

impl Connection for TractorConnection {
    fn rank(&self) -> usize {
        self.n + 2
    }

    fn label(&self) -> String {
        String::from("tractor")
    }

    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags { metric_preserving: true, tractor: true, levi_civita: false }
    }

    fn metric_order(&self) -> usize {
        2
    }

    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        let n = self.n;
        if geom.dim() != n {
            return Err(Error::DimensionMismatch(n, geom.dim()));
        }
        let g = geom.metric();
        let gamma = geom.christoffel();
        let p = geom.schouten()?;
        let p_mixed = geom.raise(p, 1);
        let sp = geom.space();
        let (s, r) = (0, n + 1);
        Ok(ConnectionCoefficients::from_fn(n, n + 2, |a, i, j| {
            let mu = |k: usize| (1..=n).contains(&k).then(|| k - 1);
            match (i, mu(i), j, mu(j)) {
                (_, None, _, Some(e)) if i == s => Jet::constant(sp, if a == e { -1.0 } else { 0.0 }),
                (_, Some(b), _, Some(e)) => -gamma.at(&[e, a, b]),
                (_, Some(b), _, None) if j == r => g.at(&[a, b]).clone(),
                (_, Some(b), _, None) if j == s => p.at(&[a, b]).clone(),
                (_, None, _, Some(c)) if i == r => -p_mixed.at(&[a, c]),
                _ => Jet::zero(sp),
            }
        }))
    }
}

/// `h(t₁, t₂) = g^{-1}(μ₁, μ₂) + σ₁ρ₂ + ρ₁σ₂`.
pub fn tractor_metric(g: &TensorValue, t1: &TractorValue, t2: &TractorValue) -> Result<f64> {
    let gram = tractor_gram(g)?;
    let n = g.n;
    let v1 = fiber_vector(t1);
    let v2 = fiber_vector(t2);
    if v1.len() != n + 2 || v2.len() != n + 2 {
        return Err(usage("tractor dimension does not match the metric"));
    }
    Ok((0..n + 2).map(|i| (0..n + 2).map(|j| v1[i] * gram[(i, j)] * v2[j]).sum::<f64>()).sum())
}

/// The quadratic form `h` on jets.
pub fn tractor_metric_jet(geom: &Geometry, t1: &TractorJet, t2: &TractorJet) -> Jet {
    let n = geom.dim();
    let gi = geom.inverse();
    let mut s = &t1.sigma * &t2.rho + &t1.rho * &t2.sigma;
    for a in 0..n {
        for b in 0..n {
            s += gi.at(&[a, b]) * t1.mu.at(&[a]) * t2.mu.at(&[b]);
        }
    }
    s
}

fn fiber_vector(t: &TractorValue) -> Vec<f64> {
    let mut v = vec![t.sigma];
    v.extend_from_slice(&t.mu);
    v.push(t.rho);
    v
}

/// Gram matrix of `h` in fiber order.
pub fn tractor_gram(g: &TensorValue) -> Result<nalgebra::DMatrix<f64>> {
    let n = g.n;
    let gm = nalgebra::DMatrix::from_fn(n, n, |i, j| g.at(&[i, j]));
    let gi = gm.try_inverse().ok_or_else(|| Error::Singular(String::from("metric is not invertible")))?;
    let mut h = nalgebra::DMatrix::zeros(n + 2, n + 2);
    h[(0, n + 1)] = 1.0;
    h[(n + 1, 0)] = 1.0;
    for a in 0..n {
        for b in 0..n {
            h[(1 + a, 1 + b)] = gi[(a, b)];
        }
    }
    Ok(h)
}

/// Counts of positive and negative eigenvalues of a symmetric matrix.
pub fn signature_counts(m: &nalgebra::DMatrix<f64>) -> (usize, usize) {
    let eig = m.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let pos = eig.eigenvalues.iter().filter(|&&v| v > 1e-12 * scale).count();
    let neg = eig.eigenvalues.iter().filter(|&&v| v < -1e-12 * scale).count();
    (pos, neg)
}

/// Signatures `(p, q)` of `g` and `(p', q')` of the tractor metric.
pub fn tractor_signature(g: &TensorValue) -> Result<((usize, usize), (usize, usize))> {
    let gm = nalgebra::DMatrix::from_fn(g.n, g.n, |i, j| g.at(&[i, j]));
    Ok((signature_counts(&gm), signature_counts(&tractor_gram(g)?)))
}

/// Tractor curvature at a point, with every block of `Ω_ab^I_J`.
#[derive(Debug, Clone)]
pub struct TractorCurvature {
    pub n: usize,
    /// Values of `Ω_ab^I_J` at `[a][b][I][J]`.
    pub full: Vec<f64>,
    /// `Ω_ab` row `μ_c`, column `σ`, stored at `[a][b][c]`.
    pub mu_sigma: TensorValue,
    /// `Ω_ab` row `μ_c`, column `μ_e`, stored at `[a][b][c][e]`.
    pub mu_mu: TensorValue,
    /// `Ω_ab` row `ρ`, column `μ_e`, stored at `[a][b][e]`.
    pub rho_mu: TensorValue,
    /// Largest entry in the blocks that vanish structurally.
    pub structural_zero: f64,
    /// Largest `|Ω_ab + Ω_ba|`.
    pub antisymmetry: f64,
}

impl TractorCurvature {
    pub fn at(&self, a: usize, b: usize, i: usize, j: usize) -> f64 {
        let r = self.n + 2;
        self.full[((a * self.n + b) * r + i) * r + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.full.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }
}

/// Ω from the generic curvature of the tractor connection.
pub fn tractor_curvature(geom: &Geometry) -> Result<TractorCurvature> {
    if geom.order() < 3 {
        return Err(exhausted(3, geom.order()));
    }
    let n = geom.dim();
    let r = n + 2;
    let coeffs = TractorConnection { n }.coefficients(geom)?;
    let f = coeffs.curvature(geom)?;
    let mut full = vec![0.0; n * n * r * r];
    for a in 0..n {
        for b in 0..n {
            for i in 0..r {
                for j in 0..r {
                    full[((a * n + b) * r + i) * r + j] = f.at(a, b, i, j).value();
                }
            }
        }
    }
    Ok(curvature_blocks(n, full))
}

fn curvature_blocks(n: usize, full: Vec<f64>) -> TractorCurvature {
    let r = n + 2;
    let at = |a: usize, b: usize, i: usize, j: usize| full[((a * n + b) * r + i) * r + j];
    let mu_sigma = TensorValue::from_fn(n, &[Co, Co, Co], |x| at(x[0], x[1], 1 + x[2], 0));
    let mu_mu = TensorValue::from_fn(n, &[Co, Co, Co, Contra], |x| at(x[0], x[1], 1 + x[2], 1 + x[3]));
    let rho_mu = TensorValue::from_fn(n, &[Co, Co, Contra], |x| at(x[0], x[1], r - 1, 1 + x[2]));
    let mut structural_zero: f64 = 0.0;
    let mut antisymmetry: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for i in 0..r {
                for j in 0..r {
                    antisymmetry = antisymmetry.max(libm::fabs(at(a, b, i, j) + at(b, a, i, j)));
                    if !is_curvature_block(n, i, j) {
                        structural_zero = structural_zero.max(libm::fabs(at(a, b, i, j)));
                    }
                }
            }
        }
    }
    TractorCurvature { n, full, mu_sigma, mu_mu, rho_mu, structural_zero, antisymmetry }
}

fn is_curvature_block(n: usize, i: usize, j: usize) -> bool {
    let mu = |k: usize| (1..=n).contains(&k);
    (mu(i) && (j == 0 || mu(j))) || (i == n + 1 && mu(j))
}

/// `Ω_ab t` from the commutator of the slotwise connection formula.
pub fn curvature_by_commutator(geom: &Geometry, t: &TractorJet) -> Result<Vec<TractorValue>> {
    let n = geom.dim();
    let first = tractor_connection_apply(geom, t)?;
    let second: Vec<TractorOneForm> =
        (0..n).map(|b| tractor_connection_apply(geom, &first.slot(b))).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let ab = second[b].slot(a).value();
            let ba = second[a].slot(b).value();
            out.push(TractorValue {
                sigma: ab.sigma - ba.sigma,
                mu: ab.mu.iter().zip(&ba.mu).map(|(x, y)| x - y).collect(),
                rho: ab.rho - ba.rho,
            });
        }
    }
    Ok(out)
}

/// The divergence `∇^a Ω_ab` with every block.
#[derive(Debug, Clone)]
pub struct TractorDivergence {
    pub n: usize,
    /// Values at `[b][I][J]`.
    pub full: Vec<f64>,
    /// Row `μ_c`, column `σ`, stored at `[b][c]`.
    pub mu_sigma: TensorValue,
    /// Row `μ_c`, column `μ_e`, stored at `[b][c][e]`.
    pub mu_mu: TensorValue,
    /// Row `ρ`, column `μ_e`, stored at `[b][e]`.
    pub rho_mu: TensorValue,
    pub structural_zero: f64,
}

/// `∇^a Ω_ab` through the `End(T)` connection induced by the tractor connection.
pub fn tractor_curvature_divergence(geom: &Geometry) -> Result<TractorDivergence> {
    if geom.order() < 4 {
        return Err(exhausted(4, geom.order()));
    }
    let n = geom.dim();
    let r = n + 2;
    let coeffs = TractorConnection { n }.coefficients(geom)?;
    let f = coeffs.curvature(geom)?;
    let delta = twisted_delta(geom, &coeffs.end(), &f.form)?;
    let mut full = vec![0.0; n * r * r];
    for b in 0..n {
        for ij in 0..r * r {
            full[b * r * r + ij] = -delta.comps[ij].at(&[b]).value();
        }
    }
    let at = |b: usize, i: usize, j: usize| full[(b * r + i) * r + j];
    let mu_sigma = TensorValue::from_fn(n, &[Co, Co], |x| at(x[0], 1 + x[1], 0));
    let mu_mu = TensorValue::from_fn(n, &[Co, Co, Contra], |x| at(x[0], 1 + x[1], 1 + x[2]));
    let rho_mu = TensorValue::from_fn(n, &[Co, Contra], |x| at(x[0], r - 1, 1 + x[1]));
    let mut structural_zero: f64 = 0.0;
    for b in 0..n {
        for i in 0..r {
            for j in 0..r {
                if !is_curvature_block(n, i, j) {
                    structural_zero = structural_zero.max(libm::fabs(at(b, i, j)));
                }
            }
        }
    }
    Ok(TractorDivergence { n, full, mu_sigma, mu_mu, rho_mu, structural_zero })
}

/// Residuals of the divergence blocks against Bach and Cotton.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DivergenceResiduals {
    /// Row `μ_c`, column `σ` minus `B_cb`.
    pub bach_top: f64,
    /// Row `μ_c`, column `μ_e` minus `(n-4) A_bc^e`.
    pub cotton_middle: f64,
    /// Row `ρ`, column `μ_e` plus `B^e_b`.
    pub bach_bottom: f64,
    pub structural_zero: f64,
    /// Largest entry of the middle block.
    pub middle_size: f64,
}

/// Compares the divergence blocks with `B`, `(n-4)A` and `-B`.
pub fn divergence_residuals(geom: &Geometry, div: &TractorDivergence) -> Result<DivergenceResiduals> {
    let n = geom.dim();
    let bach = geom.bach()?;
    let cotton = geom.cotton()?;
    let b_mixed = geom.raise(&bach, 0).value();
    let a_mixed = geom.raise(&cotton, 2).value();
    let bv = bach.value();
    let k = n as f64 - 4.0;
    let mut res = DivergenceResiduals { structural_zero: div.structural_zero, ..Default::default() };
    for_each_index(n, 2, |x| {
        let (b, c) = (x[0], x[1]);
        res.bach_top = res.bach_top.max(libm::fabs(div.mu_sigma.at(&[b, c]) - bv.at(&[c, b])));
        res.bach_bottom = res.bach_bottom.max(libm::fabs(div.rho_mu.at(&[b, c]) + b_mixed.at(&[c, b])));
    });
    for_each_index(n, 3, |x| {
        let (b, c, e) = (x[0], x[1], x[2]);
        let want = k * a_mixed.at(&[b, c, e]);
        res.cotton_middle = res.cotton_middle.max(libm::fabs(div.mu_mu.at(&[b, c, e]) - want));
        res.middle_size = res.middle_size.max(libm::fabs(div.mu_mu.at(&[b, c, e])));
    });
    Ok(res)
}

/// `D*φ = ∇^a∇^b φ_ab + P^ab φ_ab`.
pub fn d_star(geom: &Geometry, phi: &JetTensor) -> Result<Jet> {
    let n = geom.dim();
    let dd = geom.covariant_derivative(&geom.covariant_derivative(phi)?)?;
    let gi = geom.inverse();
    let p_up = geom.raise(&geom.raise(geom.schouten()?, 0), 1);
    let mut s = Jet::zero(geom.space());
    for_each_index(n, 4, |x| {
        let (a, c, b, d) = (x[0], x[1], x[2], x[3]);
        s += gi.at(&[a, c]) * gi.at(&[b, d]) * dd.at(&[c, d, a, b]);
    });
    for_each_index(n, 2, |x| s += p_up.at(x) * phi.at(x));
    Ok(s)
}

/// `E*(α, ν, τ) = ν_(ab)₀ + (n-1)^{-1} ∇_(a α_b)₀`.
pub fn e_star(geom: &Geometry, form: &TractorOneForm) -> Result<JetTensor> {
    let n = geom.dim() as f64;
    let da = geom.covariant_derivative(&form.alpha)?;
    let sum = form.nu.add(&da.scale(1.0 / (n - 1.0)));
    Ok(geom.tfs(&sum))
}

/// `𝔻*(σ, μ, ρ) = ρ - ∇^a μ_a - (Δσ + Jσ)/n`.
pub fn bd_star(geom: &Geometry, t: &TractorJet) -> Result<Jet> {
    let n = geom.dim() as f64;
    let div = divergence(geom, &t.mu)?;
    let lap = geom.laplacian(&t.sigma)?;
    let j = geom.schouten_trace()?;
    Ok(&t.rho - div - (lap + j * &t.sigma).scale(1.0 / n))
}

/// `δ^∇ Φ = -∇^a Φ_a` with the tractor connection.
pub fn delta_tractor(geom: &Geometry, form: &TractorOneForm) -> Result<TractorJet> {
    let coeffs = TractorConnection { n: geom.dim() }.coefficients(geom)?;
    let out = twisted_delta(geom, &coeffs, &form.to_twisted())?;
    let s: Vec<Jet> = out.comps.iter().map(|c| c.at(&[]).clone()).collect();
    TractorJet::from_section(&s)
}

/// Conformal change of splitting from `g` to `ĝ = e^{2ω} g` in function
/// trivializations: `(e^ω σ, e^ω(μ + σΥ), e^{-ω}(ρ - g^{-1}(Υ, μ) - σ|Υ|²/2))`
/// with `Υ = dω`.
pub fn transform(geom: &Geometry, omega: &Jet, t: &TractorJet) -> Result<TractorJet> {
    let upsilon = geom.gradient(omega)?;
    transform_with(geom, omega, &upsilon, t)
}

fn transform_with(geom: &Geometry, omega: &Jet, upsilon: &JetTensor, t: &TractorJet) -> Result<TractorJet> {
    let n = geom.dim();
    let gi = geom.inverse();
    let e = omega.exp();
    let e_inv = (-omega).exp();
    let mut ups_mu = Jet::zero(geom.space());
    let mut ups_sq = Jet::zero(geom.space());
    for a in 0..n {
        for b in 0..n {
            ups_mu += gi.at(&[a, b]) * upsilon.at(&[a]) * t.mu.at(&[b]);
            ups_sq += gi.at(&[a, b]) * upsilon.at(&[a]) * upsilon.at(&[b]);
        }
    }
    TractorJet::new(
        &e * &t.sigma,
        JetTensor::from_fn(n, &[Co], |i| &e * (t.mu.at(i) + &t.sigma * upsilon.at(i))),
        e_inv * (&t.rho - ups_mu - (&t.sigma * ups_sq).scale(0.5)),
    )
}

/// [`transform`] applied to each form slot of a tractor-valued 1-form.
pub fn transform_one_form(geom: &Geometry, omega: &Jet, form: &TractorOneForm) -> Result<TractorOneForm> {
    let upsilon = geom.gradient(omega)?;
    let slots: Vec<TractorJet> =
        (0..geom.dim()).map(|a| transform_with(geom, omega, &upsilon, &form.slot(a))).collect::<Result<_>>()?;
    Ok(TractorOneForm::from_slots(&slots))
}
