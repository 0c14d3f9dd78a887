//! Detour-complex operators and composition certificates.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::connection::{
    exterior_action, interior_action, op_m, twisted_d, twisted_delta, ym_current, Connection, LeviCivitaForms,
    LeviCivitaT2, TrivialConnection, TwistedForm,
};
use crate::error::{exhausted, usage, Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::metricdsl::MetricSpec;
use crate::riemann::Geometry;
use crate::sampling::{random_chart_jet, random_tensor, substream};
use crate::tensor::{for_each_index, Co, Contra, JetTensor};
use crate::tractor::{d_star, e_star, op_d, op_e, TractorConnection, TractorOneForm};

pub use crate::connection::{ConnectionCoefficients, CurvatureF, PolynomialConnection};

/// `M^T ψ = E* M^∇ E ψ` with the tractor connection.
pub fn op_mt(geom: &Geometry, psi: &JetTensor) -> Result<JetTensor> {
    let conn = TractorConnection { n: geom.dim() };
    let coeffs = conn.coefficients(geom)?;
    let f = coeffs.curvature(geom)?;
    let e = op_e(geom, psi)?;
    let m = op_m(geom, &coeffs, &f, &e.to_twisted())?;
    e_star(geom, &TractorOneForm::from_twisted(&m)?)
}

/// `-TFS(B_ab σ - (n-4) A_abc ∇^c σ)`.
pub fn mp_rhs(geom: &Geometry, sigma: &Jet) -> Result<JetTensor> {
    mp_rhs_with(geom, sigma, geom.dim() as f64 - 4.0)
}

/// `-TFS(B_ab σ - k A_abc ∇^c σ)` for an arbitrary Cotton coefficient `k`.
pub fn mp_rhs_with(geom: &Geometry, sigma: &Jet, k: f64) -> Result<JetTensor> {
    let n = geom.dim();
    let b = geom.bach()?;
    let a = geom.cotton()?;
    let grad_up = geom.raise(&geom.gradient(sigma)?, 0);
    let t = JetTensor::from_fn(n, &[Co, Co], |i| {
        let mut s = b.at(i) * sigma;
        if k != 0.0 {
            for c in 0..n {
                s -= (a.at(&[i[0], i[1], c]) * grad_up.at(&[c])).scale(k);
            }
        }
        s
    });
    Ok(geom.tfs(&t).scale(-1.0))
}

/// Formal adjoint of `σ ↦ mp_rhs(σ)`: `-B^ab ψ_ab - (n-4) ∇^c(A_abc ψ^ab)`.
pub fn mp_rhs_adjoint(geom: &Geometry, psi: &JetTensor) -> Result<Jet> {
    let n = geom.dim();
    let b = geom.bach()?;
    let a = geom.cotton()?;
    let psi_up = geom.raise(&geom.raise(psi, 0), 1);
    let k = n as f64 - 4.0;
    let mut out = Jet::zero(geom.space());
    for_each_index(n, 2, |i| out -= b.at(i) * psi_up.at(i));
    if k != 0.0 {
        let w = JetTensor::from_fn(n, &[Co], |c| {
            let mut s = Jet::zero(geom.space());
            for_each_index(n, 2, |i| s += a.at(&[i[0], i[1], c[0]]) * psi_up.at(i));
            s
        });
        let dw = geom.covariant_derivative(&w)?;
        out -= geom.trace(&dw).scale(k);
    }
    Ok(out)
}

/// `M` on `T²`-valued 1-forms written out with the Levi-Civita connection:
/// `(MS)_b^{cd} = -2∇^a∇_[a S_b]^{cd} - R_ba^c_e S^{aed} - R_ba^d_e S^{ace}`.
///
/// `s` is stored at `[b][c][d]`.
pub fn t2_m_explicit(geom: &Geometry, s: &JetTensor) -> Result<JetTensor> {
    let n = geom.dim();
    if s.slots() != [Co, Contra, Contra] {
        return Err(usage("expected a tensor S_b^{cd}"));
    }
    let dd = geom.covariant_derivative(&geom.covariant_derivative(s)?)?;
    let gi = geom.inverse();
    let r = geom.riemann()?;
    let s_up = geom.raise(s, 0);
    let sp = geom.space();
    Ok(JetTensor::from_fn(n, &[Co, Contra, Contra], |i| {
        let (b, c, d) = (i[0], i[1], i[2]);
        let mut out = Jet::zero(sp);
        for f in 0..n {
            for a in 0..n {
                out -= gi.at(&[f, a]) * (dd.at(&[f, a, b, c, d]) - dd.at(&[f, b, a, c, d]));
            }
        }
        for a in 0..n {
            for e in 0..n {
                out -= r.at(&[b, a, c, e]) * s_up.at(&[a, e, d]);
                out -= r.at(&[b, a, d, e]) * s_up.at(&[a, c, e]);
            }
        }
        out
    }))
}

/// Packs `S_b^{cd}` as a `T²`-valued 1-form.
pub fn t2_to_twisted(s: &JetTensor) -> TwistedForm {
    let n = s.n();
    let comps = (0..n * n).map(|cd| JetTensor::from_fn(n, &[Co], |b| s.at(&[b[0], cd / n, cd % n]).clone())).collect();
    TwistedForm { degree: 1, comps }
}

pub fn t2_from_twisted(f: &TwistedForm) -> JetTensor {
    let n = f.comps[0].n();
    JetTensor::from_fn(n, &[Co, Contra, Contra], |i| f.comps[i[1] * n + i[2]].at(&[i[0]]).clone())
}

/// Conformal Killing operator `K₀v = TF(∇_(a v_b))`, `v` a vector field.
pub fn op_k0(geom: &Geometry, v: &JetTensor) -> Result<JetTensor> {
    if v.slots() != [Contra] {
        return Err(usage("K₀ acts on vector fields"));
    }
    let dv = geom.covariant_derivative(&geom.lower(v, 0))?;
    Ok(geom.tfs(&dv))
}

/// Formal adjoint of [`op_k0`] on trace-free symmetric tensors: `-∇^a ψ_ab`.
pub fn op_k0_star(geom: &Geometry, psi: &JetTensor) -> Result<JetTensor> {
    let n = geom.dim();
    let d = geom.covariant_derivative(psi)?;
    let gi = geom.inverse();
    Ok(JetTensor::from_fn(n, &[Co], |b| {
        let mut s = Jet::zero(geom.space());
        for c in 0..n {
            for a in 0..n {
                s -= gi.at(&[c, a]) * d.at(&[c, a, b[0]]);
            }
        }
        s
    }))
}

/// `d/dε Bach(g + εh)` at `ε = 0`, with `ε` the first auxiliary jet variable of
/// `space`. Only defined in dimension 4.
pub fn linearized_bach(spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>, h: &JetTensor) -> Result<JetTensor> {
    if spec.dim != 4 {
        return Err(usage(format!("linearized Bach is implemented in dimension 4, got {}", spec.dim)));
    }
    if space.aux() == 0 {
        return Err(usage("linearized Bach needs a jet space with an auxiliary variable"));
    }
    if h.slots() != [Co, Co] || h.n() != 4 {
        return Err(usage("h must be a covariant 2-tensor"));
    }
    let coords = spec.coordinate_jets(point, space)?;
    let eps = Jet::aux_variable(space, 0);
    let metric = JetTensor::try_from_fn(4, &[Co, Co], |i| {
        let sym = (h.at(i) + h.at(&[i[1], i[0]])).scale(0.5);
        Ok::<_, Error>(spec.eval_component_with(i[0], i[1], &coords)? + &eps * sym)
    })?;
    let geom = Geometry::from_metric(metric, point)?;
    let b = geom.bach()?;
    Ok(b.map(|j| j.aux_coefficient(0)))
}

/// Which detour sequence a certificate is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sequence {
    /// `d`, `δd`, `δ` on scalar-valued forms in dimension 4.
    Maxwell,
    /// Twisted sequence for the Levi-Civita connection on a tensor bundle.
    YmTwisted(Bundle),
    /// `D`, `M^T`, `D*`.
    TractorEinstein,
    /// `K₀`, `B`, `K₀*` in dimension 4.
    Deformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    Forms,
    T2,
}

impl Sequence {
    pub fn id(&self) -> &'static str {
        match self {
            Sequence::Maxwell => "maxwell",
            Sequence::YmTwisted(Bundle::Forms) => "ym-twisted(forms)",
            Sequence::YmTwisted(Bundle::T2) => "ym-twisted(T2)",
            Sequence::TractorEinstein => "tractor-einstein",
            Sequence::Deformation => "deformation-dim4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "maxwell" => Sequence::Maxwell,
            "ym-twisted(forms)" | "ym-twisted(lambda1)" => Sequence::YmTwisted(Bundle::Forms),
            "ym-twisted(T2)" => Sequence::YmTwisted(Bundle::T2),
            "tractor-einstein" => Sequence::TractorEinstein,
            "deformation-dim4" => Sequence::Deformation,
            _ => return Err(usage(format!("unknown sequence `{s}`"))),
        })
    }

    /// Metric jet order needed for the certificate.
    pub fn required_order(&self) -> usize {
        match self {
            Sequence::Maxwell => 3,
            Sequence::YmTwisted(_) => 4,
            Sequence::TractorEinstein => 6,
            Sequence::Deformation => 5,
        }
    }
}

/// Outcome of [`check_complex`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub sequence: String,
    pub metric: String,
    pub points: usize,
    /// Max residual of the middle-after-first composition.
    pub first: f64,
    /// Max residual of the last-after-middle composition.
    pub second: f64,
    /// Max of the background obstruction (`‖δF‖` or `‖B‖`).
    pub background: f64,
    /// Whether the background condition holds at tolerance.
    pub expected_complex: bool,
    /// Max deviation of both compositions from their predicted values, when
    /// the theory supplies a prediction.
    pub prediction_error: Option<f64>,
    pub tol: f64,
}

impl CertificateReport {
    /// Compositions vanish when expected to, and otherwise match the predicted
    /// obstruction with a residual above tolerance.
    pub fn consistent(&self) -> bool {
        let pred_ok = self.prediction_error.is_none_or(|e| e <= self.tol);
        if self.expected_complex {
            self.first <= self.tol && self.second <= self.tol && pred_ok
        } else {
            self.first.max(self.second) > self.tol && pred_ok
        }
    }
}

/// Evaluates both compositions of `seq` at `points` on random sections.
pub fn check_complex(
    seq: Sequence,
    spec: &MetricSpec,
    points: &[Vec<f64>],
    order: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    let n = spec.dim;
    let needs_dim4 = matches!(seq, Sequence::Maxwell | Sequence::Deformation);
    if needs_dim4 && n != 4 {
        return Err(usage(format!("sequence {} is defined in dimension 4 only", seq.id())));
    }
    if n < 3 {
        return Err(usage("detour sequences need dimension at least 3"));
    }
    if order < seq.required_order() {
        return Err(exhausted(seq.required_order(), order));
    }
    let mut rep = CertificateReport {
        sequence: String::from(seq.id()),
        metric: spec.label.clone(),
        points: points.len(),
        first: 0.0,
        second: 0.0,
        background: 0.0,
        expected_complex: false,
        prediction_error: None,
        tol,
    };
    let mut pred: Option<f64> = None;
    let bump = |slot: &mut Option<f64>, v: f64| *slot = Some(slot.unwrap_or(0.0).max(v));
    for (k, p) in points.iter().enumerate() {
        let mut rng = substream(seed, k as u64);
        match seq {
            Sequence::Maxwell | Sequence::YmTwisted(_) => {
                let space = JetSpace::new(n, order);
                let geom = Geometry::new(spec, p, &space)?;
                let conn: alloc::boxed::Box<dyn Connection> = match seq {
                    Sequence::Maxwell => alloc::boxed::Box::new(TrivialConnection { rank: 1 }),
                    Sequence::YmTwisted(Bundle::Forms) => alloc::boxed::Box::new(LeviCivitaForms { n }),
                    _ => alloc::boxed::Box::new(LeviCivitaT2 { n }),
                };
                let r = conn.rank();
                let coeffs = conn.coefficients(&geom)?;
                let f = coeffs.curvature(&geom)?;
                let current = ym_current(&geom, &coeffs, &f)?;
                rep.background = rep.background.max(current.max_abs_value());
                let s = TwistedForm::section((0..r).map(|_| random_chart_jet(&space, 1.0, &mut rng)).collect());
                let phi = TwistedForm { degree: 1, comps: (0..r).map(|_| random_tensor(&space, n, &[Co], 1.0, &mut rng)).collect() };
                let mdf = op_m(&geom, &coeffs, &f, &twisted_d(&geom, &coeffs, &s)?)?;
                let dm = twisted_delta(&geom, &coeffs, &op_m(&geom, &coeffs, &f, &phi)?)?;
                rep.first = rep.first.max(mdf.max_abs_value());
                rep.second = rep.second.max(dm.max_abs_value());
                let e1 = mdf.sub(&exterior_action(&current, r, &s)?).max_abs_value();
                let e2 = dm.add(&interior_action(&geom, &current, r, &phi)?).max_abs_value();
                bump(&mut pred, e1.max(e2));
            }
            Sequence::TractorEinstein => {
                let space = JetSpace::new(n, order);
                let geom = Geometry::new(spec, p, &space)?;
                rep.background = rep.background.max(geom.bach()?.value().max_abs());
                let sigma = random_chart_jet(&space, 1.0, &mut rng);
                let first = op_mt(&geom, &op_d(&geom, &sigma)?)?;
                let want = mp_rhs(&geom, &sigma)?;
                let raw = random_tensor(&space, n, &[Co, Co], 1.0, &mut rng);
                let psi = geom.tfs(&raw);
                let second = d_star(&geom, &op_mt(&geom, &psi)?)?;
                let want2 = mp_rhs_adjoint(&geom, &psi)?;
                rep.first = rep.first.max(first.value().max_abs());
                rep.second = rep.second.max(libm::fabs(second.value()));
                let e1 = first.value().max_diff(&want.value());
                let e2 = libm::fabs(second.value() - want2.value());
                bump(&mut pred, e1.max(e2));
            }
            Sequence::Deformation => {
                let plain = JetSpace::new(n, order);
                let geom = Geometry::new(spec, p, &plain)?;
                rep.background = rep.background.max(geom.bach()?.value().max_abs());
                let space = JetSpace::with_aux(n, 1, order);
                let aux_geom = Geometry::new(spec, p, &space)?;
                let v = random_tensor(&space, n, &[Contra], 1.0, &mut rng);
                let k0v = op_k0(&aux_geom, &v)?;
                let bk = linearized_bach(spec, p, &space, &k0v)?;
                let raw = random_tensor(&space, n, &[Co, Co], 1.0, &mut rng);
                let h = aux_geom.tfs(&raw);
                let kb = op_k0_star(&aux_geom, &linearized_bach(spec, p, &space, &h)?)?;
                rep.first = rep.first.max(bk.value().max_abs());
                rep.second = rep.second.max(kb.value().max_abs());
            }
        }
    }
    rep.expected_complex = rep.background <= tol;
    rep.prediction_error = pred;
    Ok(rep)
}
