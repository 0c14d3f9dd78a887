//! Pointwise Riemannian geometry from metric jets.
//!
//! Conventions: `Γ^c_ab` is stored at `[c][a][b]`; the curvature
//! `R_ab^c_d` (stored at `[a][b][c][d]`) satisfies
//! `[∇_a, ∇_b] v^c = R_ab^c_d v^d`; the lowered tensor is
//! `R_abcd = g_ce R_ab^e_d`. Ricci is `Ric_bd = R_ab^a_d`, the Schouten tensor
//! is `P = (Ric - Sc/(2(n-1)) g)/(n-2)` and `J = g^ab P_ab`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{exhausted, usage, Error, Result};
use crate::jet::{jet_sum, ElemFn, Jet, JetSpace};
use crate::metricdsl::{BinOp, Expr, MetricSpec};
use crate::tensor::{for_each_index, Co, Contra, JetTensor, TensorValue, Variance};

/// Minimum metric jet order for each derived quantity.
pub mod required_order {
    pub const CHRISTOFFEL: usize = 1;
    pub const RIEMANN: usize = 2;
    pub const COTTON: usize = 3;
    pub const BACH: usize = 4;
}

/// Everything the engine knows about a metric at one point.
#[derive(Debug, Clone)]
pub struct Geometry {
    n: usize,
    point: Vec<f64>,
    space: Arc<JetSpace>,
    metric: JetTensor,
    inverse: JetTensor,
    christoffel: JetTensor,
    riemann: Option<JetTensor>,
    ricci: Option<JetTensor>,
    scalar: Option<Jet>,
    schouten: Option<JetTensor>,
    j: Option<Jet>,
    /// Set when the evaluated signature disagrees with the declared one.
    pub signature_warning: Option<String>,
}

impl Geometry {
    /// Evaluates `spec` at `point` with jets from `space`.
    pub fn new(spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>) -> Result<Self> {
        let coords = spec.coordinate_jets(point, space)?;
        let n = spec.dim;
        let metric = JetTensor::try_from_fn(n, &[Co, Co], |i| spec.eval_component_with(i[0], i[1], &coords))?;
        let mut geom = Self::from_metric(metric, point)?;
        geom.signature_warning = signature_mismatch(&geom.metric.value(), &spec.signature);
        Ok(geom)
    }

    /// Builds the geometry from the jets of `g_ab` directly.
    pub fn from_metric(metric: JetTensor, point: &[f64]) -> Result<Self> {
        let n = metric.n();
        if metric.slots() != [Co, Co] {
            return Err(usage("metric must be a covariant 2-tensor"));
        }
        if point.len() != n {
            return Err(usage(format!("point has {} coordinates, metric has dimension {n}", point.len())));
        }
        let space = metric.space().clone();
        if space.vars() < n {
            return Err(Error::DimensionMismatch(space.vars(), n));
        }
        if metric.order() < required_order::CHRISTOFFEL {
            return Err(exhausted(required_order::CHRISTOFFEL, metric.order()));
        }
        let inverse = invert(&metric)?;
        let christoffel = christoffel_from(&metric, &inverse)?;
        let mut geom = Geometry {
            n,
            point: point.to_vec(),
            space,
            metric,
            inverse,
            christoffel,
            riemann: None,
            ricci: None,
            scalar: None,
            schouten: None,
            j: None,
            signature_warning: None,
        };
        if geom.metric.order() >= required_order::RIEMANN {
            geom.fill_curvature()?;
        }
        Ok(geom)
    }

    fn fill_curvature(&mut self) -> Result<()> {
        let n = self.n;
        let g = &self.christoffel;
        let dgamma = self.partials(g)?;
        let riemann = JetTensor::from_fn(n, &[Co, Co, Contra, Co], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut r = dgamma.at(&[a, c, b, d]) - dgamma.at(&[b, c, a, d]);
            for e in 0..n {
                r += g.at(&[c, a, e]) * g.at(&[e, b, d]);
                r -= g.at(&[c, b, e]) * g.at(&[e, a, d]);
            }
            r
        });
        let ricci = JetTensor::from_fn(n, &[Co, Co], |i| jet_sum(&self.space, (0..n).map(|a| riemann.at(&[a, i[0], a, i[1]]).clone())));
        let scalar = self.trace(&ricci);
        if n >= 3 {
            let nf = n as f64;
            let k = scalar.scale(1.0 / (2.0 * (nf - 1.0)));
            let schouten = JetTensor::from_fn(n, &[Co, Co], |i| {
                (ricci.at(i) - &k * self.metric.at(i)).scale(1.0 / (nf - 2.0))
            });
            self.j = Some(self.trace(&schouten));
            self.schouten = Some(schouten);
        }
        self.riemann = Some(riemann);
        self.ricci = Some(ricci);
        self.scalar = Some(scalar);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn metric(&self) -> &JetTensor {
        &self.metric
    }

    pub fn inverse(&self) -> &JetTensor {
        &self.inverse
    }

    pub fn christoffel(&self) -> &JetTensor {
        &self.christoffel
    }

    /// Jet order of the metric this geometry was built from.
    pub fn order(&self) -> usize {
        self.metric.order()
    }

    fn need(&self, needed: usize) -> Result<()> {
        if self.order() < needed {
            Err(exhausted(needed, self.order()))
        } else {
            Ok(())
        }
    }

    pub fn riemann(&self) -> Result<&JetTensor> {
        self.riemann.as_ref().ok_or_else(|| exhausted(required_order::RIEMANN, self.order()))
    }

    /// `R_abcd`, all indices down.
    pub fn riemann_lowered(&self) -> Result<JetTensor> {
        let r = self.riemann()?;
        Ok(self.lower(r, 2))
    }

    pub fn ricci(&self) -> Result<&JetTensor> {
        self.ricci.as_ref().ok_or_else(|| exhausted(required_order::RIEMANN, self.order()))
    }

    pub fn scalar_curvature(&self) -> Result<&Jet> {
        self.scalar.as_ref().ok_or_else(|| exhausted(required_order::RIEMANN, self.order()))
    }

    pub fn schouten(&self) -> Result<&JetTensor> {
        if self.n < 3 {
            return Err(usage("the Schouten tensor needs dimension at least 3"));
        }
        self.schouten.as_ref().ok_or_else(|| exhausted(required_order::RIEMANN, self.order()))
    }

    /// `J = g^ab P_ab`.
    pub fn schouten_trace(&self) -> Result<&Jet> {
        self.schouten()?;
        Ok(self.j.as_ref().unwrap())
    }

    /// Weyl tensor `C_abcd` (all indices down).
    pub fn weyl(&self) -> Result<JetTensor> {
        let r = self.riemann_lowered()?;
        let p = self.schouten()?;
        let g = &self.metric;
        Ok(JetTensor::from_fn(self.n, &[Co, Co, Co, Co], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            r.at(i) - schouten_part(g, p, a, b, c, d)
        }))
    }

    /// Cotton tensor `A_abc = ∇_b P_ca - ∇_c P_ba`.
    pub fn cotton(&self) -> Result<JetTensor> {
        self.need(required_order::COTTON)?;
        let dp = self.covariant_derivative(self.schouten()?)?;
        Ok(JetTensor::from_fn(self.n, &[Co, Co, Co], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            dp.at(&[b, c, a]) - dp.at(&[c, b, a])
        }))
    }

    /// Bach tensor `B_ab = ∇^c A_acb + P^dc C_dacb`.
    pub fn bach(&self) -> Result<JetTensor> {
        self.need(required_order::BACH)?;
        let a = self.cotton()?;
        let c = self.weyl()?;
        self.bach_from(&a, &c)
    }

    fn bach_from(&self, cotton: &JetTensor, weyl: &JetTensor) -> Result<JetTensor> {
        let n = self.n;
        let da = self.covariant_derivative(cotton)?;
        let p_up = self.raise(&self.raise(self.schouten()?, 0), 1);
        let gi = &self.inverse;
        Ok(JetTensor::from_fn(n, &[Co, Co], |i| {
            let (a, b) = (i[0], i[1]);
            let mut s = Jet::zero(&self.space);
            for c in 0..n {
                for e in 0..n {
                    s += gi.at(&[c, e]) * da.at(&[e, a, c, b]);
                }
                for d in 0..n {
                    s += p_up.at(&[d, c]) * weyl.at(&[d, a, c, b]);
                }
            }
            s
        }))
    }

    /// Jets of all coordinate partials: output slot 0 is the derivative index.
    pub fn partials(&self, t: &JetTensor) -> Result<JetTensor> {
        let n = self.n;
        let mut slots = vec![Co];
        slots.extend_from_slice(t.slots());
        JetTensor::try_from_fn(n, &slots, |i| t.at(&i[1..]).partial(i[0])).map(|x| x.with_weight(t.weight))
    }

    /// Levi-Civita covariant derivative; the new covariant slot comes first.
    pub fn covariant_derivative(&self, t: &JetTensor) -> Result<JetTensor> {
        covariant_derivative(t, &self.christoffel)
    }

    /// Raises slot `slot` (must be covariant) with `g^{-1}`.
    pub fn raise(&self, t: &JetTensor, slot: usize) -> JetTensor {
        self.change_variance(t, slot, Contra, &self.inverse)
    }

    /// Lowers slot `slot` (must be contravariant) with `g`.
    pub fn lower(&self, t: &JetTensor, slot: usize) -> JetTensor {
        self.change_variance(t, slot, Co, &self.metric)
    }

    fn change_variance(&self, t: &JetTensor, slot: usize, to: Variance, m: &JetTensor) -> JetTensor {
        assert_ne!(t.slots()[slot], to, "slot already has the requested variance");
        let n = self.n;
        let mut slots = t.slots().to_vec();
        slots[slot] = to;
        let mut src = vec![0usize; t.rank()];
        JetTensor::from_fn(n, &slots, |i| {
            src.copy_from_slice(i);
            jet_sum(
                &self.space,
                (0..n).map(|e| {
                    src[slot] = e;
                    m.at(&[i[slot], e]) * t.at(&src)
                }),
            )
        })
        .with_weight(t.weight)
    }

    /// Metric trace of a covariant 2-tensor.
    pub fn trace(&self, t: &JetTensor) -> Jet {
        let n = self.n;
        let gi = &self.inverse;
        let mut s = Jet::zero(&self.space);
        for a in 0..n {
            for b in 0..n {
                s += gi.at(&[a, b]) * t.at(&[a, b]);
            }
        }
        s
    }

    /// Trace-free part `t - (tr t / n) g` of a covariant 2-tensor.
    pub fn trace_free(&self, t: &JetTensor) -> JetTensor {
        let tr = self.trace(t).scale(1.0 / self.n as f64);
        let g = &self.metric;
        JetTensor::from_fn(self.n, &[Co, Co], |i| t.at(i) - &tr * g.at(i))
    }

    /// Trace-free symmetric part of a covariant 2-tensor.
    pub fn tfs(&self, t: &JetTensor) -> JetTensor {
        let sym = JetTensor::from_fn(self.n, &[Co, Co], |i| (t.at(i) + t.at(&[i[1], i[0]])).scale(0.5));
        self.trace_free(&sym)
    }

    /// `g^ab ∇_a ∇_b f` for a scalar jet.
    pub fn laplacian(&self, f: &Jet) -> Result<Jet> {
        let hess = self.hessian(f)?;
        Ok(self.trace(&hess))
    }

    /// `∇_a ∇_b f`.
    pub fn hessian(&self, f: &Jet) -> Result<JetTensor> {
        let df = self.gradient(f)?;
        self.covariant_derivative(&df)
    }

    pub fn gradient(&self, f: &Jet) -> Result<JetTensor> {
        JetTensor::try_from_fn(self.n, &[Co], |i| f.partial(i[0]))
    }

    /// All curvature quantities evaluated at the base point.
    pub fn curvature_pack(&self) -> Result<CurvaturePack> {
        self.need(required_order::BACH)?;
        let cotton = self.cotton()?;
        let weyl = self.weyl()?;
        let bach = self.bach_from(&cotton, &weyl)?;
        Ok(CurvaturePack {
            metric: self.metric.value(),
            inverse: self.inverse.value(),
            riemann: self.riemann()?.value(),
            riemann_lowered: self.riemann_lowered()?.value(),
            ricci: self.ricci()?.value(),
            scalar: self.scalar_curvature()?.value(),
            schouten: self.schouten()?.value(),
            j: self.schouten_trace()?.value(),
            weyl: weyl.value(),
            cotton: cotton.value(),
            bach: bach.value(),
        })
    }
}

fn signature_mismatch(g: &TensorValue, declared: &[i8]) -> Option<String> {
    let n = g.n;
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g.at(&[i, j]));
    let eig = m.symmetric_eigen();
    let pos = eig.eigenvalues.iter().filter(|&&v| v > 0.0).count();
    let want = declared.iter().filter(|&&s| s > 0).count();
    (pos != want || declared.len() != n).then(|| {
        format!("declared {want} positive directions, metric has {pos} at this point")
    })
}

/// `2g_{c[a}P_{b]d} + 2g_{d[b}P_{a]c}`.
fn schouten_part(g: &JetTensor, p: &JetTensor, a: usize, b: usize, c: usize, d: usize) -> Jet {
    g.at(&[c, a]) * p.at(&[b, d]) - g.at(&[c, b]) * p.at(&[a, d]) + g.at(&[d, b]) * p.at(&[a, c])
        - g.at(&[d, a]) * p.at(&[b, c])
}

/// Gauss-Jordan inversion over jets with partial pivoting on the values.
fn invert(m: &JetTensor) -> Result<JetTensor> {
    let n = m.n();
    let space = m.space().clone();
    let mut a: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| m.at(&[i, j]).clone()).collect()).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(&space, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m.value().max_abs();
    if scale == 0.0 {
        return Err(Error::Singular(String::from("metric vanishes at this point")));
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| libm::fabs(a[x][col].value()).total_cmp(&libm::fabs(a[y][col].value())))
            .unwrap();
        if libm::fabs(a[piv][col].value()) <= 1e-13 * scale {
            return Err(Error::Singular(String::from("metric is not invertible at this point")));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for j in 0..n {
                let t = &f * &a[col][j];
                a[row][j] -= t;
                let t = &f * &inv[col][j];
                inv[row][j] -= t;
            }
        }
    }
    Ok(JetTensor::from_fn(n, &[Contra, Contra], |i| inv[i[0]][i[1]].clone()))
}

fn christoffel_from(metric: &JetTensor, inverse: &JetTensor) -> Result<JetTensor> {
    let n = metric.n();
    let space = metric.space().clone();
    let dg = JetTensor::try_from_fn(n, &[Co, Co, Co], |i| metric.at(&i[1..]).partial(i[0]))?;
    Ok(JetTensor::from_fn(n, &[Contra, Co, Co], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        jet_sum(
            &space,
            (0..n).map(|d| inverse.at(&[c, d]) * (dg.at(&[a, d, b]) + dg.at(&[b, d, a]) - dg.at(&[d, a, b]))),
        )
        .scale(0.5)
    }))
}

/// Levi-Civita connection coefficients of `spec` at `point`.
pub fn christoffel(spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>) -> Result<JetTensor> {
    Ok(Geometry::new(spec, point, space)?.christoffel)
}

/// Curvature pack of `spec` at `point`.
pub fn curvature_pack(spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>) -> Result<CurvaturePack> {
    Geometry::new(spec, point, space)?.curvature_pack()
}

/// Covariant derivative with respect to a torsion-free connection with
/// coefficients `gamma` (`Γ^c_ab` at `[c][a][b]`).
pub fn covariant_derivative(t: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    let n = t.n();
    if t.order() == 0 {
        return Err(exhausted(1, 0));
    }
    let mut slots = vec![Co];
    slots.extend_from_slice(t.slots());
    let rank = t.rank();
    let mut src = vec![0usize; rank];
    JetTensor::try_from_fn(n, &slots, |i| {
        let a = i[0];
        let idx = &i[1..];
        let mut out = t.at(idx).partial(a)?;
        for s in 0..rank {
            src.copy_from_slice(idx);
            let fixed = idx[s];
            for e in 0..n {
                src[s] = e;
                match t.slots()[s] {
                    Contra => out += gamma.at(&[fixed, a, e]) * t.at(&src),
                    Co => out -= gamma.at(&[e, a, fixed]) * t.at(&src),
                }
            }
        }
        Ok(out)
    })
    .map(|r| r.with_weight(t.weight))
}

/// Connection coefficients of `∇̂_a u_b = ∇_a u_b - Υ_a u_b - Υ_b u_a`.
pub fn projective_change(gamma: &JetTensor, upsilon: &JetTensor) -> Result<JetTensor> {
    let n = gamma.n();
    if upsilon.n() != n || upsilon.slots() != [Co] {
        return Err(usage("Υ must be a covector on the same chart"));
    }
    Ok(JetTensor::from_fn(n, &[Contra, Co, Co], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        let mut g = gamma.at(i).clone();
        if c == a {
            g += upsilon.at(&[b]);
        }
        if c == b {
            g += upsilon.at(&[a]);
        }
        g
    }))
}

/// The metric `e^{2ω} g`.
pub fn conformal_rescale(spec: &MetricSpec, omega: &Expr) -> Result<MetricSpec> {
    if let Some(k) = omega.max_coord() {
        if k >= spec.dim {
            return Err(usage("ω references a coordinate outside the chart"));
        }
    }
    let factor = Expr::func(ElemFn::Exp, Expr::binary(BinOp::Mul, Expr::Const(2.0), omega.clone()));
    let mut out = MetricSpec::new(
        format!("exp(2*({})) * {}", omega.display(&spec.coords), spec.label),
        spec.signature.clone(),
        spec.coords.clone(),
    );
    for i in 0..spec.dim {
        for j in i..spec.dim {
            if let Some(e) = spec.component(i, j) {
                out.set(i, j, Expr::binary(BinOp::Mul, factor.clone(), e.clone()));
            }
        }
    }
    Ok(out)
}

/// Curvature quantities at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePack {
    pub metric: TensorValue,
    pub inverse: TensorValue,
    /// `R_ab^c_d`.
    pub riemann: TensorValue,
    /// `R_abcd`.
    pub riemann_lowered: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
    pub schouten: TensorValue,
    pub j: f64,
    pub weyl: TensorValue,
    pub cotton: TensorValue,
    pub bach: TensorValue,
}

/// Residuals of the algebraic identities a curvature pack must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PackResiduals {
    /// `Ric - (n-2)P - J g`.
    pub ricci_schouten: f64,
    /// `J - tr P`.
    pub j_trace: f64,
    /// Largest trace of `C` over any index pair.
    pub weyl_trace: f64,
    /// `A_abc + A_acb`.
    pub cotton_antisymmetry: f64,
    pub bach_symmetry: f64,
    pub bach_trace: f64,
    /// `R_abcd - [C + 2g_{c[a}P_{b]d} + 2g_{d[b}P_{a]c}]`.
    pub decomposition: f64,
    /// `R_[abc]d`.
    pub first_bianchi: f64,
    /// Antisymmetry in each pair and pair exchange.
    pub riemann_symmetries: f64,
}

impl CurvaturePack {
    pub fn dim(&self) -> usize {
        self.metric.n
    }

    pub fn residuals(&self) -> PackResiduals {
        let n = self.dim();
        let g = |a, b| self.metric.at(&[a, b]);
        let gi = |a, b| self.inverse.at(&[a, b]);
        let p = |a, b| self.schouten.at(&[a, b]);
        let r = |a, b, c, d| self.riemann_lowered.at(&[a, b, c, d]);
        let c = |a, b, cc, d| self.weyl.at(&[a, b, cc, d]);
        let nf = n as f64;
        let mut res = PackResiduals::default();
        let upd = |m: &mut f64, v: f64| *m = m.max(libm::fabs(v));

        let mut tr_p = 0.0;
        for a in 0..n {
            for b in 0..n {
                tr_p += gi(a, b) * p(a, b);
                upd(&mut res.ricci_schouten, self.ricci.at(&[a, b]) - (nf - 2.0) * p(a, b) - self.j * g(a, b));
                upd(&mut res.bach_symmetry, self.bach.at(&[a, b]) - self.bach.at(&[b, a]));
            }
        }
        res.j_trace = libm::fabs(self.j - tr_p);
        let mut tr_b = 0.0;
        for a in 0..n {
            for b in 0..n {
                tr_b += gi(a, b) * self.bach.at(&[a, b]);
            }
        }
        res.bach_trace = libm::fabs(tr_b);

        for_each_index(n, 4, |i| {
            let (a, b, cc, d) = (i[0], i[1], i[2], i[3]);
            let sp = g(cc, a) * p(b, d) - g(cc, b) * p(a, d) + g(d, b) * p(a, cc) - g(d, a) * p(b, cc);
            upd(&mut res.decomposition, r(a, b, cc, d) - c(a, b, cc, d) - sp);
            upd(&mut res.first_bianchi, r(a, b, cc, d) + r(b, cc, a, d) + r(cc, a, b, d));
            upd(&mut res.riemann_symmetries, r(a, b, cc, d) + r(b, a, cc, d));
            upd(&mut res.riemann_symmetries, r(a, b, cc, d) + r(a, b, d, cc));
            upd(&mut res.riemann_symmetries, r(a, b, cc, d) - r(cc, d, a, b));
        });
        // traces of C over every pair of slots
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for &(s, t) in &pairs {
            for_each_index(n, 2, |free| {
                let mut sum = 0.0;
                for x in 0..n {
                    for y in 0..n {
                        let mut idx = [0usize; 4];
                        let mut f = free.iter();
                        for (k, slot) in idx.iter_mut().enumerate() {
                            *slot = if k == s {
                                x
                            } else if k == t {
                                y
                            } else {
                                *f.next().unwrap()
                            };
                        }
                        sum += gi(x, y) * self.weyl.at(&idx);
                    }
                }
                upd(&mut res.weyl_trace, sum);
            });
        }
        for_each_index(n, 3, |i| {
            upd(&mut res.cotton_antisymmetry, self.cotton.at(i) + self.cotton.at(&[i[0], i[2], i[1]]));
        });
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricdsl::parse_expr;

    fn sphere(n: usize) -> MetricSpec {
        // unit n-sphere in polar coordinates
        let names: Vec<String> = (0..n).map(|k| format!("t{}", k + 1)).collect();
        let mut spec = MetricSpec::new("sphere", vec![1; n], names.clone());
        for k in 0..n {
            let mut text = String::from("1");
            for j in 0..k {
                text.push_str(&format!(" * sin(t{})^2", j + 1));
            }
            spec.set(k, k, parse_expr(&text, &names).unwrap());
        }
        spec
    }

    fn flat(n: usize) -> MetricSpec {
        let names: Vec<String> = (0..n).map(|k| format!("x{}", k + 1)).collect();
        let mut spec = MetricSpec::new("flat", vec![1; n], names);
        for k in 0..n {
            spec.set(k, k, Expr::Const(1.0));
        }
        spec
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let sp = JetSpace::new(4, 3);
        let g = christoffel(&flat(4), &[0.1, 0.2, 0.3, 0.4], &sp).unwrap();
        assert_eq!(g.value().max_abs(), 0.0);
    }

    #[test]
    fn round_two_sphere_christoffel() {
        let sp = JetSpace::new(2, 2);
        let g = christoffel(&sphere(2), &[core::f64::consts::FRAC_PI_2, 0.0], &sp).unwrap();
        // Γ^θ_φφ = -sinθ cosθ and Γ^φ_θφ = cotθ, both zero on the equator
        assert!(g.at(&[0, 1, 1]).value().abs() < 1e-15);
        assert!(g.at(&[1, 0, 1]).value().abs() < 1e-15);
        let g = christoffel(&sphere(2), &[1.0, 0.0], &sp).unwrap();
        assert!((g.at(&[0, 1, 1]).value() + libm::sin(1.0) * libm::cos(1.0)).abs() < 1e-14);
        assert!((g.at(&[1, 0, 1]).value() - libm::cos(1.0) / libm::sin(1.0)).abs() < 1e-14);
        assert!((g.at(&[1, 1, 0]).value() - libm::cos(1.0) / libm::sin(1.0)).abs() < 1e-14);
    }

    #[test]
    fn metricity() {
        let sp = JetSpace::new(4, 3);
        let geom = Geometry::new(&sphere(4), &[0.7, 1.1, 0.9, 0.3], &sp).unwrap();
        let dg = geom.covariant_derivative(geom.metric()).unwrap();
        assert!(dg.value().max_abs() < 1e-12);
    }

    #[test]
    fn round_four_sphere_pack() {
        let sp = JetSpace::new(4, 4);
        let p = [0.7, 1.1, 0.9, 0.3];
        let pack = curvature_pack(&sphere(4), &p, &sp).unwrap();
        assert!((pack.scalar - 12.0).abs() < 1e-10);
        assert!((pack.j - 2.0).abs() < 1e-10);
        // P = g/2, R_abcd = g_ac g_bd - g_ad g_bc
        let half_g = pack.metric.scale(0.5);
        assert!(pack.schouten.max_diff(&half_g) < 1e-10);
        let g = &pack.metric;
        let oracle = TensorValue::from_fn(4, &[Co, Co, Co, Co], |i| {
            g.at(&[i[0], i[2]]) * g.at(&[i[1], i[3]]) - g.at(&[i[0], i[3]]) * g.at(&[i[1], i[2]])
        });
        assert!(pack.riemann_lowered.max_diff(&oracle) < 1e-10);
        assert!(pack.weyl.max_abs() < 1e-10);
        assert!(pack.cotton.max_abs() < 1e-9);
        assert!(pack.bach.max_abs() < 1e-8);
    }

    #[test]
    fn flat_pack_is_zero() {
        let sp = JetSpace::new(4, 4);
        let pack = curvature_pack(&flat(4), &[0.0; 4], &sp).unwrap();
        assert_eq!(pack.riemann.max_abs(), 0.0);
        assert_eq!(pack.bach.max_abs(), 0.0);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let sp = JetSpace::new(4, 3);
        let geom = Geometry::new(&sphere(4), &[0.7, 1.1, 0.9, 0.3], &sp).unwrap();
        assert!(geom.cotton().is_ok());
        assert!(matches!(geom.bach(), Err(Error::OrderExhausted { needed: 4, .. })));
        assert!(matches!(geom.curvature_pack(), Err(Error::OrderExhausted { .. })));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let spec = MetricSpec::from_strs("deg", "+++", &["x", "y", "z"], &[(0, 0, "x"), (1, 1, "1"), (2, 2, "1")]).unwrap();
        let sp = JetSpace::new(3, 2);
        assert!(matches!(Geometry::new(&spec, &[0.0, 0.0, 0.0], &sp), Err(Error::Singular(_))));
    }

    #[test]
    fn ricci_identity_on_a_vector() {
        // [∇_a, ∇_b] v^c = R_ab^c_d v^d on a random vector field
        let spec = MetricSpec::from_strs(
            "warped",
            "+++",
            &["x", "y", "z"],
            &[(0, 0, "1 + 0.1*y^2"), (1, 1, "exp(0.2*x*z)"), (2, 2, "2 + sin(x)"), (0, 1, "0.1*z")],
        )
        .unwrap();
        let sp = JetSpace::new(3, 4);
        let p = [0.3, -0.2, 0.5];
        let geom = Geometry::new(&spec, &p, &sp).unwrap();
        let coords = spec.coordinate_jets(&p, &sp).unwrap();
        let v = JetTensor::from_fn(3, &[Contra], |i| {
            (&coords[i[0]] * &coords[(i[0] + 1) % 3]).sin() + (i[0] as f64)
        });
        let dv = geom.covariant_derivative(&v).unwrap();
        let ddv = geom.covariant_derivative(&dv).unwrap();
        let r = geom.riemann().unwrap();
        let mut worst: f64 = 0.0;
        for_each_index(3, 3, |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            let lhs = ddv.at(&[a, b, c]).value() - ddv.at(&[b, a, c]).value();
            let rhs: f64 = (0..3).map(|d| r.at(&[a, b, c, d]).value() * v.at(&[d]).value()).sum();
            worst = worst.max((lhs - rhs).abs());
        });
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn projective_change_zero_is_identity() {
        let sp = JetSpace::new(3, 2);
        let geom = Geometry::new(&sphere(3), &[0.7, 1.0, 0.2], &sp).unwrap();
        let zero = JetTensor::zeros(&sp, 3, &[Co]);
        let g2 = projective_change(geom.christoffel(), &zero).unwrap();
        assert_eq!(g2.value(), geom.christoffel().value());
    }

    #[test]
    fn rescale_by_zero_and_constant() {
        let spec = flat(4);
        let same = conformal_rescale(&spec, &Expr::Const(0.0)).unwrap();
        let sp = JetSpace::new(4, 4);
        let p = [0.1, 0.2, 0.3, 0.4];
        let a = Geometry::new(&spec, &p, &sp).unwrap();
        let b = Geometry::new(&same, &p, &sp).unwrap();
        assert_eq!(a.metric().value(), b.metric().value());
        let four = conformal_rescale(&spec, &parse_expr("log(2)", &spec.coords).unwrap()).unwrap();
        let c = Geometry::new(&four, &p, &sp).unwrap();
        assert!((c.metric().at(&[1, 1]).value() - 4.0).abs() < 1e-14);
        assert!(c.weyl().unwrap().value().max_abs() < 1e-14);
    }
}
