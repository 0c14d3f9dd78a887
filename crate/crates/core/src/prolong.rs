//! Prolonged systems as connections, their curvature obstructions and
//! numerical parallel transport.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::connection::{Connection, ConnectionCoefficients, ConnectionFlags};
use crate::error::{exhausted, usage, Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::metricdsl::MetricSpec;
use crate::riemann::Geometry;
use crate::tensor::{Co, Contra, JetTensor};
use crate::tractor::{op_d, op_e, splitting_bd, tractor_connection_apply, TractorJet, TractorValue};

/// Relative singular-value threshold for numeric rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Value of the Killing prolongation `(k_b, μ_bc)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingProlongValue {
    pub k: Vec<f64>,
    /// Row-major `n × n`, antisymmetric.
    pub mu: Vec<f64>,
}

impl KillingProlongValue {
    pub fn new(k: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let n = k.len();
        if mu.len() != n * n {
            return Err(usage("μ must be an n × n array"));
        }
        for a in 0..n {
            for b in 0..n {
                if libm::fabs(mu[a * n + b] + mu[b * n + a]) > 1e-10 {
                    return Err(usage("μ must be antisymmetric"));
                }
            }
        }
        Ok(KillingProlongValue { k, mu })
    }

    /// Components in the fiber order of [`KillingConnection`].
    pub fn to_fiber(&self) -> Vec<f64> {
        let n = self.k.len();
        let mut v = self.k.clone();
        for b in 0..n {
            for c in b + 1..n {
                v.push(self.mu[b * n + c]);
            }
        }
        v
    }

    pub fn from_fiber(n: usize, v: &[f64]) -> Self {
        let mut mu = vec![0.0; n * n];
        let mut idx = n;
        for b in 0..n {
            for c in b + 1..n {
                mu[b * n + c] = v[idx];
                mu[c * n + b] = -v[idx];
                idx += 1;
            }
        }
        KillingProlongValue { k: v[..n].to_vec(), mu }
    }
}

/// `∇^D(k, μ) = (∇_a k_b - μ_ab, ∇_a μ_bc - R_bc^d_a k_d)`, stored as
/// `[a][b]` and `[a][b][c]`.
pub fn killing_connection_apply(geom: &Geometry, k: &JetTensor, mu: &JetTensor) -> Result<(JetTensor, JetTensor)> {
    let n = geom.dim();
    if k.slots() != [Co] || mu.slots() != [Co, Co] {
        return Err(usage("expected a covector k and a 2-form μ"));
    }
    let r = geom.riemann()?;
    let dk = geom.covariant_derivative(k)?;
    let dmu = geom.covariant_derivative(mu)?;
    let first = JetTensor::from_fn(n, &[Co, Co], |i| dk.at(i) - mu.at(i));
    let second = JetTensor::from_fn(n, &[Co, Co, Co], |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let mut s = dmu.at(i).clone();
        for d in 0..n {
            s -= r.at(&[b, c, d, a]) * k.at(&[d]);
        }
        s
    });
    Ok((first, second))
}

/// Prolongation data `(k♭, ∇k♭)` of a vector field together with the
/// residual of the Killing equation `max|∇_(a k_b)|`.
pub fn killing_data(geom: &Geometry, v: &JetTensor) -> Result<(JetTensor, JetTensor, f64)> {
    if v.slots() != [Contra] {
        return Err(usage("expected a vector field"));
    }
    let k = geom.lower(v, 0);
    let mu = geom.covariant_derivative(&k)?;
    let n = geom.dim();
    let mut sym: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            sym = sym.max(libm::fabs(mu.at(&[a, b]).value() + mu.at(&[b, a]).value()) / 2.0);
        }
    }
    Ok((k, mu, sym))
}

/// Residual of the Killing prolongation for a vector field: the larger of
/// the Killing-equation defect and `|∇^D(k, ∇k)|`.
pub fn killing_residual(geom: &Geometry, v: &JetTensor) -> Result<f64> {
    let (k, mu, sym) = killing_data(geom, v)?;
    let (a, b) = killing_connection_apply(geom, &k, &mu)?;
    Ok(sym.max(a.value().max_abs()).max(b.value().max_abs()))
}

/// The Killing prolongation as a connection on `Λ¹ ⊕ Λ²`; fiber order is
/// `k_0 … k_{n-1}` then `μ_bc` for `b < c` in row-major order.
#[derive(Debug, Clone)]
pub struct KillingConnection {
    pub n: usize,
}

impl KillingConnection {
    fn pair(&self, b: usize, c: usize) -> Option<(usize, f64)> {
        let n = self.n;
        if b == c {
            return None;
        }
        let (lo, hi, sign) = if b < c { (b, c, 1.0) } else { (c, b, -1.0) };
        let offset: usize = (0..lo).map(|i| n - 1 - i).sum();
        Some((n + offset + (hi - lo - 1), sign))
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in 0..self.n {
            for c in b + 1..self.n {
                out.push((b, c));
            }
        }
        out
    }
}

impl Connection for KillingConnection {
    fn rank(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn label(&self) -> String {
        String::from("killing-prolongation")
    }

    fn flags(&self) -> ConnectionFlags {
        ConnectionFlags::default()
    }

    fn metric_order(&self) -> usize {
        2
    }

    fn coefficients(&self, geom: &Geometry) -> Result<ConnectionCoefficients> {
        let n = self.n;
        if geom.dim() != n {
            return Err(Error::DimensionMismatch(n, geom.dim()));
        }
        let gamma = geom.christoffel();
        let riem = geom.riemann()?;
        let sp = geom.space().clone();
        let rank = self.rank();
        let pairs = self.pairs();
        let mut data: Vec<Vec<Vec<Jet>>> = (0..n).map(|_| (0..rank).map(|_| vec![Jet::zero(&sp); rank]).collect()).collect();
        for (a, block) in data.iter_mut().enumerate() {
            for b in 0..n {
                for e in 0..n {
                    block[b][e] -= gamma.at(&[e, a, b]);
                }
                if let Some((col, sign)) = self.pair(a, b) {
                    block[b][col] -= Jet::constant(&sp, sign);
                }
            }
            for (p, &(b, c)) in pairs.iter().enumerate() {
                let row = n + p;
                for e in 0..n {
                    // -Γ^e_ab μ_ec - Γ^e_ac μ_be
                    if let Some((col, sign)) = self.pair(e, c) {
                        block[row][col] -= gamma.at(&[e, a, b]).scale(sign);
                    }
                    if let Some((col, sign)) = self.pair(b, e) {
                        block[row][col] -= gamma.at(&[e, a, c]).scale(sign);
                    }
                }
                for d in 0..n {
                    block[row][d] -= riem.at(&[b, c, d, a]);
                }
            }
        }
        Ok(ConnectionCoefficients::from_fn(n, rank, |a, i, j| data[a][i][j].clone()))
    }
}

/// Stacked curvature rank of a connection over sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureRank {
    pub bundle_rank: usize,
    /// Rank of the curvature operators stacked over all points so far.
    pub rank: usize,
    /// Common kernel dimension: an upper bound on the local solution space.
    pub kernel: usize,
    /// Kernel dimension after each point is added.
    pub kernel_by_point: Vec<usize>,
    pub singular_values: Vec<f64>,
}

/// Numeric rank with the threshold `σ > RANK_THRESHOLD · max(σ_max, 1)`.
pub fn numeric_rank(singular: &[f64]) -> usize {
    let top = singular.iter().fold(0.0_f64, |m, &s| m.max(s)).max(1.0);
    singular.iter().filter(|&&s| s > RANK_THRESHOLD * top).count()
}

/// Stacks `F(∂_i, ∂_j)` over all `i < j` and all points, and reports the rank
/// and common kernel dimension.
pub fn prolonged_curvature_rank(conn: &dyn Connection, spec: &MetricSpec, points: &[Vec<f64>]) -> Result<CurvatureRank> {
    let n = spec.dim;
    let r = conn.rank();
    let space = JetSpace::new(n, conn.metric_order().max(1) + 1);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut kernel_by_point = Vec::with_capacity(points.len());
    let mut singular = Vec::new();
    let mut rank = 0;
    for p in points {
        let geom = Geometry::new(spec, p, &space)?;
        let coeffs = conn.coefficients(&geom)?;
        let f = coeffs.curvature(&geom)?;
        for a in 0..n {
            for b in a + 1..n {
                for i in 0..r {
                    rows.push((0..r).map(|j| f.at(a, b, i, j).value()).collect());
                }
            }
        }
        let m = nalgebra::DMatrix::from_fn(rows.len(), r, |i, j| rows[i][j]);
        singular = m.singular_values().iter().copied().collect();
        rank = numeric_rank(&singular);
        kernel_by_point.push(r - rank);
    }
    Ok(CurvatureRank { bundle_rank: r, rank, kernel: r - rank, kernel_by_point, singular_values: singular })
}

/// Closed-form curve in chart coordinates, parametrized on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// `center + radius (cos θ e_i + sin θ e_j)`, `θ` from `start` to `end`.
    Arc { center: Vec<f64>, radius: f64, axes: (usize, usize), start: f64, end: f64 },
    /// Pieces traversed in order, each on an equal share of `[0, 1]`.
    Chain(Vec<Curve>),
}

impl Curve {
    /// Straight segments through `vertices`; `closed` returns to the start.
    pub fn polygon(vertices: &[Vec<f64>], closed: bool) -> Curve {
        let mut pieces: Vec<Curve> =
            vertices.windows(2).map(|w| Curve::Segment { from: w[0].clone(), to: w[1].clone() }).collect();
        if closed && vertices.len() > 1 {
            pieces.push(Curve::Segment { from: vertices[vertices.len() - 1].clone(), to: vertices[0].clone() });
        }
        Curve::Chain(pieces)
    }

    pub fn dim(&self) -> usize {
        match self {
            Curve::Segment { from, .. } => from.len(),
            Curve::Arc { center, .. } => center.len(),
            Curve::Chain(p) => p.first().map_or(0, |c| c.dim()),
        }
    }

    fn locate(&self, t: f64) -> (&Curve, f64, f64) {
        match self {
            Curve::Chain(pieces) if !pieces.is_empty() => {
                let k = pieces.len() as f64;
                let idx = ((t * k) as usize).min(pieces.len() - 1);
                pieces[idx].locate(t * k - idx as f64)
                    .map_speed(k)
            }
            _ => (self, t, 1.0),
        }
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let (c, s, _) = self.locate(t);
        match c {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect(),
            Curve::Arc { center, radius, axes, start, end } => {
                let th = start + s * (end - start);
                let mut p = center.clone();
                p[axes.0] += radius * libm::cos(th);
                p[axes.1] += radius * libm::sin(th);
                p
            }
            Curve::Chain(_) => Vec::new(),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let (c, s, speed) = self.locate(t);
        match c {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| speed * (b - a)).collect(),
            Curve::Arc { center, radius, axes, start, end } => {
                let th = start + s * (end - start);
                let w = speed * (end - start) * radius;
                let mut v = vec![0.0; center.len()];
                v[axes.0] = -w * libm::sin(th);
                v[axes.1] = w * libm::cos(th);
                v
            }
            Curve::Chain(_) => Vec::new(),
        }
    }

    fn pieces(&self) -> Vec<&Curve> {
        match self {
            Curve::Chain(p) => p.iter().flat_map(|c| c.pieces()).collect(),
            c => vec![c],
        }
    }
}

trait MapSpeed {
    fn map_speed(self, k: f64) -> Self;
}

impl MapSpeed for (&Curve, f64, f64) {
    fn map_speed(self, k: f64) -> Self {
        (self.0, self.1, self.2 * k)
    }
}

/// Outcome of [`parallel_transport`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub value: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates.
    pub error_estimate: f64,
    /// Set when some step could not meet the tolerance.
    pub flagged: bool,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MIN_STEP: f64 = 1e-12;
const MAX_STEPS: usize = 100_000;

/// Solves `v' = -A(ċ) v` along `curve` with adaptive Dormand-Prince steps.
pub fn parallel_transport(
    conn: &dyn Connection,
    spec: &MetricSpec,
    curve: &Curve,
    v0: &[f64],
    tol: f64,
) -> Result<TransportResult> {
    let n = spec.dim;
    if curve.dim() != n {
        return Err(Error::DimensionMismatch(curve.dim(), n));
    }
    if v0.len() != conn.rank() {
        return Err(usage(format!("initial value has {} entries, bundle rank is {}", v0.len(), conn.rank())));
    }
    if !(tol > 0.0) {
        return Err(usage("tolerance must be positive"));
    }
    let space = JetSpace::new(n, conn.metric_order().max(1));
    let mut state = TransportResult { value: v0.to_vec(), steps: 0, rejected: 0, error_estimate: 0.0, flagged: false };
    for piece in curve.pieces() {
        transport_piece(conn, spec, &space, piece, tol, &mut state)?;
    }
    Ok(state)
}

fn rhs(conn: &dyn Connection, spec: &MetricSpec, space: &Arc<JetSpace>, curve: &Curve, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    let p = curve.point(t);
    let vel = curve.velocity(t);
    let fail = |e: Error| Error::Transport(format!("connection not evaluable at t = {t}: {e}"));
    let geom = Geometry::new(spec, &p, space).map_err(fail)?;
    let coeffs = conn.coefficients(&geom).map_err(fail)?;
    let m = coeffs.contracted_value(&vel);
    let r = v.len();
    Ok((0..r).map(|i| -(0..r).map(|j| m[i * r + j] * v[j]).sum::<f64>()).collect())
}

fn transport_piece(
    conn: &dyn Connection,
    spec: &MetricSpec,
    space: &Arc<JetSpace>,
    curve: &Curve,
    tol: f64,
    state: &mut TransportResult,
) -> Result<()> {
    let r = state.value.len();
    let mut t = 0.0;
    let mut h: f64 = 0.05;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; r]; 7];
    let mut k0 = rhs(conn, spec, space, curve, 0.0, &state.value)?;
    let mut tmp = vec![0.0; r];
    while t < 1.0 {
        if state.steps + state.rejected > MAX_STEPS {
            return Err(Error::Transport(String::from("step budget exhausted")));
        }
        h = h.min(1.0 - t);
        k[0].copy_from_slice(&k0);
        for s in 1..7 {
            for i in 0..r {
                tmp[i] = state.value[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s] = rhs(conn, spec, space, curve, t + C[s] * h, &tmp)?;
        }
        let mut err: f64 = 0.0;
        let mut next = vec![0.0; r];
        for i in 0..r {
            let y5 = state.value[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
            let y4 = state.value[i] + h * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
            let scale = tol * (1.0 + libm::fabs(state.value[i]).max(libm::fabs(y5)));
            err = err.max(libm::fabs(y5 - y4) / scale);
            next[i] = y5;
        }
        if err <= 1.0 {
            t += h;
            state.value = next;
            state.steps += 1;
            state.error_estimate += err * tol;
            // first-same-as-last: stage 7 is the derivative at the new point
            k0 = k[6].clone();
        } else {
            state.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < MIN_STEP && t < 1.0 {
            state.flagged = true;
            return Err(Error::Transport(format!("step size underflow at t = {t}")));
        }
    }
    Ok(())
}

/// Result of certifying the correspondence between Einstein scales and
/// parallel tractors at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripOutcome {
    pub sigma: f64,
    pub tractor: TractorValue,
    /// `max|∇^D 𝔻σ|`, which equals `max|E(Dσ)|`.
    pub parallel_residual: f64,
    /// `max|Dσ|`.
    pub d_residual: f64,
    /// `max|E(Dσ)|`, computed independently.
    pub e_of_d: f64,
}

/// `σ ↦ 𝔻σ`, certified parallel when `Dσ = 0` to `tol`.
pub fn to_parallel(geom: &Geometry, sigma: &Jet, tol: f64) -> Result<RoundtripOutcome> {
    let t = splitting_bd(geom, sigma)?;
    let out = outcome(geom, sigma, &t)?;
    if out.parallel_residual > tol {
        return Err(Error::Certification { what: String::from("𝔻σ is not parallel"), residual: out.parallel_residual });
    }
    Ok(out)
}

/// `t ↦ X(t) = σ` for a parallel tractor, certified by `Dσ = 0`.
pub fn from_parallel(geom: &Geometry, t: &TractorJet, tol: f64) -> Result<RoundtripOutcome> {
    let nt = tractor_connection_apply(geom, t)?;
    let res = nt.max_abs_value();
    if res > 1e-7 {
        return Err(Error::Certification { what: String::from("input tractor is not parallel"), residual: res });
    }
    let out = outcome(geom, &t.sigma, t)?;
    if out.d_residual > tol {
        return Err(Error::Certification { what: String::from("X(t) is not an Einstein scale"), residual: out.d_residual });
    }
    Ok(out)
}

fn outcome(geom: &Geometry, sigma: &Jet, t: &TractorJet) -> Result<RoundtripOutcome> {
    if geom.order() < 3 || sigma.order() < 3 {
        return Err(exhausted(3, geom.order().min(sigma.order())));
    }
    let nt = tractor_connection_apply(geom, &splitting_bd(geom, sigma)?)?;
    let d = op_d(geom, sigma)?;
    let e = op_e(geom, &d)?;
    Ok(RoundtripOutcome {
        sigma: sigma.value(),
        tractor: t.value(),
        parallel_residual: nt.max_abs_value(),
        d_residual: d.value().max_abs(),
        e_of_d: e.max_abs_value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricdsl::parse_expr;

    fn flat(n: usize) -> MetricSpec {
        let names: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
        let mut s = MetricSpec::new("flat", vec![1; n], names);
        for k in 0..n {
            s.set(k, k, crate::metricdsl::Expr::Const(1.0));
        }
        s
    }

    fn sphere(n: usize) -> MetricSpec {
        let names: Vec<String> = (0..n).map(|k| format!("t{k}")).collect();
        let mut spec = MetricSpec::new("sphere", vec![1; n], names.clone());
        for k in 0..n {
            let mut text = String::from("1");
            for j in 0..k {
                text.push_str(&format!("*sin(t{j})^2"));
            }
            spec.set(k, k, parse_expr(&text, &names).unwrap());
        }
        spec
    }

    #[test]
    fn flat_rotation_is_parallel() {
        let sp = JetSpace::new(2, 2);
        let geom = Geometry::new(&flat(2), &[0.3, -0.7], &sp).unwrap();
        let x = Jet::variable(&sp, 0, 0.3);
        let y = Jet::variable(&sp, 1, -0.7);
        let k = JetTensor::from_fn(2, &[Co], |i| if i[0] == 0 { -&y } else { x.clone() });
        let mu = JetTensor::from_fn(2, &[Co, Co], |i| {
            Jet::constant(&sp, match (i[0], i[1]) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            })
        });
        let (a, b) = killing_connection_apply(&geom, &k, &mu).unwrap();
        assert_eq!(a.value().max_abs(), 0.0);
        assert_eq!(b.value().max_abs(), 0.0);
    }

    #[test]
    fn sphere_axial_field_is_killing() {
        let sp = JetSpace::new(2, 3);
        let geom = Geometry::new(&sphere(2), &[1.1, 0.4], &sp).unwrap();
        let v = JetTensor::from_fn(2, &[Contra], |i| Jet::constant(&sp, if i[0] == 1 { 1.0 } else { 0.0 }));
        assert!(killing_residual(&geom, &v).unwrap() < 1e-12);
        let (_, mu, _) = killing_data(&geom, &v).unwrap();
        assert!((mu.at(&[0, 1]).value() + mu.at(&[1, 0]).value()).abs() < 1e-14);
    }

    #[test]
    fn generic_connection_matches_formula() {
        let spec = MetricSpec::from_strs("w", "+++", &["x", "y", "z"], &[(0, 0, "1 + 0.1*y^2"), (1, 1, "exp(0.2*x*z)"), (2, 2, "2 + sin(x)")]).unwrap();
        let sp = JetSpace::new(3, 3);
        let geom = Geometry::new(&spec, &[0.3, -0.2, 0.5], &sp).unwrap();
        let mut rng = crate::sampling::rng(4);
        let k = crate::sampling::random_tensor(&sp, 3, &[Co], 1.0, &mut rng);
        let m = crate::sampling::random_tensor(&sp, 3, &[Co, Co], 1.0, &mut rng);
        let mu = JetTensor::from_fn(3, &[Co, Co], |i| (m.at(i) - m.at(&[i[1], i[0]])).scale(0.5));
        let (a, b) = killing_connection_apply(&geom, &k, &mu).unwrap();
        let conn = KillingConnection { n: 3 };
        let coeffs = conn.coefficients(&geom).unwrap();
        let mut section: Vec<Jet> = (0..3).map(|i| k.at(&[i]).clone()).collect();
        for b in 0..3 {
            for c in b + 1..3 {
                section.push(mu.at(&[b, c]).clone());
            }
        }
        let generic = coeffs.apply(&geom, &section).unwrap();
        let mut worst: f64 = 0.0;
        for x in 0..3 {
            for bb in 0..3 {
                worst = worst.max((generic[x][bb].value() - a.at(&[x, bb]).value()).abs());
            }
            let mut idx = 3;
            for bb in 0..3 {
                for c in bb + 1..3 {
                    worst = worst.max((generic[x][idx].value() - b.at(&[x, bb, c]).value()).abs());
                    idx += 1;
                }
            }
        }
        assert!(worst < 1e-13, "{worst}");
    }

    #[test]
    fn flat_and_round_have_maximal_kernel() {
        let pts = vec![vec![0.9, 1.0, 1.2], vec![1.3, 0.7, 2.0]];
        let conn = KillingConnection { n: 3 };
        let flat_rank = prolonged_curvature_rank(&conn, &flat(3), &pts).unwrap();
        assert_eq!(flat_rank.kernel, 6);
        let round = prolonged_curvature_rank(&conn, &sphere(3), &pts).unwrap();
        assert_eq!(round.kernel, 6, "{:?}", round.singular_values);
        let bumpy = MetricSpec::from_strs("b", "+++", &["x", "y", "z"], &[(0, 0, "1 + 0.1*y^2"), (1, 1, "exp(0.2*x*z)"), (2, 2, "2 + sin(x)")]).unwrap();
        let g = prolonged_curvature_rank(&conn, &bumpy, &pts).unwrap();
        assert!(g.kernel < 6);
        assert!(g.kernel_by_point.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn flat_holonomy_is_trivial() {
        let conn = KillingConnection { n: 2 };
        let square = Curve::polygon(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]], true);
        let v0 = [0.3, -0.5, 0.7];
        let res = parallel_transport(&conn, &flat(2), &square, &v0, 1e-10).unwrap();
        for (a, b) in res.value.iter().zip(&v0) {
            assert!((a - b).abs() < 1e-7);
        }
        let triv = crate::connection::TrivialConnection { rank: 3 };
        let res = parallel_transport(&triv, &flat(2), &square, &v0, 1e-10).unwrap();
        assert_eq!(res.value, v0.to_vec());
    }

    #[test]
    fn arcs_have_consistent_velocity() {
        let c = Curve::Arc { center: vec![0.0, 0.0, 1.0], radius: 2.0, axes: (0, 1), start: 0.0, end: 1.5 };
        let h = 1e-6;
        let (p0, p1) = (c.point(0.4 - h), c.point(0.4 + h));
        let v = c.velocity(0.4);
        for k in 0..3 {
            assert!(((p1[k] - p0[k]) / (2.0 * h) - v[k]).abs() < 1e-6);
        }
        let chain = Curve::Chain(vec![c.clone(), Curve::Segment { from: c.point(1.0), to: vec![0.0, 0.0, 0.0] }]);
        assert_eq!(chain.point(0.25), c.point(0.5));
        assert!((chain.velocity(0.25)[0] - 2.0 * c.velocity(0.5)[0]).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_on_sphere_and_flat() {
        let sp = JetSpace::new(4, 4);
        let geom = Geometry::new(&sphere(4), &[0.7, 1.1, 0.9, 0.3], &sp).unwrap();
        let one = Jet::constant(&sp, 1.0);
        let out = to_parallel(&geom, &one, 1e-8).unwrap();
        assert!((out.tractor.rho + 0.5).abs() < 1e-12);
        let t = splitting_bd(&geom, &one).unwrap();
        let back = from_parallel(&geom, &t, 1e-8).unwrap();
        assert_eq!(back.sigma, 1.0);
        let gf = Geometry::new(&flat(4), &[0.2, 0.0, 0.0, 0.0], &sp).unwrap();
        let x = Jet::variable(&sp, 0, 0.2);
        let out = to_parallel(&gf, &x, 1e-8).unwrap();
        assert_eq!(out.tractor.mu, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn non_einstein_scale_fails_certification() {
        let spec = MetricSpec::from_strs("w", "++++", &["x", "y", "z", "w"], &[(0, 0, "1 + 0.1*y^2"), (1, 1, "exp(0.2*x*z)"), (2, 2, "2 + sin(x)"), (3, 3, "1")]).unwrap();
        let sp = JetSpace::new(4, 4);
        let geom = Geometry::new(&spec, &[0.3, -0.2, 0.5, 0.1], &sp).unwrap();
        let one = Jet::constant(&sp, 1.0);
        match to_parallel(&geom, &one, 1e-8) {
            Err(Error::Certification { residual, .. }) => {
                let e = op_e(&geom, &op_d(&geom, &one).unwrap()).unwrap().max_abs_value();
                assert!((residual - e).abs() < 1e-12 && residual > 1e-4);
            }
            other => panic!("expected certification failure, got {other:?}"),
        }
    }
}
