use conftrac::catalog::VectorField;
use conftrac::prolong::{
    from_parallel, killing_data, killing_residual, parallel_transport, prolonged_curvature_rank, to_parallel, Curve,
    KillingConnection, KillingProlongValue,
};
use conftrac::tractor::splitting_bd;
use conftrac::{Error, Geometry, JetSpace, MetricSpec};

use super::{zero_check, Context};
use crate::config::Suite;
use crate::report::Check;

const S: Suite = Suite::Prolong;
const TRANSPORT_TOL: f64 = 1e-10;

fn killing_fiber(spec: &MetricSpec, field: &VectorField, p: &[f64]) -> conftrac::Result<Vec<f64>> {
    let n = spec.dim;
    let sp = JetSpace::new(n, 2);
    let geom = Geometry::new(spec, p, &sp)?;
    let (k, mu, _) = killing_data(&geom, &field.jet(spec, p, &sp)?)?;
    let m = mu.value().comps;
    let anti: Vec<f64> = (0..n * n).map(|i| 0.5 * (m[i] - m[(i % n) * n + i / n])).collect();
    Ok(KillingProlongValue::new(k.value().comps, anti)?.to_fiber())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run(ctx: &Context) -> Vec<Check> {
    let n = ctx.dim();
    let pts = ctx.points.len();
    let sp = ctx.space();
    let full = n * (n + 1) / 2;
    let conn = KillingConnection { n };
    let mut out = Vec::new();
    let fields: &[VectorField] = ctx.entry.as_ref().map_or(&[], |e| &e.killing_fields);

    let id = "prolong.killing-curvature-kernel";
    let anchor = "Killing fields ≤ pointwise kernel of the prolonged curvature ≤ n(n+1)/2";
    let pointwise: conftrac::Result<Vec<usize>> = ctx
        .points
        .iter()
        .map(|p| prolonged_curvature_rank(&conn, &ctx.spec, core::slice::from_ref(p)).map(|r| r.kernel))
        .collect();
    out.push(match prolonged_curvature_rank(&conn, &ctx.spec, &ctx.points).and_then(|r| Ok((r, pointwise?))) {
        Ok((r, pointwise)) => {
            let constant_curvature = ctx.facts().map(|f| f.conformally_flat && f.einstein);
            let min_point = pointwise.iter().copied().min().unwrap_or(full);
            let mut bad = pointwise.iter().filter(|&&k| k < fields.len()).count();
            if constant_curvature == Some(true) {
                bad += usize::from(r.kernel != full);
            }
            let note = format!(
                "stacked rank {} kernel {} of {}; smallest pointwise kernel {}; {} stored Killing fields",
                r.rank, r.kernel, full, min_point, fields.len()
            );
            if ctx.entry.is_some() {
                Check::expect_zero(S, id, anchor, bad as f64, 0.0, pts).with_note(note)
            } else {
                Check::info(S, id, anchor, r.kernel as f64, 0.0, pts).with_note(note)
            }
        }
        Err(e) => Check::failed(S, id, anchor, 0.0, pts, e),
    });

    if !fields.is_empty() {
        out.push(zero_check(
            ctx,
            S,
            "prolong.killing-fields-parallel",
            "∇_a k_b - μ_ab = 0 and ∇_a μ_bc - R_bc^d_a k_d = 0 for stored Killing fields",
            1e-8,
            ctx.max_over_points("killing", |p, _| {
                let geom = Geometry::new(&ctx.spec, p, &sp)?;
                let mut worst: f64 = 0.0;
                for f in fields {
                    worst = worst.max(killing_residual(&geom, &f.jet(&ctx.spec, p, &sp)?)?);
                }
                Ok(worst)
            }),
        ));

        let id = "prolong.transport-path-independence";
        let anchor = "Killing data transported along homotopic paths agrees with the field's own prolongation";
        let tol = ctx.tol(1e-6);
        if pts < 2 {
            out.push(Check::info(S, id, anchor, 0.0, tol, pts).with_note("needs two sample points"));
        } else {
            let (a, b) = (&ctx.points[0], &ctx.points[1]);
            let via: Vec<f64> = match ctx.points.get(2) {
                Some(c) => c.clone(),
                None => a.iter().zip(&ctx.region).map(|(x, (lo, hi))| 0.5 * (x + 0.5 * (lo + hi))).collect(),
            };
            let res = (|| -> conftrac::Result<f64> {
                let mut worst: f64 = 0.0;
                for f in fields {
                    let v0 = killing_fiber(&ctx.spec, f, a)?;
                    let direct = Curve::Segment { from: a.clone(), to: b.clone() };
                    let bent = Curve::polygon(&[a.clone(), via.clone(), b.clone()], false);
                    let x = parallel_transport(&conn, &ctx.spec, &direct, &v0, TRANSPORT_TOL)?;
                    let y = parallel_transport(&conn, &ctx.spec, &bent, &v0, TRANSPORT_TOL)?;
                    let want = killing_fiber(&ctx.spec, f, b)?;
                    worst = worst.max(max_diff(&x.value, &y.value)).max(max_diff(&x.value, &want));
                }
                Ok(worst)
            })();
            out.push(match res {
                Ok(r) => Check::expect_zero(S, id, anchor, r, tol, 3.min(pts)),
                Err(e) => Check::failed(S, id, anchor, tol, pts, e),
            });
        }
    }

    if let Some(entry) = ctx.entry.as_ref().filter(|e| !e.einstein_scales.is_empty()) {
        let tol = ctx.tol(1e-8);
        out.push(zero_check(
            ctx,
            S,
            "prolong.einstein-roundtrip",
            "σ ↦ 𝔻σ parallel and X(𝔻σ) = σ with Dσ = 0 for stored Einstein scales",
            tol,
            ctx.max_over_points("roundtrip", |p, _| {
                let geom = Geometry::new(&ctx.spec, p, &sp)?;
                let mut worst: f64 = 0.0;
                for s in &entry.einstein_scales {
                    let sigma = s.jet(&ctx.spec, p, &sp)?;
                    let r = (|| {
                        let there = to_parallel(&geom, &sigma, tol)?;
                        let back = from_parallel(&geom, &splitting_bd(&geom, &sigma)?, tol)?;
                        Ok::<f64, Error>(there.parallel_residual.max(back.d_residual).max((back.sigma - sigma.value()).abs()))
                    })();
                    worst = worst.max(match r {
                        Ok(v) => v,
                        Err(Error::Certification { residual, .. }) => residual,
                        Err(e) => return Err(e),
                    });
                }
                Ok(worst)
            }),
        ));
    }
    out
}
