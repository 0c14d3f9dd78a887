use conftrac::catalog::measure_facts;
use conftrac::riemann::conformal_rescale;
use conftrac::Geometry;

use super::{random_weight, zero_check, Context};
use crate::config::Suite;
use crate::report::Check;

const S: Suite = Suite::Curvature;

pub fn run(ctx: &Context) -> Vec<Check> {
    let sp = ctx.space();
    let mut out = Vec::new();

    out.push(zero_check(
        ctx,
        S,
        "curvature.metricity",
        "∇g = 0",
        1e-11,
        ctx.max_over_points("metricity", |p, _| {
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            Ok(geom.covariant_derivative(geom.metric())?.value().max_abs())
        }),
    ));

    out.push(zero_check(
        ctx,
        S,
        "curvature.pack-identities",
        "Ric = (n-2)P + Jg, J = tr P, C trace-free, A_a(bc) = 0, B symmetric trace-free, R = C + P∧g, R_[abc]d = 0",
        1e-9,
        ctx.max_over_points("pack", |p, _| {
            let r = Geometry::new(&ctx.spec, p, &sp)?.curvature_pack()?.residuals();
            Ok([
                r.ricci_schouten,
                r.j_trace,
                r.weyl_trace,
                r.cotton_antisymmetry,
                r.bach_symmetry,
                r.bach_trace,
                r.decomposition,
                r.first_bianchi,
                r.riemann_symmetries,
            ]
            .into_iter()
            .fold(0.0, f64::max))
        }),
    ));

    out.push(zero_check(
        ctx,
        S,
        "curvature.weyl-conformal-weight",
        "C(e^{2ω}g) = e^{2ω} C(g), all indices down",
        1e-8,
        ctx.max_over_points("weyl-weight", |p, rng| {
            let omega = random_weight(p, rng);
            let hat = conformal_rescale(&ctx.spec, &omega)?;
            let c = Geometry::new(&ctx.spec, p, &sp)?.weyl()?.value();
            let ch = Geometry::new(&hat, p, &sp)?.weyl()?.value();
            let w = (2.0 * omega.eval_f64(p)).exp();
            Ok(c.comps.iter().zip(&ch.comps).map(|(a, b)| (b - w * a).abs()).fold(0.0, f64::max))
        }),
    ));

    if let Some(entry) = &ctx.entry {
        let id = "curvature.catalog-facts";
        let anchor = "stored flags {flat, conformally flat, Einstein, Ricci-flat, Bach-flat} recomputed";
        out.push(match measure_facts(&ctx.spec, &ctx.points) {
            Ok((measured, _)) => {
                let pairs = [
                    ("flat", measured.flat, entry.facts.flat),
                    ("conformally_flat", measured.conformally_flat, entry.facts.conformally_flat),
                    ("einstein", measured.einstein, entry.facts.einstein),
                    ("ricci_flat", measured.ricci_flat, entry.facts.ricci_flat),
                    ("bach_flat", measured.bach_flat_expected, entry.facts.bach_flat_expected),
                ];
                let wrong: Vec<&str> = pairs.iter().filter(|(_, m, s)| m != s).map(|(k, _, _)| *k).collect();
                let c = Check::expect_zero(S, id, anchor, wrong.len() as f64, 0.0, ctx.points.len());
                if wrong.is_empty() {
                    c.with_note(format!("[{}]", entry.facts))
                } else {
                    c.with_note(format!("mismatched: {}", wrong.join(",")))
                }
            }
            Err(e) => Check::failed(S, id, anchor, 0.0, ctx.points.len(), e),
        });
    }

    let id = "curvature.bach-tensor";
    let anchor = "B = 0 iff Bach-flat";
    let tol = ctx.tol(1e-8);
    out.push(
        match ctx.max_over_points("bach", |p, _| Ok(Geometry::new(&ctx.spec, p, &sp)?.bach()?.value().max_abs())) {
            Ok(r) => Check::expect(S, id, anchor, r, tol, ctx.points.len(), ctx.facts().map(|f| f.bach_flat_expected)),
            Err(e) => Check::failed(S, id, anchor, tol, ctx.points.len(), e),
        },
    );
    out
}
