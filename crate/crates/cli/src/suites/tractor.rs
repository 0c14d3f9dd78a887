use conftrac::riemann::conformal_rescale;
use conftrac::sampling::{random_chart_jet, random_tensor};
use conftrac::tensor::Co;
use conftrac::tractor::{
    bd_star, commuting_column, curvature_by_commutator, d_star, delta_tractor, divergence_residuals, e_star, op_d, op_e,
    splitting_bd, tractor_connection_apply, tractor_curvature, tractor_curvature_divergence, tractor_signature,
    transform, transform_one_form, TractorJet, TractorOneForm, TractorValue,
};
use conftrac::Geometry;

use super::{random_weight, zero_check, Context};
use crate::config::Suite;
use crate::report::Check;

const S: Suite = Suite::Tractor;

fn fiber(t: &TractorValue) -> Vec<f64> {
    let mut v = vec![t.sigma];
    v.extend_from_slice(&t.mu);
    v.push(t.rho);
    v
}

pub fn run(ctx: &Context) -> Vec<Check> {
    let sp = ctx.space();
    let n = ctx.dim();
    let pts = ctx.points.len();
    let mut out = Vec::new();

    out.push(zero_check(
        ctx,
        S,
        "tractor.commuting-square",
        "∇^D 𝔻σ = E(Dσ)",
        1e-8,
        ctx.max_over_points("square", |p, rng| {
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            let sigma = random_chart_jet(&sp, 1.0, rng);
            let lhs = tractor_connection_apply(&geom, &splitting_bd(&geom, &sigma)?)?;
            let rhs = op_e(&geom, &op_d(&geom, &sigma)?)?;
            Ok(lhs.sub(&rhs).max_abs_value())
        }),
    ));

    out.push(zero_check(
        ctx,
        S,
        "tractor.commuting-column",
        "∇^D 𝔻σ = (0, TF(∇∇σ + Pσ), -(1/n)∇(Δσ + Jσ) - P_a^c ∇_c σ)",
        1e-8,
        ctx.max_over_points("column", |p, rng| {
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            let sigma = random_chart_jet(&sp, 1.0, rng);
            let lhs = tractor_connection_apply(&geom, &splitting_bd(&geom, &sigma)?)?;
            Ok(lhs.sub(&commuting_column(&geom, &sigma)?).max_abs_value())
        }),
    ));

    let curv = ctx.per_point("curvature", |p, rng| {
        let geom = Geometry::new(&ctx.spec, p, &sp)?;
        let om = tractor_curvature(&geom)?;
        let t = TractorJet::new(random_chart_jet(&sp, 1.0, rng), random_tensor(&sp, n, &[Co], 1.0, rng), random_chart_jet(&sp, 1.0, rng))?;
        let comm = curvature_by_commutator(&geom, &t)?;
        let tv = fiber(&t.value());
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let got = fiber(&comm[a * n + b]);
                for (i, g) in got.iter().enumerate() {
                    let want: f64 = (0..n + 2).map(|j| om.at(a, b, i, j) * tv[j]).sum();
                    worst = worst.max((g - want).abs());
                }
            }
        }
        Ok((worst, om.structural_zero, om.max_abs()))
    });
    let fold = |v: &[(f64, f64, f64)], k: usize| {
        v.iter().map(|t| [t.0, t.1, t.2][k]).fold(0.0, f64::max)
    };
    match &curv {
        Ok(v) => {
            out.push(Check::expect_zero(S, "tractor.curvature-commutator", "Ω_ab = [∇_a, ∇_b] on tractors", fold(v, 0), ctx.tol(1e-8), pts));
            out.push(Check::expect_zero(S, "tractor.curvature-structural-zeros", "Ω has no σ row and no ρ column", fold(v, 1), ctx.tol(1e-9), pts));
            let cf = ctx.facts().map(|f| f.conformally_flat);
            out.push(Check::expect(S, "tractor.curvature-vanishing", "Ω = 0 iff conformally flat", fold(v, 2), ctx.tol(1e-8), pts, cf));
        }
        Err(e) => {
            out.push(Check::failed(S, "tractor.curvature-commutator", "Ω_ab = [∇_a, ∇_b] on tractors", ctx.tol(1e-8), pts, e));
        }
    }

    let div = ctx.per_point("divergence", |p, _| {
        let geom = Geometry::new(&ctx.spec, p, &sp)?;
        let d = tractor_curvature_divergence(&geom)?;
        let r = divergence_residuals(&geom, &d)?;
        Ok((r.bach_top.max(r.cotton_middle).max(r.bach_bottom), r.structural_zero, r.middle_size))
    });
    match &div {
        Ok(v) => {
            out.push(Check::expect_zero(S, "tractor.divergence-blocks", "∇^aΩ_ab blocks = (B, (n-4)A, -B)", fold(v, 0), ctx.tol(1e-8), pts));
            out.push(Check::expect_zero(S, "tractor.divergence-structural-zeros", "∇^aΩ_ab vanishes outside its three blocks", fold(v, 1), ctx.tol(1e-9), pts));
            if n == 4 {
                out.push(Check::expect_zero(S, "tractor.divergence-middle-dim4", "middle block vanishes identically in dimension 4", fold(v, 2), ctx.tol(1e-9), pts));
            }
        }
        Err(e) => out.push(Check::failed(S, "tractor.divergence-blocks", "∇^aΩ_ab blocks = (B, (n-4)A, -B)", ctx.tol(1e-8), pts, e)),
    }

    out.push(zero_check(
        ctx,
        S,
        "tractor.adjoint-square",
        "𝔻* δ = D* E*",
        1e-8,
        ctx.max_over_points("adjoint", |p, rng| {
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            let form = TractorOneForm {
                alpha: random_tensor(&sp, n, &[Co], 1.0, rng),
                nu: random_tensor(&sp, n, &[Co, Co], 1.0, rng),
                tau: random_tensor(&sp, n, &[Co], 1.0, rng),
            };
            let lhs = bd_star(&geom, &delta_tractor(&geom, &form)?)?;
            let rhs = d_star(&geom, &e_star(&geom, &form)?)?;
            Ok((lhs.value() - rhs.value()).abs())
        }),
    ));

    out.push(zero_check(
        ctx,
        S,
        "tractor.conformal-invariance",
        "∇̂(T̂) = (∇T)^ and 𝔻̂(e^ω σ) = (𝔻σ)^ under g ↦ e^{2ω}g",
        1e-8,
        ctx.max_over_points("invariance", |p, rng| {
            let omega_expr = random_weight(p, rng);
            let hat = conformal_rescale(&ctx.spec, &omega_expr)?;
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            let ghat = Geometry::new(&hat, p, &sp)?;
            let omega = omega_expr.eval_jet(&ctx.spec.coordinate_jets(p, &sp)?)?;
            let t = TractorJet::new(random_chart_jet(&sp, 1.0, rng), random_tensor(&sp, n, &[Co], 1.0, rng), random_chart_jet(&sp, 1.0, rng))?;
            let lhs = tractor_connection_apply(&ghat, &transform(&geom, &omega, &t)?)?;
            let rhs = transform_one_form(&geom, &omega, &tractor_connection_apply(&geom, &t)?)?;
            let sigma = random_chart_jet(&sp, 1.0, rng);
            let a = splitting_bd(&ghat, &(&omega.exp() * &sigma))?.value();
            let b = transform(&geom, &omega, &splitting_bd(&geom, &sigma)?)?.value();
            Ok(lhs.sub(&rhs).max_abs_value().max(a.max_diff(&b)))
        }),
    ));

    let id = "tractor.metric-signature";
    let anchor = "tractor metric has signature (p+1, q+1)";
    out.push(
        match ctx.per_point("signature", |p, _| {
            let geom = Geometry::new(&ctx.spec, p, &conftrac::JetSpace::new(n, 1))?;
            tractor_signature(&geom.metric().value())
        }) {
            Ok(v) => {
                let bad = v.iter().filter(|((p, q), (pt, qt))| *pt != p + 1 || *qt != q + 1).count();
                let ((p, q), (pt, qt)) = v[0];
                Check::expect_zero(S, id, anchor, bad as f64, 0.0, pts).with_note(format!("g ({p},{q}) -> tractor ({pt},{qt})"))
            }
            Err(e) => Check::failed(S, id, anchor, 0.0, pts, e),
        },
    );

    if let Some(entry) = ctx.entry.as_ref().filter(|e| !e.einstein_scales.is_empty()) {
        out.push(zero_check(
            ctx,
            S,
            "tractor.einstein-scales",
            "Dσ = 0 and ∇^D 𝔻σ = 0 for the stored Einstein scales",
            1e-8,
            ctx.max_over_points("scales", |p, _| {
                let geom = Geometry::new(&ctx.spec, p, &sp)?;
                let mut worst: f64 = 0.0;
                for s in &entry.einstein_scales {
                    let sigma = s.jet(&ctx.spec, p, &sp)?;
                    worst = worst.max(op_d(&geom, &sigma)?.value().max_abs());
                    worst = worst.max(tractor_connection_apply(&geom, &splitting_bd(&geom, &sigma)?)?.max_abs_value());
                }
                Ok(worst)
            }),
        ));
    }
    out
}
