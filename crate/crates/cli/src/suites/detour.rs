use conftrac::connection::{exterior_action, interior_action, op_m, twisted_d, twisted_delta, ym_current, Connection, TwistedForm};
use conftrac::detour::{check_complex, Bundle, CertificateReport, PolynomialConnection, Sequence};
use conftrac::sampling::{random_chart_jet, random_tensor};
use conftrac::tensor::Co;
use conftrac::Geometry;

use super::{zero_check, Context};
use crate::config::Suite;
use crate::report::Check;

const S: Suite = Suite::Detour;

/// Largest relative deviation of an obstruction from its predicted value.
pub const PREDICTION_RATIO_TOL: f64 = 1e-6;

/// Complex when the background vanishes; otherwise an expected-negative
/// check that also requires the predicted obstruction to match.
pub fn certificate_check(suite: Suite, id: &str, anchor: &str, rep: &CertificateReport, points: usize) -> Check {
    let residual = rep.first.max(rep.second);
    let rel = rep.prediction_error.map(|e| e / residual.max(f64::MIN_POSITIVE));
    let mut c = if rep.expected_complex {
        Check::expect_zero(suite, id, anchor, residual, rep.tol, points)
    } else {
        Check::expect_nonzero(suite, id, anchor, residual, rep.tol, points, rel.is_none_or(|r| r <= PREDICTION_RATIO_TOL))
    };
    let mut note = format!("background {:.3e}; compositions {:.3e} / {:.3e}", rep.background, rep.first, rep.second);
    if let (Some(r), false) = (rel, rep.expected_complex) {
        note.push_str(&format!("; prediction relative error {r:.1e}"));
    }
    c.note = Some(note);
    c
}

pub fn run(ctx: &Context) -> Vec<Check> {
    let n = ctx.dim();
    let pts = ctx.points.len();
    let sp = ctx.space();
    let mut out = Vec::new();

    let seqs: Vec<(Sequence, &str, &str)> = vec![
        (Sequence::Maxwell, "detour.maxwell", "δd ∘ d = 0 and δ ∘ δd = 0"),
        (Sequence::YmTwisted(Bundle::Forms), "detour.ym-twisted-forms.complex-composition", "M^∇ d^∇ = 0 and δ^∇ M^∇ = 0 on Λ¹-valued forms iff δ^∇F = 0"),
        (Sequence::YmTwisted(Bundle::T2), "detour.ym-twisted-t2.complex-composition", "M^∇ d^∇ = 0 and δ^∇ M^∇ = 0 on T²-valued forms iff δ^∇F = 0"),
        (Sequence::TractorEinstein, "detour.tractor-einstein.complex-composition", "M^T D = 0 and D* M^T = 0 iff B = 0"),
    ];
    for (seq, id, anchor) in seqs {
        if seq == Sequence::Maxwell && n != 4 {
            out.push(Check::info(S, id, anchor, 0.0, 0.0, 0).with_note("defined in dimension 4 only"));
            continue;
        }
        let tol = ctx.tol(if seq == Sequence::TractorEinstein { 1e-7 } else { 1e-8 });
        let seed = ctx.seed ^ 0x5eed_0000_0000_0000 ^ (id.len() as u64);
        match check_complex(seq, &ctx.spec, &ctx.points, ctx.order, seed, tol) {
            Ok(rep) => {
                out.push(certificate_check(S, id, anchor, &rep, pts));
                if seq == Sequence::TractorEinstein {
                    let err = rep.prediction_error.unwrap_or(f64::NAN);
                    let scale = rep.first.max(rep.second).max(1.0);
                    out.push(Check::expect_zero(
                        S,
                        "detour.tractor-einstein.obstruction-identity",
                        "M^T(Dσ) = -TFS(B_ab σ - (n-4) A_abc ∇^c σ) and its adjoint",
                        err / scale,
                        tol,
                        pts,
                    ));
                }
            }
            Err(e) => out.push(Check::failed(S, id, anchor, tol, pts, e)),
        }
    }

    out.push(zero_check(
        ctx,
        S,
        "detour.ym-source-identity",
        "M^∇ d^∇ f = ε(δ^∇F) f and δ^∇ M^∇ φ = -ι(δ^∇F) φ for arbitrary connections, relative to max(1, |lhs|)",
        1e-8,
        ctx.max_over_points("ym-source", |p, rng| {
            use rand::Rng;
            let geom = Geometry::new(&ctx.spec, p, &sp)?;
            let skew = rng.random_bool(0.5);
            let conn = PolynomialConnection::random(n, 2, 0.5, skew, rng);
            let r = conn.rank();
            let coeffs = conn.coefficients(&geom)?;
            let f = coeffs.curvature(&geom)?;
            let current = ym_current(&geom, &coeffs, &f)?;
            let s = TwistedForm::section((0..r).map(|_| random_chart_jet(&sp, 1.0, rng)).collect());
            let phi = TwistedForm { degree: 1, comps: (0..r).map(|_| random_tensor(&sp, n, &[Co], 1.0, rng)).collect() };
            let mdf = op_m(&geom, &coeffs, &f, &twisted_d(&geom, &coeffs, &s)?)?;
            let dm = twisted_delta(&geom, &coeffs, &op_m(&geom, &coeffs, &f, &phi)?)?;
            let e1 = mdf.sub(&exterior_action(&current, r, &s)?).max_abs_value() / mdf.max_abs_value().max(1.0);
            let e2 = dm.add(&interior_action(&geom, &current, r, &phi)?).max_abs_value() / dm.max_abs_value().max(1.0);
            Ok(e1.max(e2))
        }),
    ));
    out
}
