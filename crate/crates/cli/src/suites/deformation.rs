use conftrac::detour::{check_complex, Sequence};

use super::detour::certificate_check;
use super::Context;
use crate::config::Suite;
use crate::report::Check;

const S: Suite = Suite::Deformation;

pub fn run(ctx: &Context) -> Vec<Check> {
    let id = "deformation.complex-composition";
    let anchor = "B K₀ = 0 and K₀* B = 0 (linearized Bach) iff Bach-flat, dimension 4";
    let pts = ctx.points.len();
    if ctx.dim() != 4 {
        return vec![Check::info(S, id, anchor, 0.0, 0.0, 0).with_note("defined in dimension 4 only")];
    }
    let tol = ctx.tol(1e-6);
    match check_complex(Sequence::Deformation, &ctx.spec, &ctx.points, ctx.order, ctx.seed ^ 0xdef0, tol) {
        Ok(rep) => vec![certificate_check(S, id, anchor, &rep, pts)],
        Err(e) => vec![Check::failed(S, id, anchor, tol, pts, e)],
    }
}
