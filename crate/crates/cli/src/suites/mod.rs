//! Check implementations grouped by suite.

mod curvature;
mod deformation;
mod detour;
mod prolong;
mod tractor;

use std::sync::Arc;

use conftrac::catalog::{CatalogEntry, Facts};
use conftrac::sampling::{random_point, substream, SampleRng};
use conftrac::{JetSpace, MetricSpec};
use rayon::prelude::*;

use crate::config::{RunConfig, Suite};
use crate::report::Check;
use crate::source::LoadedMetric;
use crate::RunError;

/// Everything a suite needs: the metric, sample points and numeric settings.
pub struct Context {
    pub spec: MetricSpec,
    pub entry: Option<CatalogEntry>,
    pub region: Vec<(f64, f64)>,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub order: usize,
    pub tol: Option<f64>,
}

impl Context {
    pub fn new(config: &RunConfig, metric: &LoadedMetric) -> Result<Self, RunError> {
        let n = metric.spec.dim;
        let region = match (&config.region, &metric.entry) {
            (Some(r), _) => r.clone(),
            (None, Some(e)) => e.region.clone(),
            (None, None) => vec![(-0.5, 0.5); n],
        };
        if region.len() != n {
            return Err(RunError::Config(format!("region has {} intervals, metric has dimension {n}", region.len())));
        }
        let mut rng = substream(config.seed, 0);
        let points = (0..config.points).map(|_| random_point(&region, &mut rng)).collect();
        Ok(Context {
            spec: metric.spec.clone(),
            entry: metric.entry.clone(),
            region,
            points,
            seed: config.seed,
            order: config.jet_order,
            tol: config.tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn space(&self) -> Arc<JetSpace> {
        JetSpace::new(self.dim(), self.order)
    }

    pub fn facts(&self) -> Option<Facts> {
        self.entry.as_ref().map(|e| e.facts)
    }

    /// Evaluates `f` at every sample point in parallel; each point gets its own
    /// random stream derived from the seed and `tag`, so results do not depend
    /// on scheduling.
    pub fn per_point<T, F>(&self, tag: &str, f: F) -> conftrac::Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], &mut SampleRng) -> conftrac::Result<T> + Sync,
    {
        let key = fnv1a(tag);
        self.points
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let mut rng = substream(self.seed ^ key, k as u64 + 1);
                f(p, &mut rng)
            })
            .collect()
    }

    /// Maximum of a per-point residual.
    pub fn max_over_points<F>(&self, tag: &str, f: F) -> conftrac::Result<f64>
    where
        F: Fn(&[f64], &mut SampleRng) -> conftrac::Result<f64> + Sync,
    {
        Ok(self.per_point(tag, f)?.into_iter().fold(0.0, f64::max))
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Builds a zero-expected check from a fallible residual computation.
pub(crate) fn zero_check(
    ctx: &Context,
    suite: Suite,
    id: &str,
    anchor: &str,
    default_tol: f64,
    residual: conftrac::Result<f64>,
) -> Check {
    let tol = ctx.tol(default_tol);
    match residual {
        Ok(r) => Check::expect_zero(suite, id, anchor, r, tol, ctx.points.len()),
        Err(e) => Check::failed(suite, id, anchor, tol, ctx.points.len(), e),
    }
}

pub fn run_suite(suite: Suite, ctx: &Context) -> Vec<Check> {
    match suite {
        Suite::Curvature => curvature::run(ctx),
        Suite::Tractor => tractor::run(ctx),
        Suite::Detour => detour::run(ctx),
        Suite::Prolong => prolong::run(ctx),
        Suite::Deformation => deformation::run(ctx),
    }
}

/// `Σ c_k x_k + Σ d_k x_k^2` with small random coefficients.
/// Small quadratic weight centred on `p`, so `e^{2ω}` stays of order one there.
pub(crate) fn random_weight(p: &[f64], rng: &mut SampleRng) -> conftrac::Expr {
    use conftrac::metricdsl::BinOp;
    use conftrac::Expr;
    use rand::Rng;
    let mut e = Expr::Const(rng.random_range(-0.2..0.2));
    for (k, &x) in p.iter().enumerate() {
        let d = Expr::binary(BinOp::Sub, Expr::Coord(k), Expr::Const(x));
        let lin = Expr::binary(BinOp::Mul, Expr::Const(rng.random_range(-0.3..0.3)), d.clone());
        let quad = Expr::binary(BinOp::Mul, Expr::Const(rng.random_range(-0.2..0.2)), Expr::pow(d, 2.0));
        e = Expr::binary(BinOp::Add, e, Expr::binary(BinOp::Add, lin, quad));
    }
    e
}
