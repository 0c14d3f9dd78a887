//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use conftrac::catalog::{self, CatalogEntry};
use conftrac::detour::{check_complex, Bundle, Sequence};
use conftrac::metricdsl::{parse_expr, BinOp};
use conftrac::prolong::{killing_data, parallel_transport, prolonged_curvature_rank, Curve, KillingConnection, KillingProlongValue};
use conftrac::sampling::{rng as seeded, substream};
use conftrac::{parse_metric, ElemFn, Expr, Geometry, JetSpace, MetricSpec};
use conftrac_cli::config::{RunConfig, Suite};
use conftrac_cli::report::Report;
use conftrac_cli::source::MetricSource;
use rand::Rng;

const SEED: u64 = 20;
const ORDER: usize = 6;
const DIM4: [&str; 8] =
    ["flat4", "minkowski4", "sphere4", "hyperbolic4", "conf_flat_poly4", "schwarzschild", "s2xs2", "generic_bump4"];

type Outcome = Result<String, String>;

fn report(metric: &str, suites: &[Suite], points: usize) -> Result<Report, String> {
    let mut c = RunConfig::new(MetricSource::Catalog(metric.into()));
    c.suites = suites.to_vec();
    c.points = points;
    c.seed = SEED;
    c.jet_order = ORDER;
    conftrac_cli::run(&c).map_err(|e| format!("{metric}: {e}"))
}

fn residual(r: &Report, id: &str) -> Result<f64, String> {
    r.checks.iter().find(|c| c.id == id).map(|c| c.max_residual).ok_or_else(|| format!("{}: no check {id}", r.metric.label))
}

/// Largest residual across metrics; fails if any exceeds `tol` or is NaN.
fn below(label: &str, tol: f64, values: &[(String, f64)]) -> Outcome {
    let worst = values.iter().fold(0.0f64, |m, (_, v)| if v.is_nan() { f64::NAN } else { m.max(*v) });
    match values.iter().find(|(_, v)| !(*v < tol)) {
        Some((who, v)) => Err(format!("{label}: {who} residual {v:.3e} >= {tol:.0e}")),
        None => Ok(format!("{label} max {worst:.2e} < {tol:.0e}")),
    }
}

fn entry(name: &str) -> CatalogEntry {
    catalog::builtin(name).expect("catalog entry")
}

fn points(e: &CatalogEntry, count: usize, stream: u64) -> Vec<Vec<f64>> {
    catalog::sample_points(e, count, &mut substream(SEED, stream))
}

fn c1() -> Outcome {
    let mut sq = Vec::new();
    let mut col = Vec::new();
    for m in ["flat4", "sphere4", "hyperbolic4", "schwarzschild", "s2xs2", "generic_bump4"] {
        let r = report(m, &[Suite::Tractor], 20)?;
        sq.push((m.to_string(), residual(&r, "tractor.commuting-square")?));
        col.push((m.to_string(), residual(&r, "tractor.commuting-column")?));
    }
    Ok(format!("{}; {}", below("square", 1e-8, &sq)?, below("column", 1e-8, &col)?))
}

fn c2() -> Outcome {
    let mut v = Vec::new();
    for m in DIM4.iter().chain(&["flat3", "sphere3"]) {
        let e = entry(m);
        let rep = check_complex(Sequence::TractorEinstein, &e.spec, &points(&e, 10, 2), ORDER, SEED, 1e-7).map_err(|e| e.to_string())?;
        v.push((m.to_string(), rep.prediction_error.unwrap_or(f64::NAN)));
    }
    below("obstruction identity", 1e-7, &v)
}

fn bach_norm(spec: &MetricSpec, p: &[f64]) -> Result<f64, String> {
    let geom = Geometry::new(spec, p, &JetSpace::new(spec.dim, 4)).map_err(|e| e.to_string())?;
    let b = geom.bach().map_err(|e| e.to_string())?;
    Ok(b.value().comps.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

fn c3() -> Outcome {
    let mut v = Vec::new();
    for m in ["sphere4", "hyperbolic4", "schwarzschild", "s2xs2"] {
        let e = entry(m);
        let mut worst = 0.0f64;
        for p in points(&e, 10, 3) {
            worst = worst.max(bach_norm(&e.spec, &p)?);
        }
        v.push((m.to_string(), worst));
    }
    let zero = below("Einstein |B|", 1e-7, &v)?;
    let g = entry("generic_bump4");
    let mut biggest = 0.0f64;
    for p in points(&g, 10, 3) {
        biggest = biggest.max(bach_norm(&g.spec, &p)?);
    }
    if biggest > 1e-3 {
        Ok(format!("{zero}; generic_bump4 max |B| {biggest:.2e} > 1e-3"))
    } else {
        Err(format!("generic_bump4 max |B| {biggest:.2e} <= 1e-3"))
    }
}

fn c4() -> Outcome {
    let mut src = Vec::new();
    for m in ["generic_bump4", "sphere4"] {
        let r = report(m, &[Suite::Detour], 10)?;
        src.push((m.to_string(), residual(&r, "detour.ym-source-identity")?));
    }
    let mut comp = Vec::new();
    for m in catalog::names().iter().filter(|m| entry(m).facts.einstein) {
        let e = entry(m);
        for b in [Bundle::Forms, Bundle::T2] {
            let rep = check_complex(Sequence::YmTwisted(b), &e.spec, &points(&e, 5, 4), ORDER, SEED, 1e-8).map_err(|e| e.to_string())?;
            if !rep.expected_complex {
                return Err(format!("{m}: Levi-Civita connection not Yang-Mills (background {:.2e})", rep.background));
            }
            comp.push((format!("{m}/{}", if b == Bundle::Forms { "forms" } else { "t2" }), rep.first.max(rep.second)));
        }
    }
    Ok(format!("{} (20 pairs); {}", below("source", 1e-8, &src)?, below("compositions", 1e-8, &comp)?))
}

fn c5() -> Outcome {
    let r = report("generic_bump4", &[Suite::Tractor], 10)?;
    let blocks = [("generic_bump4".to_string(), residual(&r, "tractor.divergence-blocks")?)];
    let zeros = [("generic_bump4".to_string(), residual(&r, "tractor.divergence-structural-zeros")?)];
    let middle = [("generic_bump4".to_string(), residual(&r, "tractor.divergence-middle-dim4")?)];
    Ok(format!(
        "{}; {}; {}",
        below("blocks", 1e-8, &blocks)?,
        below("structural zeros", 1e-9, &zeros)?,
        below("middle", 1e-9, &middle)?
    ))
}

fn killing_fiber(spec: &MetricSpec, f: &catalog::VectorField, p: &[f64]) -> conftrac::Result<Vec<f64>> {
    let n = spec.dim;
    let sp = JetSpace::new(n, 2);
    let geom = Geometry::new(spec, p, &sp)?;
    let (k, mu, _) = killing_data(&geom, &f.jet(spec, p, &sp)?)?;
    let m = mu.value().comps;
    let anti: Vec<f64> = (0..n * n).map(|i| 0.5 * (m[i] - m[(i % n) * n + i / n])).collect();
    Ok(KillingProlongValue::new(k.value().comps, anti)?.to_fiber())
}

fn c6() -> Outcome {
    let conn = KillingConnection { n: 4 };
    let mut kernels = Vec::new();
    for (m, want_full) in [("flat4", true), ("sphere4", true), ("generic_bump4", false)] {
        let e = entry(m);
        let r = prolonged_curvature_rank(&conn, &e.spec, &points(&e, 10, 6)).map_err(|e| e.to_string())?;
        if (r.kernel == 10) != want_full {
            return Err(format!("{m}: kernel {}", r.kernel));
        }
        kernels.push(format!("{m} {}", r.kernel));
    }
    let mut worst = 0.0f64;
    for m in ["sphere4", "schwarzschild"] {
        let e = entry(m);
        let base: Vec<f64> = e.region.iter().map(|(lo, hi)| lo + 0.4 * (hi - lo)).collect();
        let step: Vec<f64> = e.region.iter().map(|(lo, hi)| 0.15 * (hi - lo)).collect();
        let shifted = |i: usize, j: usize, si: f64, sj: f64| {
            let mut q = base.clone();
            q[i] += si * step[i];
            q[j] += sj * step[j];
            q
        };
        let square = Curve::polygon(&[base.clone(), shifted(0, 1, 1.0, 0.0), shifted(0, 1, 1.0, 1.0), shifted(0, 1, 0.0, 1.0)], true);
        let r = step[2];
        let mut center = base.clone();
        center[2] -= r;
        let arc = Curve::Arc { center, radius: r, axes: (2, 1), start: 0.0, end: 2.0 * std::f64::consts::PI };
        for f in &e.killing_fields {
            let v0 = killing_fiber(&e.spec, f, &base).map_err(|e| e.to_string())?;
            let a = parallel_transport(&conn, &e.spec, &square, &v0, 1e-10).map_err(|e| e.to_string())?;
            let b = parallel_transport(&conn, &e.spec, &arc, &v0, 1e-10).map_err(|e| e.to_string())?;
            let d = a.value.iter().zip(&b.value).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    if worst < 1e-6 {
        Ok(format!("kernels {}; loop disagreement {worst:.2e} < 1e-6", kernels.join(", ")))
    } else {
        Err(format!("loop disagreement {worst:.2e}"))
    }
}

fn c7() -> Outcome {
    let mut inv = Vec::new();
    let mut weyl = Vec::new();
    let mut sig = Vec::new();
    for m in DIM4 {
        let r = report(m, &[Suite::Curvature, Suite::Tractor], 5)?;
        inv.push((m.to_string(), residual(&r, "tractor.conformal-invariance")?));
        weyl.push((m.to_string(), residual(&r, "curvature.weyl-conformal-weight")?));
        sig.push((m.to_string(), residual(&r, "tractor.metric-signature")?));
    }
    Ok(format!(
        "{}; {}; {}",
        below("invariance (5 omega)", 1e-8, &inv)?,
        below("Weyl law", 1e-8, &weyl)?,
        below("signature mismatches", 0.5, &sig)?
    ))
}

fn c8() -> Outcome {
    let mut v = Vec::new();
    for m in ["conf_flat_poly4", "sphere4"] {
        let e = entry(m);
        let rep = check_complex(Sequence::Deformation, &e.spec, &points(&e, 5, 8), ORDER, SEED, 1e-6).map_err(|e| e.to_string())?;
        v.push((m.to_string(), rep.first));
    }
    below("B(K0 v), 5 v", 1e-6, &v)
}

fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.5) { Expr::Const(rng.random_range(0..40) as f64 / 4.0) } else { Expr::Coord(rng.random_range(0..3)) };
    }
    const FUNCS: [ElemFn; 8] =
        [ElemFn::Sin, ElemFn::Cos, ElemFn::Tan, ElemFn::Exp, ElemFn::Log, ElemFn::Sqrt, ElemFn::Sinh, ElemFn::Cosh];
    const OPS: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];
    match rng.random_range(0..4) {
        0 => Expr::func(FUNCS[rng.random_range(0..FUNCS.len())], random_expr(rng, depth - 1)),
        1 => Expr::neg(random_expr(rng, depth - 1)),
        2 => Expr::binary(OPS[rng.random_range(0..4)], random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        _ => Expr::pow(random_expr(rng, depth - 1), [2.0, 3.0, -1.0, 0.5, -2.5][rng.random_range(0..5)]),
    }
}

fn c9() -> Outcome {
    let names: Vec<String> = ["x", "y", "theta"].iter().map(|s| s.to_string()).collect();
    let mut rng = seeded(SEED);
    for _ in 0..500 {
        let e = random_expr(&mut rng, 5);
        let text = e.display(&names).to_string();
        if parse_expr(&text, &names).map_err(|e| e.to_string())? != e {
            return Err(format!("round trip changed {text}"));
        }
    }
    for m in catalog::names() {
        let e = entry(m);
        let back = parse_metric(&e.export()).map_err(|err| format!("{m}: {err}"))?;
        if back.to_file_string() != e.spec.to_file_string() {
            return Err(format!("{m}: export does not round-trip"));
        }
    }

    // Christoffel derivatives from jets against Richardson-extrapolated central differences.
    let mut fd_worst = 0.0f64;
    for m in ["generic_bump4", "schwarzschild", "sphere3"] {
        let e = entry(m);
        let n = e.dim();
        for p in points(&e, 3, 9) {
            let sp = JetSpace::new(n, 3);
            let gamma = Geometry::new(&e.spec, &p, &sp).map_err(|e| e.to_string())?.christoffel().clone();
            let low = JetSpace::new(n, 1);
            let value_at = |q: &[f64]| -> Result<Vec<f64>, String> {
                Ok(Geometry::new(&e.spec, q, &low).map_err(|e| e.to_string())?.christoffel().value().comps)
            };
            for k in 0..n {
                let central = |h: f64| -> Result<Vec<f64>, String> {
                    let (mut a, mut b) = (p.clone(), p.clone());
                    a[k] += h;
                    b[k] -= h;
                    let (fa, fb) = (value_at(&a)?, value_at(&b)?);
                    Ok(fa.iter().zip(&fb).map(|(x, y)| (x - y) / (2.0 * h)).collect())
                };
                let (d1, d2) = (central(1e-3)?, central(5e-4)?);
                let mut alpha = vec![0usize; n];
                alpha[k] = 1;
                for (i, c) in gamma.comps().iter().enumerate() {
                    let fd = (4.0 * d2[i] - d1[i]) / 3.0;
                    let jet = c.derivative(&alpha).map_err(|e| e.to_string())?;
                    fd_worst = fd_worst.max((jet - fd).abs() / jet.abs().max(1.0));
                }
            }
        }
    }
    if fd_worst > 1e-7 {
        return Err(format!("jet vs finite difference {fd_worst:.2e}"));
    }

    let once = report("generic_bump4", &Suite::ALL, 4)?.to_json();
    let twice = report("generic_bump4", &Suite::ALL, 4)?.to_json();
    if once != twice {
        return Err("reruns differ".into());
    }
    Ok(format!("500 random expressions and {} exports round-trip; jet vs FD {fd_worst:.1e}; rerun byte-identical", catalog::names().len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("commuting square and column", c1),
        ("tractor-Einstein key identity", c2),
        ("Einstein metrics are Bach-flat", c3),
        ("Yang-Mills source identity and compositions", c4),
        ("tractor curvature divergence blocks", c5),
        ("Killing prolongation bound and holonomy", c6),
        ("conformal invariance", c7),
        ("deformation slice", c8),
        ("parser, jets, determinism", c9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg} ({secs:.1}s)", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
