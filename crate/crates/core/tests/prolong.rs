use std::f64::consts::FRAC_PI_2;

use conftrac::catalog::builtin;
use conftrac::prolong::{killing_data, parallel_transport, prolonged_curvature_rank, Curve, KillingConnection, KillingProlongValue};
use conftrac::tractor::TractorConnection;
use conftrac::{Geometry, JetSpace, MetricSpec};
use proptest::prelude::*;

fn killing_fiber(spec: &MetricSpec, field: &conftrac::catalog::VectorField, p: &[f64]) -> Vec<f64> {
    let n = spec.dim;
    let sp = JetSpace::new(n, 2);
    let geom = Geometry::new(spec, p, &sp).unwrap();
    let (k, mu, sym) = killing_data(&geom, &field.jet(spec, p, &sp).unwrap()).unwrap();
    assert!(sym < 1e-10);
    let kv = k.value().comps.clone();
    let muv = mu.value().comps.clone();
    let anti: Vec<f64> = (0..n * n).map(|i| 0.5 * (muv[i] - muv[(i % n) * n + i / n])).collect();
    KillingProlongValue::new(kv, anti).unwrap().to_fiber()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn einstein_tractor_is_transported_unchanged() {
    let e = builtin("sphere4").unwrap();
    let quarter = Curve::Segment { from: vec![0.3, 1.0, 1.2, 0.4], to: vec![0.3 + FRAC_PI_2, 1.0, 1.2, 0.4] };
    let v0 = [1.0, 0.0, 0.0, 0.0, 0.0, -0.5];
    let res = parallel_transport(&TractorConnection { n: 4 }, &e.spec, &quarter, &v0, 1e-10).unwrap();
    assert!(max_diff(&res.value, &v0) < 1e-7, "{:?}", res.value);
    assert!(res.steps > 1);
}

#[test]
fn killing_data_transport_is_path_independent() {
    for (name, from, to, detour) in [
        ("sphere4", vec![0.5, 0.6, 0.7, 0.2], vec![1.6, 1.9, 1.4, 2.0], vec![1.5, 0.7, 1.8, 0.5]),
        ("schwarzschild", vec![0.1, 3.5, 0.6, 0.3], vec![0.8, 8.0, 2.1, 2.5], vec![0.2, 7.0, 1.0, 0.8]),
    ] {
        let e = builtin(name).unwrap();
        let conn = KillingConnection { n: 4 };
        for field in &e.killing_fields {
            let v0 = killing_fiber(&e.spec, field, &from);
            let direct = Curve::Segment { from: from.clone(), to: to.clone() };
            let bent = Curve::polygon(&[from.clone(), detour.clone(), to.clone()], false);
            let a = parallel_transport(&conn, &e.spec, &direct, &v0, 1e-10).unwrap();
            let b = parallel_transport(&conn, &e.spec, &bent, &v0, 1e-10).unwrap();
            let want = killing_fiber(&e.spec, field, &to);
            assert!(max_diff(&a.value, &b.value) < 1e-6, "{name} {}", field.label);
            assert!(max_diff(&a.value, &want) < 1e-6, "{name} {}", field.label);
        }
    }
}

#[test]
fn arc_loop_on_flat_space_has_trivial_holonomy() {
    let e = builtin("flat4").unwrap();
    let loop_ = Curve::Arc { center: vec![0.0, 0.0, 0.3, 0.0], radius: 0.7, axes: (0, 1), start: 0.0, end: std::f64::consts::TAU };
    let v0: Vec<f64> = (0..10).map(|k| (k as f64 - 4.5) / 3.0).collect();
    let res = parallel_transport(&KillingConnection { n: 4 }, &e.spec, &loop_, &v0, 1e-10).unwrap();
    assert!(max_diff(&res.value, &v0) < 1e-7);
}

#[test]
fn transport_reports_underflow() {
    let spec = MetricSpec::from_strs("sing", "++", &["x", "y"], &[(0, 0, "1/x^2"), (1, 1, "1/x^2")]).unwrap();
    let c = Curve::Segment { from: vec![-1.0, 0.0], to: vec![1.0, 0.3] };
    let r = parallel_transport(&KillingConnection { n: 2 }, &spec, &c, &[1.0, 0.0, 0.0], 1e-6);
    match r {
        Err(conftrac::Error::Transport(msg)) => assert!(msg.contains("underflow"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kernel_dimension_is_monotone(pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..5)) {
        let e = builtin("generic_bump4").unwrap();
        let r = prolonged_curvature_rank(&KillingConnection { n: 4 }, &e.spec, &pts).unwrap();
        prop_assert!(r.kernel_by_point.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.kernel < 10);
    }
}
