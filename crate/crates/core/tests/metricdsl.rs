use conftrac::metricdsl::{parse_expr, BinOp};
use conftrac::{parse_metric, ElemFn, Expr, JetSpace};
use proptest::prelude::*;

fn coords() -> Vec<String> {
    ["x", "y", "theta"].iter().map(|s| s.to_string()).collect()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..40).prop_map(|k| Expr::Const(k as f64 / 4.0)),
        (0usize..3).prop_map(Expr::Coord),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 3, |inner| {
        let funcs = prop::sample::select(vec![
            ElemFn::Sin,
            ElemFn::Cos,
            ElemFn::Tan,
            ElemFn::Exp,
            ElemFn::Log,
            ElemFn::Sqrt,
            ElemFn::Sinh,
            ElemFn::Cosh,
        ]);
        let ops = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]);
        let exps = prop::sample::select(vec![2.0, 3.0, -1.0, 0.5, -2.5]);
        prop_oneof![
            (funcs, inner.clone()).prop_map(|(f, e)| Expr::func(f, e)),
            inner.clone().prop_map(Expr::neg),
            (ops, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (inner, exps).prop_map(|(b, c)| Expr::pow(b, c)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let names = coords();
        let text = e.display(&names).to_string();
        let back = parse_expr(&text, &names).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn jet_value_matches_float_evaluation(e in expr(), p in prop::collection::vec(0.1f64..1.2, 3)) {
        let sp = JetSpace::new(3, 1);
        let cj: Vec<_> = (0..3).map(|k| conftrac::Jet::variable(&sp, k, p[k])).collect();
        let f = e.eval_f64(&p);
        if let (Ok(j), true) = (e.eval_jet(&cj), f.is_finite() && f.abs() < 1e12) {
            prop_assert!((j.value() - f).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }
}

#[test]
fn parsed_forms_match_closed_forms() {
    let names = coords();
    let cases: Vec<(&str, fn(f64, f64, f64) -> f64)> = vec![
        ("sin(theta)^2", |_, _, t| t.sin().powi(2)),
        ("-x^2 + y/x*2", |x, y, _| -x * x + y / x * 2.0),
        ("2^3^0.5", |_, _, _| 2f64.powf(3f64.powf(0.5))),
        ("exp(-y) * sqrt(1 + x^2) - log(theta)", |x, y, t| (-y).exp() * (1.0 + x * x).sqrt() - t.ln()),
        ("cosh(x)^-2 - tan(y) / sinh(theta)", |x, y, t| x.cosh().powi(-2) - y.tan() / t.sinh()),
        ("x - y - theta", |x, y, t| x - y - t),
        ("x / y / theta", |x, y, t| x / y / t),
        ("2*pi", |_, _, _| 2.0 * std::f64::consts::PI),
    ];
    let mut rng = conftrac::sampling::rng(3);
    for (text, f) in cases {
        let e = parse_expr(text, &names).unwrap();
        for _ in 0..20 {
            let p = conftrac::sampling::random_point(&[(0.2, 1.5), (0.2, 1.5), (0.2, 1.5)], &mut rng);
            let want = f(p[0], p[1], p[2]);
            let got = e.eval_f64(&p);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{text}: {got} vs {want}");
        }
    }
}

#[test]
fn file_format_round_trip_and_errors() {
    let text = "# round 2-sphere\ndimension = 2\nsignature = \"++\"\ncoords = theta phi\ng[1][1] = \"1\"\ng[2][2] = \"sin(theta)^2\"\n";
    let spec = parse_metric(text).unwrap();
    assert_eq!(spec.dim, 2);
    assert!(spec.component(0, 1).is_none());
    assert_eq!(parse_metric(&spec.to_file_string()).unwrap(), spec);
    let sp = JetSpace::new(2, 2);
    let g = spec.eval_component(1, 1, &[std::f64::consts::FRAC_PI_2, 0.0], &sp).unwrap();
    assert!((g.value() - 1.0).abs() < 1e-15 && g.derivative(&[1, 0]).unwrap().abs() < 1e-15);
    assert_eq!(spec.eval_component(0, 1, &[1.0, 0.0], &sp).unwrap().max_abs(), 0.0);

    let bad = "dimension = 3\nsignature = \"+++\"\ncoords = x1 x2 x3\ng[1][2] = \"x3 + \"\n";
    match parse_metric(bad) {
        Err(conftrac::Error::Parse(e)) => assert_eq!(e.line, 4),
        other => panic!("{other:?}"),
    }
    let undeclared = "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[1][1] = \"z\"\n";
    assert!(parse_metric(undeclared).is_err());
    let dup = "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[1][2] = \"1\"\ng[2][1] = \"2\"\n";
    assert!(parse_metric(dup).is_err());
    let short = "dimension = 3\nsignature = \"++\"\ncoords = x y z\n";
    assert!(parse_metric(short).is_err());
}
