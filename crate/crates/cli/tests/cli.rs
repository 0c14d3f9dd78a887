use std::process::Command;

use conftrac_cli::config::{RunConfig, Suite};
use conftrac_cli::report::{Report, Status};
use conftrac_cli::source::{export_entry, MetricSource};
use conftrac_cli::{run, RunError};

fn config(metric: &str, suites: &[Suite], points: usize) -> RunConfig {
    let mut c = RunConfig::new(MetricSource::from_arg(metric));
    c.suites = suites.to_vec();
    c.points = points;
    c.seed = 7;
    c
}

fn check<'a>(r: &'a Report, id: &str) -> &'a conftrac_cli::report::Check {
    r.checks.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("missing check {id}"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conftrac"))
}

#[test]
fn flat_metric_passes_every_suite() {
    let r = run(&config("flat4", &Suite::ALL, 10)).unwrap();
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed()).map(|c| &c.id).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
    for c in &r.checks {
        assert!(c.max_residual < 1e-9, "{} {:.3e}", c.id, c.max_residual);
    }
    assert!(r.ok);
    assert_eq!(r.summary.expected_negative, 0);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn generic_metric_obstructions_are_expected_negative() {
    let r = run(&config("generic_bump4", &[Suite::Detour, Suite::Deformation], 3)).unwrap();
    assert!(r.ok);
    for id in [
        "detour.tractor-einstein.complex-composition",
        "detour.ym-twisted-forms.complex-composition",
        "deformation.complex-composition",
    ] {
        let c = check(&r, id);
        assert!(c.expected_negative && c.status == Status::Pass, "{id}: {c:?}");
        assert!(c.max_residual > 1e-3);
    }
    assert!(check(&r, "detour.tractor-einstein.obstruction-identity").max_residual < 1e-7);
}

#[test]
fn identical_seeds_give_identical_json() {
    let a = run(&config("sphere3", &Suite::ALL, 4)).unwrap().to_json();
    let b = run(&config("sphere3", &Suite::ALL, 4)).unwrap().to_json();
    assert_eq!(a, b);
    let mut other = config("sphere3", &Suite::ALL, 4);
    other.seed = 8;
    assert_ne!(a, run(&other).unwrap().to_json());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], "conftrac-report/1");
    assert_eq!(v["environment"]["prng"], "chacha8-v1");
    assert_eq!(v["sample_points"].as_array().unwrap().len(), 4);
}

#[test]
fn obstruction_values_do_not_depend_on_jet_order() {
    let at = |order| {
        let mut c = config("generic_bump4", &[Suite::Detour], 2);
        c.jet_order = order;
        check(&run(&c).unwrap(), "detour.tractor-einstein.complex-composition").max_residual
    };
    let (a, b) = (at(6), at(7));
    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn exported_catalog_metrics_verify_like_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["sphere4", "schwarzschild", "flat3"] {
        let path = dir.path().join(format!("{name}.metric"));
        export_entry(name, &path).unwrap();
        let builtin = run(&config(name, &[Suite::Curvature, Suite::Tractor], 3)).unwrap();
        let mut fc = config(path.to_str().unwrap(), &[Suite::Curvature, Suite::Tractor], 3);
        fc.region = Some(conftrac::catalog::builtin(name).unwrap().region.clone());
        let file = run(&fc).unwrap();
        assert_eq!(builtin.sample_points, file.sample_points, "{name}");
        assert_eq!(builtin.metric.label, file.metric.label);
        for c in &file.checks {
            if c.status == Status::Info {
                continue;
            }
            let b = check(&builtin, &c.id);
            assert_eq!(b.max_residual.to_bits(), c.max_residual.to_bits(), "{name} {}", c.id);
        }
    }
}

#[test]
fn parse_errors_report_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.metric");
    std::fs::write(&path, "dimension = 2\nsignature = \"++\"\ncoords = x y\ng[1][1] = \"1 + x *\"\n").unwrap();
    match run(&config(path.to_str().unwrap(), &[Suite::Curvature], 2)) {
        Err(RunError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
    let out = bin().args(["verify", "--metric", path.to_str().unwrap(), "--suite", "curvature"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("{}:4:", path.display())), "{err}");
}

#[test]
fn missing_files_and_unknown_names_are_io_errors() {
    let out = bin().args(["verify", "--metric", "/nonexistent/nowhere.metric"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.metric"));
}

#[test]
fn jet_order_below_suite_minimum_is_rejected() {
    let mut c = config("flat4", &[Suite::Detour], 2);
    c.jet_order = 5;
    let e = run(&c).unwrap_err();
    assert!(matches!(e, RunError::Config(_)));
    assert!(e.to_string().contains("detour"), "{e}");
    let out = bin().args(["verify", "--metric", "flat4", "--suite", "tractor", "--jet-order", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["verify", "--metric", "flat4", "--suite", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_writes_json_to_file_and_lists_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let st = bin()
        .args(["verify", "--metric", "flat3", "--suite", "curvature,tractor", "--points", "2", "--format", "json"])
        .arg("--out")
        .arg(&out_path)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["config"]["suites"], serde_json::json!(["curvature", "tractor"]));

    let list = bin().args(["catalog", "list"]).output().unwrap();
    let text = String::from_utf8_lossy(&list.stdout);
    assert_eq!(text.lines().count(), conftrac::catalog::names().len());
    assert!(text.contains("generic_bump4"));

    let exported = dir.path().join("s.metric");
    let st = bin().args(["catalog", "export", "s2xs2"]).arg(&exported).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let back = conftrac::parse_metric(&std::fs::read_to_string(&exported).unwrap()).unwrap();
    assert_eq!(back.dim, 4);
}

#[test]
fn failing_checks_give_exit_code_one() {
    let mut c = config("generic_bump4", &[Suite::Curvature], 2);
    c.tol = Some(1e-40);
    let r = run(&c).unwrap();
    let st = bin()
        .args(["verify", "--metric", "generic_bump4", "--suite", "curvature", "--points", "2", "--tol", "1e-40"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(r.exit_code()));
}
