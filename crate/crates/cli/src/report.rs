use serde::Serialize;

use crate::config::{RunConfig, Suite};
use crate::source::LoadedMetric;

/// Version tag of the JSON layout.
pub const SCHEMA: &str = "conftrac-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Measured only; no expectation available.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub suite: Suite,
    /// The identity or property being certified.
    pub anchor: String,
    pub max_residual: f64,
    pub tol: f64,
    pub status: Status,
    /// Passes when the residual exceeds the tolerance.
    pub expected_negative: bool,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn expect_zero(suite: Suite, id: &str, anchor: &str, residual: f64, tol: f64, points: usize) -> Self {
        let status = if residual <= tol { Status::Pass } else { Status::Fail };
        Check { id: id.into(), suite, anchor: anchor.into(), max_residual: residual, tol, status, expected_negative: false, points, note: None }
    }

    /// `extra` carries any further condition an obstruction must satisfy.
    pub fn expect_nonzero(suite: Suite, id: &str, anchor: &str, residual: f64, tol: f64, points: usize, extra: bool) -> Self {
        let status = if residual > tol && extra { Status::Pass } else { Status::Fail };
        Check { id: id.into(), suite, anchor: anchor.into(), max_residual: residual, tol, status, expected_negative: true, points, note: None }
    }

    pub fn info(suite: Suite, id: &str, anchor: &str, residual: f64, tol: f64, points: usize) -> Self {
        Check { id: id.into(), suite, anchor: anchor.into(), max_residual: residual, tol, status: Status::Info, expected_negative: false, points, note: None }
    }

    /// Zero if `expected` holds, otherwise an obstruction; `None` is informational.
    pub fn expect(suite: Suite, id: &str, anchor: &str, residual: f64, tol: f64, points: usize, expected: Option<bool>) -> Self {
        match expected {
            Some(true) => Check::expect_zero(suite, id, anchor, residual, tol, points),
            Some(false) => Check::expect_nonzero(suite, id, anchor, residual, tol, points, true),
            None => Check::info(suite, id, anchor, residual, tol, points),
        }
    }

    pub fn failed(suite: Suite, id: &str, anchor: &str, tol: f64, points: usize, error: impl std::fmt::Display) -> Self {
        Check {
            id: id.into(),
            suite,
            anchor: anchor.into(),
            max_residual: f64::NAN,
            tol,
            status: Status::Fail,
            expected_negative: false,
            points,
            note: Some(format!("error: {error}")),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricInfo {
    pub label: String,
    pub source: String,
    pub dim: usize,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub suites: Vec<Suite>,
    pub points: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub jet_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub jet_order: usize,
    pub seed: u64,
    pub prng: &'static str,
    pub engine_version: &'static str,
    pub cli_version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub info: usize,
    pub expected_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub metric: MetricInfo,
    pub config: ConfigEcho,
    pub environment: Environment,
    pub sample_points: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub ok: bool,
}

impl Report {
    pub fn new(config: &RunConfig, metric: &LoadedMetric, sample_points: Vec<Vec<f64>>, checks: Vec<Check>) -> Self {
        let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
        let summary = Summary {
            total: checks.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            info: count(Status::Info),
            expected_negative: checks.iter().filter(|c| c.expected_negative && c.status == Status::Pass).count(),
        };
        Report {
            schema: SCHEMA,
            metric: MetricInfo {
                label: metric.spec.label.clone(),
                source: metric.source.describe(),
                dim: metric.spec.dim,
                signature: metric.spec.signature_string(),
            },
            config: ConfigEcho {
                suites: config.suites.clone(),
                points: config.points,
                seed: config.seed,
                tol: config.tol,
                jet_order: config.jet_order,
            },
            environment: Environment {
                jet_order: config.jet_order,
                seed: config.seed,
                prng: conftrac::sampling::PRNG_NAME,
                engine_version: conftrac::VERSION,
                cli_version: env!("CARGO_PKG_VERSION"),
            },
            ok: summary.failed == 0,
            summary,
            sample_points,
            checks,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "metric {} ({}, n={}, signature {})\n",
            self.metric.label, self.metric.source, self.metric.dim, self.metric.signature
        ));
        out.push_str(&format!(
            "jet order {}  seed {}  points {}  prng {}  engine {}\n\n",
            self.environment.jet_order, self.environment.seed, self.config.points, self.environment.prng, self.environment.engine_version
        ));
        out.push_str(&format!("{:<44} {:<6} {:>12} {:>9} {:>5}  {}\n", "CHECK", "STATUS", "RESIDUAL", "TOL", "PTS", "NOTE"));
        for c in &self.checks {
            let status = match (c.status, c.expected_negative) {
                (Status::Pass, true) => "PASS*",
                (Status::Pass, false) => "PASS",
                (Status::Fail, _) => "FAIL",
                (Status::Info, _) => "INFO",
            };
            out.push_str(&format!(
                "{:<44} {:<6} {:>12.3e} {:>9.1e} {:>5}  {}\n",
                c.id,
                status,
                c.max_residual,
                c.tol,
                c.points,
                c.note.as_deref().unwrap_or("")
            ));
        }
        out.push_str(&format!(
            "\n{} checks: {} passed ({} expected-negative), {} failed, {} info\n",
            self.summary.total, self.summary.passed, self.summary.expected_negative, self.summary.failed, self.summary.info
        ));
        out.push_str("PASS* = expected-negative check: residual exceeds tolerance as predicted\n");
        out
    }
}
