use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::source::MetricSource;
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Curvature,
    Tractor,
    Detour,
    Prolong,
    Deformation,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Curvature, Suite::Tractor, Suite::Detour, Suite::Prolong, Suite::Deformation];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Curvature => "curvature",
            Suite::Tractor => "tractor",
            Suite::Detour => "detour",
            Suite::Prolong => "prolong",
            Suite::Deformation => "deformation",
        }
    }

    /// Smallest metric jet order at which every check of the suite is exact.
    pub fn min_jet_order(self) -> usize {
        match self {
            Suite::Curvature => 4,
            Suite::Tractor => 4,
            Suite::Detour => 6,
            Suite::Prolong => 3,
            Suite::Deformation => 5,
        }
    }

    /// Parses a comma-separated list; `all` selects every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Suite::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err("no suite selected".into());
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected curvature, tractor, detour, prolong, deformation or all)"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected text or json)")),
        }
    }
}

pub const DEFAULT_JET_ORDER: usize = 6;
pub const DEFAULT_POINTS: usize = 10;
pub const MAX_JET_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub metric: MetricSource,
    pub suites: Vec<Suite>,
    pub points: usize,
    pub seed: u64,
    /// Overrides every check's default tolerance when set.
    pub tol: Option<f64>,
    pub jet_order: usize,
    pub format: Format,
    /// Sampling box for metrics read from files; catalog entries carry their own.
    pub region: Option<Vec<(f64, f64)>>,
}

impl RunConfig {
    pub fn new(metric: MetricSource) -> Self {
        RunConfig {
            metric,
            suites: Suite::ALL.to_vec(),
            points: DEFAULT_POINTS,
            seed: 0,
            tol: None,
            jet_order: DEFAULT_JET_ORDER,
            format: Format::Text,
            region: None,
        }
    }

    pub fn required_jet_order(&self) -> usize {
        self.suites.iter().map(|s| s.min_jet_order()).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.suites.is_empty() {
            return Err(RunError::Config("no suite selected".into()));
        }
        let need = self.required_jet_order();
        if self.jet_order < need {
            let worst = self.suites.iter().filter(|s| s.min_jet_order() > self.jet_order).map(|s| s.name()).collect::<Vec<_>>();
            return Err(RunError::Config(format!(
                "jet order {} is below the minimum {} required by suite(s) {}",
                self.jet_order,
                need,
                worst.join(", ")
            )));
        }
        if self.jet_order > MAX_JET_ORDER {
            return Err(RunError::Config(format!("jet order {} exceeds the supported maximum {MAX_JET_ORDER}", self.jet_order)));
        }
        if self.points == 0 {
            return Err(RunError::Config("at least one sample point is required".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(RunError::Config(format!("tolerance must be positive and finite, got {t}")));
            }
        }
        if let Some(r) = &self.region {
            if r.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(RunError::Config("every region interval needs lo < hi".into()));
            }
        }
        Ok(())
    }
}

/// Parses `lo:hi,lo:hi,...`.
pub fn parse_region(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part.split_once(':').ok_or_else(|| format!("interval `{part}` is not of the form lo:hi"))?;
            let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number `{lo}`"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number `{hi}`"))?;
            Ok((lo, hi))
        })
        .collect()
}
