use std::path::{Path, PathBuf};

use conftrac::catalog::{self, CatalogEntry};
use conftrac::{parse_metric, MetricSpec};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricSource {
    Catalog(String),
    File(PathBuf),
}

impl MetricSource {
    /// Catalog names win over paths; anything else is read as a file.
    pub fn from_arg(arg: &str) -> Self {
        if catalog::names().contains(&arg) {
            MetricSource::Catalog(arg.to_string())
        } else {
            MetricSource::File(PathBuf::from(arg))
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MetricSource::Catalog(n) => format!("catalog:{n}"),
            MetricSource::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedMetric {
    pub source: MetricSource,
    pub spec: MetricSpec,
    pub entry: Option<CatalogEntry>,
}

pub fn load_metric(source: &MetricSource) -> Result<LoadedMetric, RunError> {
    match source {
        MetricSource::Catalog(name) => {
            let entry = catalog::builtin(name)?;
            Ok(LoadedMetric { source: source.clone(), spec: entry.spec.clone(), entry: Some(entry) })
        }
        MetricSource::File(path) => {
            let spec = read_metric_file(path)?;
            Ok(LoadedMetric { source: source.clone(), spec, entry: None })
        }
    }
}

pub fn read_metric_file(path: &Path) -> Result<MetricSpec, RunError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io { path: shown.clone(), message: e.to_string() })?;
    parse_metric(&text).map_err(|e| match e {
        conftrac::Error::Parse(p) => RunError::Parse { path: shown, line: p.line, column: p.column, message: p.message },
        other => RunError::Engine(other),
    })
}

/// Writes a catalog entry in the metric file format.
pub fn export_entry(name: &str, path: &Path) -> Result<(), RunError> {
    let entry = catalog::builtin(name)?;
    std::fs::write(path, entry.export()).map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })
}
