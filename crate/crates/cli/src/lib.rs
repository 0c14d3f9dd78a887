//! Verification runs over the conftrac engine: configuration, suites and
//! deterministic reports.

pub mod config;
pub mod report;
pub mod source;
pub mod suites;

pub use config::{Format, RunConfig, Suite};
pub use report::{Check, Report, Status};
pub use source::{load_metric, LoadedMetric, MetricSource};

/// Runs every selected suite and assembles the report.
pub fn run(config: &RunConfig) -> Result<Report, RunError> {
    config.validate()?;
    let metric = load_metric(&config.metric)?;
    let ctx = suites::Context::new(config, &metric)?;
    let mut checks = Vec::new();
    for suite in &config.suites {
        checks.extend(suites::run_suite(*suite, &ctx));
    }
    Ok(Report::new(config, &metric, ctx.points.clone(), checks))
}

/// Failures that abort a run before any check executes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io { path: String, message: String },
    Parse { path: String, line: usize, column: usize, message: String },
    Engine(conftrac::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid configuration: {m}"),
            RunError::Io { path, message } => write!(f, "{path}: {message}"),
            RunError::Parse { path, line, column, message } => write!(f, "{path}:{line}:{column}: {message}"),
            RunError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<conftrac::Error> for RunError {
    fn from(e: conftrac::Error) -> Self {
        RunError::Engine(e)
    }
}
