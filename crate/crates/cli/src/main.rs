use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conftrac_cli::config::{parse_region, Format, RunConfig, Suite, DEFAULT_JET_ORDER, DEFAULT_POINTS};
use conftrac_cli::source::{export_entry, MetricSource};
use conftrac_cli::{run, RunError};

#[derive(Parser)]
#[command(name = "conftrac", version, about = "Certify conformal tractor and detour-complex identities on sampled jets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a metric and emit a certificate.
    Verify {
        /// Catalog name or path to a metric file.
        #[arg(long)]
        metric: String,
        /// Comma-separated suites: curvature, tractor, detour, prolong, deformation, all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides every check's default tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "jet-order", default_value_t = DEFAULT_JET_ORDER)]
        jet_order: usize,
        #[arg(long, default_value = "text")]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampling box `lo:hi,...` for metrics read from files.
        #[arg(long)]
        region: Option<String>,
    },
    /// Inspect the built-in metric catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// List built-in metrics and their stored facts.
    List,
    /// Write a built-in metric in the metric file format.
    Export { name: String, path: PathBuf },
}

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { metric, suite, points, seed, tol, jet_order, format, out, region } => {
            let suites = match Suite::parse_list(&suite) {
                Ok(s) => s,
                Err(e) => return fail(&RunError::Config(e)),
            };
            let region = match region.as_deref().map(parse_region).transpose() {
                Ok(r) => r,
                Err(e) => return fail(&RunError::Config(e)),
            };
            let config = RunConfig { metric: MetricSource::from_arg(&metric), suites, points, seed, tol, jet_order, format, region };
            let report = match run(&config) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            let text = match format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        return fail(&RunError::Io { path: path.display().to_string(), message: e.to_string() });
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(report.exit_code() as u8 * EXIT_CHECKS_FAILED)
        }
        Command::Catalog { command: CatalogCommand::List } => {
            for name in conftrac::catalog::names() {
                let entry = conftrac::catalog::builtin(name).expect("catalog entries build");
                println!("{}", conftrac::catalog::summary(&entry));
            }
            ExitCode::SUCCESS
        }
        Command::Catalog { command: CatalogCommand::Export { name, path } } => match export_entry(&name, &path) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("conftrac: {e}");
    ExitCode::from(EXIT_USAGE)
}
