//! Subcommands reproducing the witness experiments, with JSON configs and
//! CSV output.

// `!(x > 0.0)` checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use config::{Command, ExperimentConfig};
use output::Table;

/// Name of the environment variable holding the worker count.
pub const WORKERS_ENV: &str = "EFW_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot error: {0}")]
    Plot(String),
}

impl From<efw_core::Error> for CliError {
    fn from(e: efw_core::Error) -> Self {
        use efw_core::Error as E;
        match e {
            E::StepUnderflow { .. } | E::PositivityBreach { .. } | E::CorrelatorBlowUp { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Plot(_) => 1,
        }
    }
}

/// What a subcommand produced.
pub enum Output {
    Table { table: Table, epsilon: f64, failure: Option<String> },
    Json { value: serde_json::Value, failure: Option<String> },
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Output, CliError> {
    Ok(match cmd {
        Command::Fig1Sphere => {
            let o = commands::fig1_sphere(cfg)?;
            Output::Table { table: output::sphere_table(&o), epsilon: o.epsilon, failure: None }
        }
        Command::DickeSweep => {
            let o = commands::dicke_sweep(cfg)?;
            Output::Table { table: output::dicke_table(&o), epsilon: o.epsilon, failure: None }
        }
        Command::Decay => {
            let o = commands::decay(cfg)?;
            Output::Table { table: output::decay_table(&o), epsilon: o.epsilon, failure: o.error.clone() }
        }
        Command::CumulantTent => {
            let cells = commands::cumulant_tent(cfg)?;
            Output::Table { table: output::tent_table(&cells), epsilon: 0.0, failure: None }
        }
        Command::Fuzz => {
            let report = commands::fuzz(cfg)?;
            let failure = (!report.passed()).then(|| {
                format!("{} separable evaluations fell below the bound (min {:e})", report.violations, report.min_value)
            });
            let value = serde_json::json!({ "command": cmd.name(), "config": cfg, "report": report });
            Output::Json { value, failure }
        }
    })
}

/// Writes `out` and, if requested, its plot. Returns the failure to report
/// after the data has been written.
pub fn emit(
    out: &Output,
    cmd: Command,
    cfg: &ExperimentConfig,
    sink: &mut dyn Write,
    plot_path: Option<&Path>,
) -> Result<Option<String>, CliError> {
    match out {
        Output::Table { table, epsilon, failure } => {
            table.write(sink, cmd, cfg)?;
            if let Some(p) = plot_path {
                plot::plot(p, cmd, table, *epsilon)?;
            }
            Ok(failure.clone())
        }
        Output::Json { value, failure } => {
            serde_json::to_writer_pretty(&mut *sink, value).map_err(|e| CliError::Io(e.into()))?;
            writeln!(sink)?;
            if plot_path.is_some() {
                return Err(CliError::Plot("the fuzz report has no plot".into()));
            }
            Ok(failure.clone())
        }
    }
}
