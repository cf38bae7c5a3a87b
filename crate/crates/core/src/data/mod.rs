//! File formats and report rendering: region prevalence CSV, the PPV table,
//! scenario files and the text/CSV/JSON renderers.

mod regions;
mod render;
mod scenario;
mod table;

use std::path::PathBuf;

use thiserror::Error;

use crate::bayes::BayesError;
use crate::diagnostics::DiagnosticError;
use crate::finite::FiniteError;
use crate::sequential::SequentialError;

pub use regions::{bundled_regions, load_regions, parse_regions, RegionRecord, BUNDLED_REGIONS_CSV};
pub use render::{
    format_decimal, render_report, render_scenario, Format, PosteriorTrace, Report, TraceStep,
};
pub use scenario::{
    parse_scenario, run_scenario, run_scenario_file, Check, CheckLine, CheckOutcome, DiagnosticOutcome,
    ScenarioReport, ScenarioSpec, SCHEMA_VERSION,
};
pub use table::{build_table, TableReport, TableRow};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Domain { line: u64, message: String },
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("region `{region}`: {source}")]
    Row {
        region: String,
        #[source]
        source: DiagnosticError,
    },
    #[error("{context}: {source}")]
    Finite {
        context: String,
        #[source]
        source: FiniteError,
    },
    #[error(transparent)]
    Diagnostic(#[from] DiagnosticError),
    #[error(transparent)]
    Sequential(#[from] SequentialError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("table needs at least one region")]
    EmptyTable,
    #[error("max_positives must be at least 1")]
    ZeroColumns,
}

impl DataError {
    /// Malformed input (as opposed to well-formed input with bad values).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            DataError::Io { .. }
                | DataError::Parse { .. }
                | DataError::Schema(_)
                | DataError::Diagnostic(DiagnosticError::ParseResult(_))
        )
    }
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;
