//! Simulate, analyze and report on care-space sensor corpora.

pub mod analyze;
pub mod commands;
pub mod config;
pub mod error;
pub mod render;
pub mod svg;
pub mod table;

pub use commands::{cmd_analyze, cmd_report, cmd_simulate, AnalyzeOutcome, DEFAULT_SEED};
pub use config::{ReportFormat, RunConfig};
pub use error::{CliError, Result};
