//! Data pipeline and command-line interface around the ranking model:
//! file ingestion, empirical statistics, synthetic data generation, bound
//! reports, and the `plc` binary's subcommands.

pub mod cli;
pub mod error;
pub mod files;
pub mod ingest;
pub mod report;
pub mod synth;

pub use cli::{cli_main, run_from};
pub use error::{CliError, CliResult, IngestError};
