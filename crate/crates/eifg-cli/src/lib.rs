//! Command-line harness around `eifg-core`: JSON-configured simulations,
//! convergence studies and timing sweeps with CSV and binary-snapshot output.

pub mod commands;
pub mod config;
pub mod error;
pub mod snapshot;
pub mod table;

pub use commands::{
    cmd_bench, cmd_converge, cmd_simulate, BenchReport, BenchRow, ConvergeReport, DiagRow,
    SimulateReport,
};
pub use config::{build_problem, load, validate, Reference, RunConfig, SweepKind, Validated};
pub use error::CliError;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};
