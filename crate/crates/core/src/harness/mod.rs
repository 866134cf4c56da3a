//! Monte Carlo driver: sweep configuration, per-trial simulation, CDF
//! aggregation and CSV/JSON export.
//!
//! Every trial draws from its own ChaCha stream seeded by
//! [`trial_seed`]`(master, cell, trial)`, so results do not depend on the
//! order in which trials execute.

pub mod config;
pub mod export;
pub mod sweep;

pub use config::{load_config_pairs, parse_snr, Recipe, SimConfig, SirMetric};
pub use export::{export, read_csv, write_csv, write_json, CsvRow, Format};
pub use sweep::{
    cells, run_sweep, run_sweep_with, run_trial, trial_seed, Cell, CellResult, MethodOutcome, Provenance, RunResult,
    Summary, TrialContext, TrialRecord,
};
