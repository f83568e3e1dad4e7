//! Experiment configuration, figure-data commands and the validation suite
//! behind the command-line tool.

mod commands;
mod config;
mod table;
mod validate;

pub use commands::{cell_probs, roc, roc_results, sim_config, simulate, width_seed, SimulateOutput, REPORT_Z};
pub use config::{
    BetaGridSpec, ExperimentConfig, Overrides, WidthSetup, DEFAULT_BIN_WIDTHS_HZ, DEFAULT_FDMAX_HZ,
    DEFAULT_LMAX, DEFAULT_SEED, DEFAULT_TRIALS, MAX_LMAX,
};
pub use table::{num, Table};
pub use validate::{
    energy_coverage, oracle_deviation, sinc2_integral, validate, Check, Status, ValidationReport,
    ENERGY_OFFSETS, GAP_THRESHOLD,
};
