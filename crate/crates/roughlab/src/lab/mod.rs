//! Experiment orchestration: declarative JSON configs, the rate /
//! contraction / stability runners, and deterministic output writers.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, FieldSpec, OutputFormat, OutputSpec, ZMode};
pub use experiments::{
    run_contraction, run_rates, run_stability, ContractionOutput, ContractionRow, RateRow,
    RatesOutput, StabilityOutput, StabilityRow,
};
