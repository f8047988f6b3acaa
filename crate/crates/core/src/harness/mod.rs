//! Monte Carlo experiment driver: configuration, parallel trials,
//! aggregation and CSV output.
//!
//! Every trial draws its users, channels and noise from counter-based
//! substreams of the master seed, so results are identical for any thread
//! count.

mod config;
mod output;
mod runner;
mod summary;

pub use config::{ExperimentConfig, Preset};
pub use output::{run_experiment, write_outputs, write_rows, ExperimentReport, OutputFiles, CDF_POINTS};
pub use runner::{
    simulate, ExperimentResults, PairTraceRow, SchedulerTraceRow, TrialContext, TrialOutput, TrialRecord,
};
pub use summary::{rate_cdf, rate_samples, summarize, CdfRow, Fig3Row, SummaryRow};
