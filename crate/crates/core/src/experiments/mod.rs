//! Seeded Monte-Carlo sweeps producing error curves.
//!
//! Every trial draws from its own ChaCha8 substream, addressed by (master
//! seed, sweep point, phase, trial index). Trials at a point run in
//! parallel and are reduced in trial order, so results do not depend on the
//! number of worker threads.

mod config;
mod curve;
mod plot;
mod runner;

pub use config::{
    ExperimentConfig, GraphSpec, Kind, Knowledge, Scaling, SicknessModel, SweepVar, ThresholdRule,
};
pub use curve::{
    binomial_half_width, format_sig6, read_csv, write_csv, CurveRow, ErrorCurve, Tally, CSV_HEADER,
};
pub use plot::{emit_plot, XAxis};
pub use runner::{
    run, run_calibrate, run_compare, run_threshold_vs_n, run_threshold_vs_size, trial_rng,
    ExperimentOutput,
};

use crate::detectors::DetectError;
use crate::graph::GraphError;
use crate::metrics::MetricError;
use crate::percolation::SimError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV: {0}")]
    Csv(String),
    #[error("error curve has no rows")]
    EmptyCurve,
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
