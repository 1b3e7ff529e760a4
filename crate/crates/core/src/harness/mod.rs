//! Training loop, evaluation, multi-run experiments and their outputs.

mod config;
mod experiment;
mod footprint;
mod metrics;
mod state;

pub use config::{DataSource, OracleInference, TrainConfig};
pub use experiment::{run_experiment, run_single, ExperimentData, ExperimentResult, BLOB_DIM};
pub use footprint::{footprint_report, human_bytes, Footprint, Scenario};
pub use metrics::{
    aggregate, mean_and_std, parse_csv, read_csv, render_svg, to_csv, write_csv, write_svg,
    AggregatePoint, MechanismSummary, MetricsRecord, CSV_HEADER,
};
pub use state::{EvalOutcome, RunState, StepMetrics};
