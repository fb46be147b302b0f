//! Experiment harness: class/distribution generators, end-to-end pipelines,
//! and the acceptance / calibration suites built on top of them.

pub mod experiment;
pub mod gen;
pub mod pipeline;
pub mod suite;

pub use experiment::{aggregate, Aggregates, BoostTrialRow, ExperimentResult, TrialMetrics};
pub use gen::{perturb_distribution, GenSpec};
pub use pipeline::{
    neighbor_transfer_with_source, pipeline_neighbor_transfer, pipeline_sq_to_memory,
    NeighborTransferOutcome, SqToMemoryOutcome, TransferMode,
};
pub use suite::{run_suite, CriterionReport, Suite};
