//! Multivariate Pareto records: exact record-setting probabilities for
//! independent, marginalized-Dirichlet and scale-mixture coordinates, plus
//! Monte Carlo estimation of record and maxima counts.

pub mod cli;
pub mod error;
pub mod exact;
pub mod frontier;
pub mod model;
pub mod ordering;
pub mod quad;
pub mod rng;
pub mod samplers;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use frontier::{run_stream, FrontierState, RecordOutcome};
pub use model::{dominates, DistributionSpec, ExperimentConfig, Observation};
pub use rng::RngState;
