//! Monte Carlo convergence studies, their configuration and their output.

pub mod config;
pub mod output;
pub mod stats;
pub mod study;

pub use config::{ExperimentConfig, Tolerances};
pub use stats::{fit_rate, moment_error, pathwise_stats, MomentError, PathwiseStats, RateFit};
pub use study::{
    compare_noise, converge_space, converge_time, estimate_errors, Check, Level, NamedFit, Resolution,
    ResolutionReport, SampleOutcome, StudyReport,
};
