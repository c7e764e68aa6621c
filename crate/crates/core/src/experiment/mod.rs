//! Experiment configuration, the run matrix, scoring and reports.

pub mod config;
pub mod matrix;
pub mod report;
pub mod scoring;
pub mod wilcoxon;

pub use config::{Budget, Experiment, ExperimentConfig, MethodConfig, NamedInstance};
pub use matrix::{check_experiment, run_matrix, MatrixOptions, RunRecord, RunStatus};
pub use report::{aggregate, emit_report, Aggregates};
pub use scoring::{f1_scores, F1Table, ReferenceResults};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
