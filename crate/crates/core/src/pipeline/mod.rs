//! Experiment configuration, the forward and reconstruction stages, metrics
//! and result files.

mod config;
mod forward;
mod metrics;
mod output;
mod reconstruct;

pub use config::{ExperimentConfig, StepOneConfig, StepTwoConfig, TargetClass};
pub use forward::{config_phantom, run_forward, sample_forward, BackgroundRecord, ForwardData};
pub use metrics::{compute_metrics, jaccard, InclusionMetrics, Metrics};
pub use output::{emit_outputs, result_json, support_csv};
pub use reconstruct::{run_reconstruct, ConfigRecord, Diagnostics, GridHeader, ReconstructionResult, Status, SupportRecord};
