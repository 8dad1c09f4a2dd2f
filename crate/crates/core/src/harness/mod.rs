//! Experiment orchestration, theorem calculators and reporting.

pub mod bounds;
pub mod config;
pub mod experiment;
pub mod report;

pub use bounds::{gamma_constants, rho, theorem1_rhs, theorem2_bound, BoundInputs, Gammas, Theorem1};
pub use config::{DRule, DSpec, ExperimentConfig, ExperimentKind};
pub use experiment::{
    run_experiment, run_lemmas, run_noiseless_scaling, run_stability, ExperimentOutput, ExperimentSummary, GridSummary,
    TrialRecord, TrialStatus,
};
pub use report::{emit_report, read_json_report, write_report, write_tail_reports, JsonReport, ReportFormat};
