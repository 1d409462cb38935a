//! End-to-end experiments: configuration, per-seed runs, sample-size sweeps,
//! entropy curves, per-example inspection, plots and reports.

pub mod analysis;
pub mod config;
pub mod plot;
pub mod report;
pub mod run;
pub mod sweep;

pub use analysis::{cmd_entropy_curve, cmd_inspect, entropy_curves, InspectReport};
pub use config::{ExperimentConfig, Method, ModelOptions};
pub use report::{build_report, cmd_export_report, ReportTable};
pub use run::{
    cmd_distill, cmd_run, cmd_simulate, run_experiment, run_seed, RunManifest, Scores, SeedOutcome, Spread,
};
pub use sweep::{cmd_sweep_samples, sweep_samples, SweepResult};
