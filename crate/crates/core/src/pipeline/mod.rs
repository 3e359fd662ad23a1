//! The end-to-end construction: configuration, the ε-sweep, positivity, and reports.

mod config;
mod positivity;
mod report;
mod run;

pub use config::{validate_eps, OutputConfig, PositivityConfig, RunConfig, SCHEMA_VERSION};
pub use positivity::{positivity_check, AssembledSolution, PositivityReport, Witness};
pub use report::{emit_report, load_report, render_report};
pub use run::{construct_point, run_pipeline, trend_verdict, PointOutcome, PointReport, RunReport, StageFailure, Timing};
