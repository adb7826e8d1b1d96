//! Case configuration, validation presets, error metrics, convergence studies
//! and reporting.

mod config;
mod convergence;
mod metrics;
mod output;
mod presets;
mod run;

pub use config::{
    build_world, BcConfig, BlankConfig, BlockConfig, BodyConfig, CaseConfig, InitialField,
    OutputConfig, ShapeConfig,
};
pub use convergence::{convergence_study, fit_order, ConvergenceRow};
pub use metrics::{standard_error, taylor_green_pressure, taylor_green_velocity};
pub use output::{timing_report, write_history_csv, write_vtk_blocks};
pub use presets::{preset, preset_names, taylor_green, tg_ladder};
pub use run::{run_case, RunOptions, RunResult, StepRecord};
