//! Experiment runner, CSV/JSON artifacts and log-log slope fits.

mod output;
mod record;
mod runner;
mod slope;

pub use output::{emit_csv, emit_json, load_plan, read_csv, Summary};
pub use record::{EstimateRecord, CSV_HEADER};
pub use runner::{run_experiment, run_experiment_into, run_level};
pub use slope::{fit_points, fit_slope, mean_sq_errors, LevelError, SlopeFit};
