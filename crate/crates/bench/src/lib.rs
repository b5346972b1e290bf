//! Ensemble experiments for the rankz solvers.
//!
//! An [`ExperimentSpec`] names a problem ensemble, a set of algorithms and an
//! iteration budget. [`run_experiment`] solves every trial with every
//! algorithm and averages `|x - x_o|^2 / |x_o|^2` across trials at aligned
//! checkpoints, giving one normalized RMSE curve per algorithm.
//! [`run_fig4_protocol`] runs the fixed-length CD / EK / K schedules and
//! indexes the curves by Kaczmarz iterations instead. Bound curves, flop
//! tables, CSV and a JSON manifest round out the output.
//!
//! Trials run in parallel on the ambient rayon pool; results are reduced in
//! trial order, so output never depends on the thread count.

pub mod bounds;
mod error;
pub mod experiment;
pub mod fig4;
pub mod report;
pub mod suites;

pub use bounds::{bound_constants, eval_bound, BoundConstants, BoundCurve, BoundKind};
pub use error::{BenchError, Result};
pub use experiment::{
    run_experiment, AlgoRun, Axis, BoundSeries, ExperimentResult, ExperimentSpec, RmseCurve, TrialRun,
};
pub use fig4::{fig4_stages, run_fig4_protocol, Fig4Schedule};
pub use report::{flop_report, FlopRow, Manifest};
pub use suites::Suite;
