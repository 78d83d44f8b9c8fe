//! Convergence-study and simulation harness: runs (scheme x stepper x rank
//! x step-count) sweeps against dense references, estimates observed orders,
//! logs rank evolution, and produces best-rank comparison curves.

mod report;
mod simulate;
mod sweep;

pub use report::{
    best_rank_csv_string, convergence_csv_string, rank_trace_csv_string, write_best_rank_csv,
    write_convergence_csv, write_rank_trace_csv, BestRankCurve, BestRankRow, ConvergenceReport,
    ConvergenceRow, RankSample, RankTrace,
};
pub use simulate::{simulate, SimulateConfig, SimulateOutput, StepObserver};
pub use sweep::{
    best_rank_curve, build_splitting_config, build_stepper, relative_error,
    relative_error_factored, spatial_sweep, subsample_even, temporal_sweep,
    temporal_sweep_with_reference, SweepParams,
};
