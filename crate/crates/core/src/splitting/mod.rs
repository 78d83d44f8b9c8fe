//! Lie-Trotter and Strang compositions of the exact stiff flow with a
//! low-rank nonstiff stepper, plus the multi-step driver.

mod problem;
mod scheme;

pub use problem::{InitialState, SemilinearProblem};
pub use scheme::{integrate, lie_step, strang_step, IntegrateOutput, Scheme, SplittingConfig};
