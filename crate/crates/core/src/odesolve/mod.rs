//! Inner initial-value solver for the small reduced matrix ODEs, the
//! nonstiff-field evaluation contract, and the dense full-order reference
//! solver used to manufacture reference solutions.

mod dopri5;
mod field;
mod reference;

pub use dopri5::{solve_matrix_ivp, solve_matrix_ivp_checkpoints, IvpConfig, SolveStats};
pub use field::{FactoredPair, NonstiffField};
pub use reference::{reference_solve, reference_solve_with_guard, DENSIFY_GUARD};
