//! Matrix-exponential actions on tall-thin blocks and the exact stiff flow
//! `X -> e^{tau A1} X e^{tau A2}` expressed on the thin factors.

mod expm;
mod flow;
mod operator;

pub use expm::{expm_action, ExpmConfig};
pub use flow::stiff_flow;
pub use operator::{CsrOperator, DenseOperator, StiffOperator, TransposedOperator, ZeroOperator};
