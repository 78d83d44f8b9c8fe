use super::{expm_action, ExpmConfig, StiffOperator, TransposedOperator};
use crate::{LowRankFactor, Result};

/// Exact flow of the stiff pair applied to a factored state:
/// `X -> e^{tau A1} X e^{tau A2}`, computed through exponential actions on
/// the thin factors and re-orthonormalized by QR. Rank preserving.
///
/// With `X = U S V^T`, the right action is `X e^{tau A2} = U S (e^{tau A2^T} V)^T`,
/// so the `V` block is propagated by the transpose of `A2`.
pub fn stiff_flow(
    a1: &dyn StiffOperator,
    a2: &dyn StiffOperator,
    tau: f64,
    x: &LowRankFactor,
    cfg: &ExpmConfig,
) -> Result<LowRankFactor> {
    if tau == 0.0 {
        return Ok(x.clone());
    }
    let a2t = TransposedOperator(a2);
    let (eu, ev) = rayon::join(
        || expm_action(a1, tau, x.u(), cfg),
        || expm_action(&a2t, tau, x.v(), cfg),
    );
    let (eu, ev) = (eu?, ev?);

    let qu = eu.qr();
    let qv = ev.qr();
    let s = qu.r() * x.s() * qv.r().transpose();
    let out = LowRankFactor::new_unchecked(qu.q(), s, qv.q());
    debug_assert_eq!(out.rank(), x.rank(), "stiff flow must preserve rank");
    Ok(out)
}
