//! Factored low-rank matrices and the linear-algebra primitives built on them:
//! orthonormalization, SVD truncation (fixed-rank and tolerance-based), and
//! reproducible Gaussian sketching.

mod factor;
mod orth;
mod sketch;
mod svd;
mod truncate;

pub use factor::LowRankFactor;
pub use orth::{orth, thin_svd};
pub use sketch::{gaussian_sketch, gram_inverse, mix_stream, GramSolve, SketchMatrix};
pub use truncate::{
    truncate, truncate_dense, truncate_factor, truncate_product, truncate_svd_triplet,
    TruncateInput, TruncationRule,
};

use nalgebra::DMatrix;

/// Column-norm floor, relative to the Frobenius norm of the whole block,
/// below which a direction is treated as numerically rank-deficient.
pub(crate) const RANK_DEFICIENCY_RTOL: f64 = 1e-12;

pub(crate) fn ensure_finite(label: &str, m: &DMatrix<f64>) -> crate::Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::InvalidInput(format!(
            "{label} contains non-finite entries"
        )))
    }
}
