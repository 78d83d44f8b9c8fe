use nalgebra::{DMatrix, DVector};

use super::{ensure_finite, RANK_DEFICIENCY_RTOL};
use crate::Result;

/// Orthonormal basis of `range(W)` via thin QR, with a column-pivoted fallback
/// when rank deficiency is detected.
///
/// Columns whose triangular pivot falls below `1e-12 * |W|_F` are dropped, so
/// the returned basis has exactly the numerical rank of `W` (possibly zero
/// columns).
pub fn orth(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_finite("orth input", w)?;
    let (m, s) = (w.nrows(), w.ncols());
    if s == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    let scale = w.norm();
    if scale == 0.0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    let floor = RANK_DEFICIENCY_RTOL * scale;

    // Fast path: plain Householder QR, accepted when no pivot is suspicious.
    let qr = w.clone().qr();
    let r = qr.r();
    let kmax = m.min(s);
    if (0..kmax).all(|i| r[(i, i)].abs() > floor) && s <= m {
        return Ok(qr.q());
    }

    // Rank-revealing fallback.
    let qr = w.clone().col_piv_qr();
    let r = qr.r();
    let rank = (0..kmax).take_while(|&i| r[(i, i)].abs() > floor).count();
    let q = qr.q();
    Ok(q.columns(0, rank).into_owned())
}

/// Thin SVD with singular values sorted in nonincreasing order.
///
/// Returns `(U, sigma, V)` with `A = U * diag(sigma) * V^T`; the factors keep
/// `min(m, n)` columns, no truncation is applied here. Backed by a one-sided
/// Jacobi sweep, which stays consistent on exactly rank-deficient inputs.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    ensure_finite("svd input", a)?;
    Ok(super::svd::jacobi_thin_svd(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::factor::orthonormality_residual;

    #[test]
    fn axis_aligned_columns() {
        let w = DMatrix::from_row_slice(3, 2, &[3.0, 0.0, 0.0, 0.0, 0.0, 4.0]);
        let q = orth(&w).unwrap();
        assert_eq!(q.shape(), (3, 2));
        // up to column signs
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((q[(2, 1)].abs() - 1.0).abs() < 1e-15);
        assert!(q[(1, 0)].abs() < 1e-15 && q[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn dependent_columns_are_dropped() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        let q = orth(&w).unwrap();
        assert_eq!(q.shape(), (2, 1));
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(q[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn gaussian_block_spans_input() {
        // Full-rank deterministic fill; the oracle is the projection
        // residual |W - Q Q^T W|.
        let w = DMatrix::from_fn(50, 8, |i, j| ((((i * 31 + j * 17 + 3) * 2654435761) % 1000) as f64 / 500.0 - 1.0).sin());
        let q = orth(&w).unwrap();
        assert_eq!(q.ncols(), 8);
        assert!(orthonormality_residual(&q) < 1e-12);
        let resid = (&w - &q * (q.transpose() * &w)).norm();
        assert!(resid <= 1e-10 * w.norm(), "residual {resid:.3e}");
    }

    #[test]
    fn zero_input_gives_empty_basis() {
        let w = DMatrix::zeros(4, 3);
        let q = orth(&w).unwrap();
        assert_eq!(q.shape(), (4, 0));
    }

    #[test]
    fn rejects_non_finite() {
        let w = DMatrix::from_row_slice(1, 1, &[f64::INFINITY]);
        assert!(orth(&w).is_err());
    }

    #[test]
    fn wide_input_is_reduced() {
        // More columns than rows: basis can have at most m columns.
        let w = DMatrix::from_fn(3, 5, |i, j| ((i + 2 * j + 1) as f64).cos());
        let q = orth(&w).unwrap();
        assert!(q.ncols() <= 3);
        let resid = (&w - &q * (q.transpose() * &w)).norm();
        assert!(resid <= 1e-10 * w.norm());
    }
}
