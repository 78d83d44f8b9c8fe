use nalgebra::DMatrix;

use super::ensure_finite;
use crate::{Error, Result};

/// A rank-`k` matrix stored as `X = U * S * V^T` with orthonormal `U` and `V`.
///
/// `S` is a dense `k x k` core; it is diagonal with nonincreasing nonnegative
/// entries immediately after a truncation, but intermediate updates (the core
/// update of the stiff flow, basis augmentations) legitimately fill it in.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    u: DMatrix<f64>,
    s: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl LowRankFactor {
    /// Maximum allowed orthonormality residual `|U^T U - I|_F / sqrt(k)`.
    pub const ORTHONORMALITY_RTOL: f64 = 1e-12;

    /// Builds a factor, validating shapes, finiteness and orthonormality.
    pub fn new(u: DMatrix<f64>, s: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        let k = s.nrows();
        if s.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "core must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if u.ncols() != k || v.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "factor column counts ({}, {}) do not match core size {}",
                u.ncols(),
                v.ncols(),
                k
            )));
        }
        if k > u.nrows().min(v.nrows()) {
            return Err(Error::InvalidInput(format!(
                "rank {} exceeds min dimension {}",
                k,
                u.nrows().min(v.nrows())
            )));
        }
        ensure_finite("U", &u)?;
        ensure_finite("S", &s)?;
        ensure_finite("V", &v)?;
        let tol = Self::ORTHONORMALITY_RTOL * (k.max(1) as f64).sqrt();
        let ru = orthonormality_residual(&u);
        let rv = orthonormality_residual(&v);
        if ru > tol || rv > tol {
            return Err(Error::InvalidInput(format!(
                "basis not orthonormal: residuals {ru:.3e}, {rv:.3e} exceed {tol:.3e}"
            )));
        }
        Ok(Self { u, s, v })
    }

    /// Builds a factor without the orthonormality check. The caller must have
    /// produced `u` and `v` by a QR or SVD.
    pub(crate) fn new_unchecked(u: DMatrix<f64>, s: DMatrix<f64>, v: DMatrix<f64>) -> Self {
        debug_assert_eq!(s.nrows(), s.ncols());
        debug_assert_eq!(u.ncols(), s.nrows());
        debug_assert_eq!(v.ncols(), s.ncols());
        Self { u, s, v }
    }

    /// The rank-`k` factor of the `m x n` identity spanned by the first `k`
    /// canonical basis vectors. This is the pinned deterministic reduction of
    /// an exact-identity initial value, where every singular value ties at 1.
    pub fn identity_leading(m: usize, n: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= m.min(n));
        let mut u = DMatrix::zeros(m, k);
        let mut v = DMatrix::zeros(n, k);
        for i in 0..k {
            u[(i, i)] = 1.0;
            v[(i, i)] = 1.0;
        }
        Self::new_unchecked(u, DMatrix::identity(k, k), v)
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    /// Materializes `U * S * V^T`.
    pub fn dense(&self) -> DMatrix<f64> {
        &self.u * &self.s * self.v.transpose()
    }

    /// `(L, R)` with `X = L * R^T`, never materializing the dense matrix.
    pub fn to_product(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (&self.u * &self.s, self.v.clone())
    }

    /// Frobenius norm, computed from the core alone (`U`, `V` orthonormal).
    pub fn frobenius_norm(&self) -> f64 {
        self.s.norm()
    }

    /// Frobenius norm of `self - other` without densifying either factor.
    pub fn distance(&self, other: &LowRankFactor) -> f64 {
        let a2 = self.s.norm_squared();
        let b2 = other.s.norm_squared();
        // <X, Y> = trace(S_x^T (U_x^T U_y) S_y (V_y^T V_x))
        let cross = (self.s.transpose() * self.u.transpose() * &other.u * &other.s)
            .component_mul(&(self.v.transpose() * &other.v))
            .sum();
        (a2 + b2 - 2.0 * cross).max(0.0).sqrt()
    }

    /// Residual `|U^T U - I|_F` of the left basis (right via `v()`).
    pub fn left_orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.u)
    }

    pub fn right_orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.v)
    }
}

pub(crate) fn orthonormality_residual(q: &DMatrix<f64>) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - DMatrix::<f64>::identity(k, k)).norm()
}
