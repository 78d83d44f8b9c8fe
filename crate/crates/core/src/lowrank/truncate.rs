use nalgebra::{DMatrix, DVector};

use super::{ensure_finite, thin_svd, LowRankFactor, RANK_DEFICIENCY_RTOL};
use crate::{Error, Result};

/// How an SVD truncation selects the retained rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    /// Best rank-`rank` approximation in Frobenius norm. The output never
    /// keeps numerically zero directions, so the actual rank is
    /// `min(rank, numerical rank)`.
    FixedRank { rank: usize },
    /// Smallest `k` whose discarded tail satisfies
    /// `sqrt(sum_{i>k} sigma_i^2) <= max(atol, rtol * |A|_F)`.
    Tolerance { rtol: f64, atol: f64 },
}

impl TruncationRule {
    pub fn fixed(rank: usize) -> Self {
        assert!(rank >= 1, "fixed-rank truncation needs rank >= 1");
        Self::FixedRank { rank }
    }

    pub fn tolerance(rtol: f64, atol: f64) -> Self {
        assert!(rtol >= 0.0 && atol >= 0.0, "tolerances must be nonnegative");
        assert!(
            rtol > 0.0 || atol > 0.0,
            "tolerance truncation needs rtol or atol positive"
        );
        Self::Tolerance { rtol, atol }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if let Self::FixedRank { rank } = self {
            if *rank > m.min(n) {
                return Err(Error::InvalidInput(format!(
                    "fixed rank {} exceeds min({m}, {n})",
                    rank
                )));
            }
        }
        Ok(())
    }

    /// Retained rank for the given (sorted, nonincreasing) singular values.
    pub(crate) fn select(&self, sigma: &DVector<f64>) -> usize {
        let total_sq: f64 = sigma.iter().map(|s| s * s).sum();
        if total_sq == 0.0 {
            return 0;
        }
        let numerical_rank = sigma
            .iter()
            .take_while(|&&s| s > RANK_DEFICIENCY_RTOL * sigma[0])
            .count();
        match *self {
            Self::FixedRank { rank } => rank.min(numerical_rank),
            Self::Tolerance { rtol, atol } => {
                let threshold = atol.max(rtol * total_sq.sqrt());
                // tail(k) = sqrt(sum_{i>k} sigma_i^2), scanned from the left
                let mut tail_sq = total_sq;
                let mut k = 0;
                while k < sigma.len() && tail_sq.max(0.0).sqrt() > threshold {
                    tail_sq -= sigma[k] * sigma[k];
                    k += 1;
                }
                k.min(numerical_rank.max(1))
            }
        }
    }
}

/// Input to [`truncate`]: either a dense matrix or a product of tall-thin
/// factors `L * R^T`, which is compressed without densifying.
pub enum TruncateInput<'a> {
    Dense(&'a DMatrix<f64>),
    Product(&'a DMatrix<f64>, &'a DMatrix<f64>),
}

/// SVD truncation of a dense matrix or factored product.
///
/// The result has a diagonal core with nonincreasing nonnegative entries.
pub fn truncate(input: TruncateInput<'_>, rule: &TruncationRule) -> Result<LowRankFactor> {
    match input {
        TruncateInput::Dense(a) => truncate_dense(a, rule),
        TruncateInput::Product(l, r) => truncate_product(l, r, rule),
    }
}

pub fn truncate_dense(a: &DMatrix<f64>, rule: &TruncationRule) -> Result<LowRankFactor> {
    ensure_finite("truncate input", a)?;
    rule.validate(a.nrows(), a.ncols())?;
    let (u, sigma, v) = thin_svd(a)?;
    assemble(u, sigma, v, rule, a.nrows(), a.ncols())
}

/// Truncates `L * R^T` by orthonormalizing both factors and decomposing the
/// small core `R_L * R_R^T`.
pub fn truncate_product(
    l: &DMatrix<f64>,
    r: &DMatrix<f64>,
    rule: &TruncationRule,
) -> Result<LowRankFactor> {
    ensure_finite("truncate left factor", l)?;
    ensure_finite("truncate right factor", r)?;
    if l.ncols() != r.ncols() {
        return Err(Error::InvalidInput(format!(
            "product factors disagree: {} vs {} columns",
            l.ncols(),
            r.ncols()
        )));
    }
    let (m, n) = (l.nrows(), r.nrows());
    rule.validate(m, n)?;

    let ql = l.clone().qr();
    let qr = r.clone().qr();
    let core = ql.r() * qr.r().transpose();
    let (uc, sigma, vc) = thin_svd(&core)?;
    assemble(ql.q() * uc, sigma, qr.q() * vc, rule, m, n)
}

/// Convenience wrapper: re-truncates an existing factor.
pub fn truncate_factor(x: &LowRankFactor, rule: &TruncationRule) -> Result<LowRankFactor> {
    let (l, r) = x.to_product();
    truncate_product(&l, &r, rule)
}

/// Truncates an SVD already in hand: `A = U diag(sigma) V^T` with `sigma`
/// sorted nonincreasing and orthonormal `U`, `V`. Used where a step has just
/// produced the decomposition and only the selection remains.
pub fn truncate_svd_triplet(
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
    rule: &TruncationRule,
) -> Result<LowRankFactor> {
    let (m, n) = (u.nrows(), v.nrows());
    rule.validate(m, n)?;
    assemble(u, sigma, v, rule, m, n)
}

fn assemble(
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
    rule: &TruncationRule,
    m: usize,
    n: usize,
) -> Result<LowRankFactor> {
    let k = rule.select(&sigma);
    if k == 0 {
        // Zero (or numerically zero) input: the smallest representable factor
        // is rank one with a zero singular value on canonical directions.
        let mut zu = DMatrix::zeros(m, 1);
        let mut zv = DMatrix::zeros(n, 1);
        zu[(0, 0)] = 1.0;
        zv[(0, 0)] = 1.0;
        return Ok(LowRankFactor::new_unchecked(zu, DMatrix::zeros(1, 1), zv));
    }
    let s = DMatrix::from_diagonal(&sigma.rows(0, k).into_owned());
    Ok(LowRankFactor::new_unchecked(
        u.columns(0, k).into_owned(),
        s,
        v.columns(0, k).into_owned(),
    ))
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// The discarded tail always satisfies the tolerance bound and the
        /// kept rank is minimal for it.
        #[test]
        fn tolerance_tail_bound(
            mut sigmas in proptest::collection::vec(1e-12f64..10.0, 1..8),
            rtol in 1e-10f64..1e-1,
        ) {
            sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let a = DMatrix::from_diagonal(&DVector::from_vec(sigmas.clone()));
            let rule = TruncationRule::tolerance(rtol, 0.0);
            let x = truncate_dense(&a, &rule).unwrap();
            let k = x.rank();
            let total: f64 = sigmas.iter().map(|s| s * s).sum::<f64>();
            let tail = |k: usize| sigmas.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt();
            let threshold = rtol * total.sqrt();
            prop_assert!(tail(k) <= threshold * (1.0 + 1e-12));
            if k > 1 {
                prop_assert!(tail(k - 1) > threshold * (1.0 - 1e-12));
            }
        }

        /// Fixed-rank truncation never reconstructs worse than the full tail
        /// and keeps orthonormal factors.
        #[test]
        fn fixed_rank_reconstruction_bound(
            seed in 0u64..1000,
            rank in 1usize..5,
        ) {
            let m = 9;
            let n = 7;
            let a = DMatrix::from_fn(m, n, |i, j| {
                ((((i * 31 + j * 17) as u64 + seed * 101) % 997) as f64 / 498.5) - 1.0
            });
            let x = truncate_dense(&a, &TruncationRule::fixed(rank)).unwrap();
            prop_assert!(x.rank() <= rank);
            let k = x.rank() as f64;
            prop_assert!(x.left_orthonormality_residual() <= 1e-10 * k.sqrt());
            prop_assert!(x.right_orthonormality_residual() <= 1e-10 * k.sqrt());
            prop_assert!((a.clone() - x.dense()).norm() <= a.norm() * (1.0 + 1e-12));
        }
    }
}
