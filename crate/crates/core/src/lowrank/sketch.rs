use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ensure_finite, thin_svd};
use crate::{Error, Result};

/// Condition-number ceiling for a sketch Gram matrix before the draw is
/// declared singular and the caller resamples.
const GRAM_COND_LIMIT: f64 = 1e12;

/// A Gaussian sketch `Omega` (n x s, i.i.d. standard normal) together with the
/// seed material that reproduces it bit-identically.
///
/// The generator is pinned: ChaCha8 keyed by `seed` on stream `stream`, with
/// normal deviates drawn by the ziggurat sampler, filling column by column.
#[derive(Debug, Clone)]
pub struct SketchMatrix {
    omega: DMatrix<f64>,
    seed: u64,
    stream: u64,
}

impl SketchMatrix {
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn nrows(&self) -> usize {
        self.omega.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.omega.ncols()
    }
}

/// Draws the deterministic `n x s` Gaussian sketch for `(seed, stream)`.
pub fn gaussian_sketch(n: usize, s: usize, seed: u64, stream: u64) -> SketchMatrix {
    assert!(n >= 1 && s >= 1, "sketch dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut omega = DMatrix::zeros(n, s);
    for j in 0..s {
        for i in 0..n {
            omega[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    SketchMatrix { omega, seed, stream }
}

/// Explicit `(Omega^T Omega)^{-1}`, symmetric positive definite.
///
/// Fails with [`Error::SingularSketch`] when the Gram condition estimate
/// exceeds `1e12`; the caller regenerates the sketch on a new stream.
pub fn gram_inverse(omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let solve = GramSolve::new(omega)?;
    let s = omega.ncols();
    Ok(solve.solve(&DMatrix::identity(s, s)))
}

/// Cached Cholesky factorization of a sketch Gram matrix.
///
/// The rangefinder right-hand sides apply `(Omega^T Omega)^{-1}` at every
/// inner solver stage; the factorization is computed once per ODE solve.
pub struct GramSolve {
    chol: Cholesky<f64, Dyn>,
    cond: f64,
}

impl GramSolve {
    pub fn new(omega: &DMatrix<f64>) -> Result<Self> {
        ensure_finite("sketch", omega)?;
        let gram = omega.transpose() * omega;
        let (_, sigma, _) = thin_svd(&gram)?;
        let smax = sigma[0];
        let smin = sigma[sigma.len() - 1];
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if cond.is_nan() || cond >= GRAM_COND_LIMIT {
            return Err(Error::SingularSketch { cond });
        }
        let chol = gram
            .cholesky()
            .ok_or(Error::SingularSketch { cond: f64::INFINITY })?;
        Ok(Self { chol, cond })
    }

    /// Solves `(Omega^T Omega) X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn condition_estimate(&self) -> f64 {
        self.cond
    }
}

/// Splitmix64 finalizer; the building block of stream derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child stream id from a parent stream and a tag (step index,
/// role, retry counter). Deterministic and platform independent.
pub fn mix_stream(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag.wrapping_add(0xA076_1D64_78BD_642F)))
}
