use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::odesolve::{FactoredPair, NonstiffField};

/// Default row-block height for streaming evaluations.
pub const DEFAULT_BLOCK_ROWS: usize = 256;

/// Computes `g(L * R^T) * W` where `g` acts entrywise, materializing only
/// `block` rows of the state at a time. Bit-identical to the dense path when
/// `block >= m` (it then degenerates to one dense block).
pub fn field_eval_streaming<G>(
    l: &DMatrix<f64>,
    r: &DMatrix<f64>,
    g: G,
    w: &DMatrix<f64>,
    block: usize,
) -> DMatrix<f64>
where
    G: Fn(f64) -> f64 + Send + Sync,
{
    assert!(block >= 1, "block height must be positive");
    assert_eq!(l.ncols(), r.ncols(), "factor widths must agree");
    assert_eq!(w.nrows(), r.nrows(), "W must have n rows");
    let m = l.nrows();
    let s = w.ncols();
    let starts: Vec<usize> = (0..m).step_by(block).collect();
    let pieces: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&start| {
            let rows = block.min(m - start);
            let mut x_block = l.rows(start, rows) * r.transpose();
            for v in x_block.iter_mut() {
                *v = g(*v);
            }
            x_block * w
        })
        .collect();

    let mut out = DMatrix::zeros(m, s);
    for (&start, piece) in starts.iter().zip(&pieces) {
        out.rows_mut(start, piece.nrows()).copy_from(piece);
    }
    out
}

/// A nonstiff field `F(t, X) = g(X)` acting entrywise, evaluated by row-block
/// streaming so the dense state never materializes.
pub struct EntrywiseField<G> {
    m: usize,
    n: usize,
    g: G,
    block: usize,
}

impl<G> EntrywiseField<G>
where
    G: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(m: usize, n: usize, g: G) -> Self {
        Self { m, n, g, block: DEFAULT_BLOCK_ROWS }
    }

    pub fn with_block(mut self, block: usize) -> Self {
        assert!(block >= 1);
        self.block = block;
        self
    }
}

impl<G> NonstiffField for EntrywiseField<G>
where
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn nrows(&self) -> usize {
        self.m
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn times(&self, _t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        field_eval_streaming(x.left, x.right, &self.g, w, self.block)
    }

    fn transpose_times(&self, _t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        // g(X)^T = g(X^T) for entrywise g; stream with the factor roles swapped.
        field_eval_streaming(x.right, x.left, &self.g, w, self.block)
    }

    fn dense(&self, _t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.map(|v| (self.g)(v))
    }
}
