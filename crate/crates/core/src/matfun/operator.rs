use nalgebra::DMatrix;

/// A sparse or structured operator `A` applied to tall-thin blocks.
///
/// Implementations must be pure: `apply` is linear up to floating point and
/// safe to call concurrently from several threads.
pub trait StiffOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `A * W` for a `dim x s` block.
    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64>;

    /// `A^T * W`.
    fn apply_transpose(&self, w: &DMatrix<f64>) -> DMatrix<f64>;

    fn is_symmetric(&self) -> bool;

    /// Cheap bound on the spectral magnitude (field-of-values radius), used
    /// only to seed the substep heuristic of the exponential action.
    fn spectral_bound_hint(&self) -> Option<f64> {
        None
    }
}

/// View of an operator with `apply` and `apply_transpose` swapped.
pub struct TransposedOperator<'a>(pub &'a dyn StiffOperator);

impl StiffOperator for TransposedOperator<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.apply_transpose(w)
    }

    fn apply_transpose(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.apply(w)
    }

    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn spectral_bound_hint(&self) -> Option<f64> {
        self.0.spectral_bound_hint()
    }
}

/// Dense operator, for desk-scale problems and tests.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    a: DMatrix<f64>,
    symmetric: bool,
}

impl DenseOperator {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "operator must be square");
        let symmetric = (&a - a.transpose()).norm() <= 1e-14 * a.norm().max(1.0);
        Self { a, symmetric }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl StiffOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * w
    }

    fn apply_transpose(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.tr_mul(w)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn spectral_bound_hint(&self) -> Option<f64> {
        Some(gershgorin_radius_dense(&self.a))
    }
}

/// The zero generator; its flow is the identity.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOperator {
    pub dim: usize,
}

impl StiffOperator for ZeroOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(w.nrows(), w.ncols())
    }

    fn apply_transpose(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(w.nrows(), w.ncols())
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn spectral_bound_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Compressed-sparse-row operator for finite-difference stencils. The
/// transposed pattern is materialized once so both directions stream rows.
#[derive(Debug, Clone)]
pub struct CsrOperator {
    dim: usize,
    fwd: Csr,
    bwd: Csr,
    symmetric: bool,
    hint: f64,
}

#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let nnz = triplets.len();
        let mut cols = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut cursor = row_ptr.clone();
        for &(r, c, v) in triplets {
            let p = cursor[r];
            cols[p] = c;
            vals[p] = v;
            cursor[r] += 1;
        }
        Self { row_ptr, cols, vals }
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = self.row_ptr.len() - 1;
        let s = w.ncols();
        let mut out = DMatrix::zeros(dim, s);
        for i in 0..dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[p];
                let v = self.vals[p];
                for j in 0..s {
                    out[(i, j)] += v * w[(c, j)];
                }
            }
        }
        out
    }
}

impl CsrOperator {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        triplets.dedup_by(|later, first| {
            if later.0 == first.0 && later.1 == first.1 {
                first.2 += later.2;
                true
            } else {
                false
            }
        });
        triplets.retain(|&(_, _, v)| v != 0.0);
        for &(r, c, _) in &triplets {
            assert!(r < dim && c < dim, "triplet index out of range");
        }
        let fwd = Csr::from_triplets(dim, &triplets);
        let transposed: Vec<(usize, usize, f64)> =
            triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        let bwd = Csr::from_triplets(dim, &transposed);

        let mut sym_map = std::collections::HashMap::new();
        for &(r, c, v) in &triplets {
            sym_map.insert((r, c), v);
        }
        let symmetric = triplets.iter().all(|&(r, c, v)| {
            sym_map
                .get(&(c, r))
                .is_some_and(|&vt| (v - vt).abs() <= 1e-14 * v.abs().max(1.0))
        });

        let mut hint: f64 = 0.0;
        for i in 0..dim {
            let row_sum: f64 = (fwd.row_ptr[i]..fwd.row_ptr[i + 1])
                .map(|p| fwd.vals[p].abs())
                .sum();
            hint = hint.max(row_sum);
        }
        Self { dim, fwd, bwd, symmetric, hint }
    }

    pub fn nnz(&self) -> usize {
        self.fwd.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.fwd.row_ptr[i]..self.fwd.row_ptr[i + 1] {
                a[(i, self.fwd.cols[p])] = self.fwd.vals[p];
            }
        }
        a
    }
}

impl StiffOperator for CsrOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.fwd.apply(w)
    }

    fn apply_transpose(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.bwd.apply(w)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn spectral_bound_hint(&self) -> Option<f64> {
        Some(self.hint)
    }
}

fn gershgorin_radius_dense(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
