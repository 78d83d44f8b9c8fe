use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::Grid2D;
use crate::matfun::CsrOperator;
use crate::odesolve::{FactoredPair, NonstiffField};
use crate::splitting::{InitialState, SemilinearProblem};

/// Assembled data of the Penzl diffusion-convection control problem.
pub struct RiccatiData {
    pub a: CsrOperator,
    /// Input indicator, `B_k = 1` iff the node's x coordinate lies in (0.1, 0.3].
    pub b: DVector<f64>,
    /// Output indicator, `C_k = 1` iff the x coordinate lies in (0.7, 0.9].
    pub c: DVector<f64>,
    /// Output weight `Q = q I` with `q = 100`.
    pub q: f64,
    /// Control weight `R = I`.
    pub r: f64,
}

/// Differential Riccati equation
/// `dX/dt = A^T X + X A + C^T Q C - X B R^{-1} B^T X`
/// for the Penzl operator `Delta w - 10 x w_x - 100 y w_y` on the unit square
/// with homogeneous Dirichlet boundaries, discretized on `nt x nt` interior
/// points (`d = nt^2`). `X0 = I`, `T = 0.1`.
pub fn riccati_penzl(nt: usize) -> SemilinearProblem {
    assert!(nt >= 4, "penzl grid needs nt >= 4");
    let data = penzl_data(nt);
    let d = nt * nt;
    let grid = Grid2D::dirichlet_interior(nt, 0.0, 1.0, 0.0, 1.0);

    let a_transposed = transpose_csr(&data.a, d);
    let field = Arc::new(RiccatiField {
        b: data.b.clone(),
        c: data.c.clone(),
        q: data.q,
        r_inv: 1.0 / data.r,
    });

    SemilinearProblem {
        name: format!("dre-penzl-{d}"),
        a1: Arc::new(a_transposed),
        a2: Arc::new(data.a),
        field,
        initial: InitialState::Dense(DMatrix::identity(d, d)),
        t0: 0.0,
        t_final: 0.1,
        grid: Some(grid),
    }
}

pub fn penzl_data(nt: usize) -> RiccatiData {
    let d = nt * nt;
    let grid = Grid2D::dirichlet_interior(nt, 0.0, 1.0, 0.0, 1.0);
    let delta = grid.spacing();
    let lap = 1.0 / (delta * delta);

    let mut triplets = Vec::with_capacity(5 * d);
    for j in 0..nt {
        let y = grid.y(j);
        for i in 0..nt {
            let x = grid.x(i);
            let k = grid.node(i, j);
            triplets.push((k, k, -4.0 * lap));
            let conv_x = 10.0 * x / (2.0 * delta);
            let conv_y = 100.0 * y / (2.0 * delta);
            if i + 1 < nt {
                triplets.push((k, grid.node(i + 1, j), lap - conv_x));
            }
            if i > 0 {
                triplets.push((k, grid.node(i - 1, j), lap + conv_x));
            }
            if j + 1 < nt {
                triplets.push((k, grid.node(i, j + 1), lap - conv_y));
            }
            if j > 0 {
                triplets.push((k, grid.node(i, j - 1), lap + conv_y));
            }
        }
    }
    let a = CsrOperator::from_triplets(d, triplets);

    let b = DVector::from_fn(d, |k, _| {
        let x = grid.x(k % nt);
        if 0.1 < x && x <= 0.3 {
            1.0
        } else {
            0.0
        }
    });
    let c = DVector::from_fn(d, |k, _| {
        let x = grid.x(k % nt);
        if 0.7 < x && x <= 0.9 {
            1.0
        } else {
            0.0
        }
    });
    RiccatiData { a, b, c, q: 100.0, r: 1.0 }
}

fn transpose_csr(a: &CsrOperator, dim: usize) -> CsrOperator {
    let dense = a.to_dense();
    let mut triplets = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let v = dense[(j, i)];
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    CsrOperator::from_triplets(dim, triplets)
}

/// `F(t, X) = q C^T C - X B r^{-1} B^T X`, evaluated through rank-one
/// contractions against the factors only.
pub struct RiccatiField {
    b: DVector<f64>,
    c: DVector<f64>,
    q: f64,
    r_inv: f64,
}

impl NonstiffField for RiccatiField {
    fn nrows(&self) -> usize {
        self.b.len()
    }

    fn ncols(&self) -> usize {
        self.b.len()
    }

    fn times(&self, _t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        // q c (c^T W) - L (R^T b) (b^T L) (R^T W) * r_inv
        let ctw = self.c.transpose() * w; // 1 x s
        let mut out = &self.c * ctw * self.q;
        let rb = x.right.transpose() * &self.b; // k
        let bl = x.left.transpose() * &self.b; // k
        let rw = x.right.transpose() * w; // k x s
        let coeff = bl.transpose() * rw; // 1 x s
        out -= (x.left * rb) * coeff * self.r_inv;
        out
    }

    fn transpose_times(&self, _t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        // F^T = q C^T C - X^T B r^{-1} B^T X^T with X^T = R L^T
        let ctw = self.c.transpose() * w;
        let mut out = &self.c * ctw * self.q;
        let lb = x.left.transpose() * &self.b;
        let rb = x.right.transpose() * &self.b;
        let lw = x.left.transpose() * w;
        let coeff = rb.transpose() * lw;
        out -= (x.right * lb) * coeff * self.r_inv;
        out
    }

    fn project(
        &self,
        _t: f64,
        x: FactoredPair<'_>,
        q1: &DMatrix<f64>,
        q2: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let cq1 = q1.tr_mul(&self.c);
        let cq2 = q2.tr_mul(&self.c);
        let mut out = cq1 * cq2.transpose() * self.q;
        // (Q1^T L)(R^T b) (b^T L)(R^T Q2)
        let q1l = q1.tr_mul(x.left);
        let rb = x.right.transpose() * &self.b;
        let bl = x.left.transpose() * &self.b;
        let rq2 = x.right.transpose() * q2;
        out -= (q1l * rb) * (bl.transpose() * rq2) * self.r_inv;
        out
    }

    fn dense(&self, _t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
        let xb = x * &self.b;
        let xtb = x.tr_mul(&self.b);
        &self.c * self.c.transpose() * self.q - xb * xtb.transpose() * self.r_inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::StiffOperator;

    #[test]
    fn indicator_counts_for_default_grid() {
        // nt = 20, delta = 1/21: x in (0.1, 0.3] picks i in {3,4,5,6}, so 80
        // nonzeros over the 20 y-columns; same count for C.
        let data = penzl_data(20);
        assert_eq!(data.b.iter().filter(|v| **v == 1.0).count(), 80);
        assert_eq!(data.c.iter().filter(|v| **v == 1.0).count(), 80);
        assert_eq!(data.b.len(), 400);
    }

    #[test]
    fn operator_is_asymmetric_with_convection() {
        let data = penzl_data(6);
        assert!(!data.a.is_symmetric(), "convection must break symmetry");
        let dense = data.a.to_dense();
        let asym = (&dense - dense.transpose()).norm();
        assert!(asym > 1.0);
    }

    #[test]
    fn zero_state_leaves_rank_one_source() {
        let prob = riccati_penzl(6);
        let d = 36;
        let zero = DMatrix::zeros(d, d);
        let f = prob.field.dense(0.0, &zero);
        let nnz_c = 6.0; // one x-index in (0.7, 0.9] at nt = 6? compute below
        let data = penzl_data(6);
        let count = data.c.iter().filter(|v| **v == 1.0).count() as f64;
        let _ = nnz_c;
        assert!((f.norm() - 100.0 * count).abs() < 1e-10);
        // rank one
        let (_, sigma, _) = crate::lowrank::thin_svd(&f).unwrap();
        assert!(sigma[0] > 0.0 && sigma[1] < 1e-12 * sigma[0]);
    }

    #[test]
    fn symmetric_state_gives_symmetric_field() {
        let prob = riccati_penzl(5);
        let d = 25;
        let raw = DMatrix::from_fn(d, d, |i, j| (((i * 29 + j * 13) % 17) as f64 / 8.0) - 1.0);
        let sym = (&raw + raw.transpose()) * 0.5;
        let f = prob.field.dense(0.0, &sym);
        assert!((&f - f.transpose()).norm() <= 1e-12 * f.norm());
    }

    #[test]
    fn factored_paths_match_dense() {
        let prob = riccati_penzl(5);
        let d = 25;
        let l = DMatrix::from_fn(d, 3, |i, j| (((i * 7 + j * 11 + 1) % 13) as f64 / 6.0) - 1.0);
        let r = DMatrix::from_fn(d, 3, |i, j| (((i * 3 + j * 17 + 5) % 11) as f64 / 5.0) - 1.0);
        let w = DMatrix::from_fn(d, 2, |i, j| (((i * 19 + j + 3) % 7) as f64 / 3.0) - 1.0);
        let x = FactoredPair::new(&l, &r);
        let dense_x = x.dense();
        let f = prob.field.dense(0.0, &dense_x);
        assert!((prob.field.times(0.0, x, &w) - &f * &w).norm() <= 1e-11 * f.norm());
        assert!(
            (prob.field.transpose_times(0.0, x, &w) - f.transpose() * &w).norm()
                <= 1e-11 * f.norm()
        );
        let q1 = DMatrix::from_fn(d, 2, |i, j| ((i + 2 * j) as f64 * 0.23).sin());
        let q2 = DMatrix::from_fn(d, 2, |i, j| ((3 * i + j) as f64 * 0.17).cos());
        let proj = prob.field.project(0.0, x, &q1, &q2);
        let oracle = q1.transpose() * &f * &q2;
        assert!((proj - &oracle).norm() <= 1e-11 * oracle.norm().max(1.0));
    }

    #[test]
    fn stiff_pair_is_transposed_penzl() {
        let prob = riccati_penzl(5);
        let w = DMatrix::from_fn(25, 2, |i, j| ((i * 2 + j + 1) as f64 * 0.11).sin());
        // a1 = A^T: applying a1 equals applying a2 transposed
        let via_a1 = prob.a1.apply(&w);
        let via_a2t = prob.a2.apply_transpose(&w);
        assert!((via_a1 - via_a2t).norm() < 1e-13);
    }
}
