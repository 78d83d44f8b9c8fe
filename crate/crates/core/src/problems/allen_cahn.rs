use std::sync::Arc;

use nalgebra::DMatrix;

use super::{EntrywiseField, Grid2D};
use crate::matfun::CsrOperator;
use crate::splitting::{InitialState, SemilinearProblem};

/// Allen-Cahn with cubic reaction on `[0, 2pi]^2` with periodic boundaries:
/// `dX/dt = A X + X A + X - X^{o3}` where `A = eps * D2` is the second-order
/// centered one-dimensional stencil and the cube acts entrywise.
///
/// Grid values are stored as `X[i, j] = f(x_i, y_j)` so the row operator acts
/// in x and the column operator in y; `A` is symmetric, the stiff pair is
/// `(A, A)`. Time span `[0, 1]`, diffusivity `eps = 0.1`.
pub fn allen_cahn_cubic(n: usize) -> SemilinearProblem {
    assert!(n >= 16, "allen-cahn grid needs n >= 16");
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = Grid2D::periodic(n, 0.0, two_pi, 0.0, two_pi);
    let eps = 0.1;
    let a = Arc::new(laplacian_1d_periodic(n, grid.spacing(), eps));

    let field = Arc::new(EntrywiseField::new(n, n, |v: f64| v - v * v * v));

    let mut f0 = DMatrix::zeros(n, n);
    for j in 0..n {
        let y = grid.y(j);
        for i in 0..n {
            f0[(i, j)] = initial_value(grid.x(i), y);
        }
    }

    SemilinearProblem {
        name: format!("ac-cubic-{n}"),
        a1: a.clone(),
        a2: a,
        field,
        initial: InitialState::Dense(f0),
        t0: 0.0,
        t_final: 1.0,
        grid: Some(grid),
    }
}

/// `eps / h^2 * [1, -2, 1]` with periodic wrap.
pub(crate) fn laplacian_1d_periodic(n: usize, h: f64, eps: f64) -> CsrOperator {
    let c = eps / (h * h);
    let mut triplets = Vec::with_capacity(3 * n);
    for i in 0..n {
        triplets.push((i, i, -2.0 * c));
        triplets.push((i, (i + 1) % n, c));
        triplets.push((i, (i + n - 1) % n, c));
    }
    CsrOperator::from_triplets(n, triplets)
}

/// Initial surface; the denominator saturates at the `sin(x/2) = 0` nodes
/// where the analytic limit is zero.
fn initial_value(x: f64, y: f64) -> f64 {
    let tx = x.tan();
    let ty = y.tan();
    let numerator = ((-tx * tx).exp() + (-ty * ty).exp()) * x.sin() * y.sin();
    let sx = (x / 2.0).sin().abs();
    let sy = (y / 2.0).sin().abs();
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    let (ex, ey) = (1.0 / sx, 1.0 / sy);
    if ex > 700.0 || ey > 700.0 {
        // e^{700} dwarfs the bounded numerator; the quotient underflows to 0.
        return 0.0;
    }
    numerator / (1.0 + ex.exp() + ey.exp())
}
