use nalgebra::DMatrix;

use super::{solve_matrix_ivp_checkpoints, IvpConfig, SolveStats};
use crate::splitting::SemilinearProblem;
use crate::{Error, Result};

/// Default ceiling on `m * n` for the dense reference path.
pub const DENSIFY_GUARD: usize = 4_000_000;

/// Dense full-order reference trajectory of `dX/dt = A1 X + X A2 + F(t, X)`
/// at the requested checkpoints, integrated with the embedded 5(4) pair.
///
/// This is the oracle every convergence table is measured against; run it
/// with [`IvpConfig::reference`] tolerances unless there is a reason not to.
pub fn reference_solve(
    prob: &SemilinearProblem,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    checkpoints: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    reference_solve_with_guard(prob, t0, t1, cfg, checkpoints, DENSIFY_GUARD)
}

pub fn reference_solve_with_guard(
    prob: &SemilinearProblem,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    checkpoints: &[f64],
    guard: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let (m, n) = (prob.nrows(), prob.ncols());
    let entries = m * n;
    if entries > guard {
        return Err(Error::ProblemTooLarge { entries, guard });
    }
    prob.validate()?;

    let a1 = prob.a1.as_ref();
    let a2 = prob.a2.as_ref();
    let field = prob.field.as_ref();
    let rhs = move |t: f64, x: &DMatrix<f64>| -> DMatrix<f64> {
        // X * A2 = (A2^T X^T)^T
        let mut out = a1.apply(x);
        out += a2.apply_transpose(&x.transpose()).transpose();
        out += field.dense(t, x);
        out
    };

    let x0 = prob.initial.dense();
    let (snaps, _stats): (Vec<DMatrix<f64>>, SolveStats) =
        solve_matrix_ivp_checkpoints(rhs, &x0, t0, t1, cfg, checkpoints)?;
    Ok(snaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::DenseOperator;
    use crate::odesolve::{FactoredPair, NonstiffField};
    use crate::splitting::InitialState;
    use std::sync::Arc;

    struct ZeroField {
        m: usize,
        n: usize,
    }

    impl NonstiffField for ZeroField {
        fn nrows(&self) -> usize {
            self.m
        }
        fn ncols(&self) -> usize {
            self.n
        }
        fn times(&self, _t: f64, _x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::zeros(self.m, w.ncols())
        }
        fn transpose_times(&self, _t: f64, _x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::zeros(self.n, w.ncols())
        }
        fn dense(&self, _t: f64, _x: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::zeros(self.m, self.n)
        }
    }

    /// dX/dt = x - x^3 entrywise (no stiff part), for closed-form checks.
    struct CubicField {
        m: usize,
        n: usize,
    }

    impl NonstiffField for CubicField {
        fn nrows(&self) -> usize {
            self.m
        }
        fn ncols(&self) -> usize {
            self.n
        }
        fn times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
            self.dense(t, &x.dense()) * w
        }
        fn transpose_times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
            self.dense(t, &x.dense()).transpose() * w
        }
        fn dense(&self, _t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
            x.map(|v| v - v * v * v)
        }
    }

    fn scalar_problem(a: f64, x0: f64, field: Arc<dyn NonstiffField>) -> SemilinearProblem {
        SemilinearProblem {
            name: "scalar".into(),
            a1: Arc::new(DenseOperator::new(DMatrix::from_element(1, 1, a))),
            a2: Arc::new(DenseOperator::new(DMatrix::from_element(1, 1, 0.0))),
            field,
            initial: InitialState::Dense(DMatrix::from_element(1, 1, x0)),
            t0: 0.0,
            t_final: 1.0,
            grid: None,
        }
    }

    #[test]
    fn scalar_linear_decay() {
        // A1 = A2 = diag(-1) on a 1x1 problem: X(1) = e^{-2} X0.
        let prob = SemilinearProblem {
            a2: Arc::new(DenseOperator::new(DMatrix::from_element(1, 1, -1.0))),
            ..scalar_problem(-1.0, 1.0, Arc::new(ZeroField { m: 1, n: 1 }))
        };
        let snaps =
            reference_solve(&prob, 0.0, 1.0, &IvpConfig::reference(), &[1.0]).unwrap();
        let exact = (-2.0f64).exp();
        assert!((snaps[0][(0, 0)] - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn logistic_type_closed_form() {
        // dx/dt = x - x^3, x(0) = 1/2: x(t) = 1/sqrt(1 + 3 e^{-2t}).
        let prob = scalar_problem(0.0, 0.5, Arc::new(CubicField { m: 1, n: 1 }));
        let snaps =
            reference_solve(&prob, 0.0, 1.0, &IvpConfig::reference(), &[1.0]).unwrap();
        let exact = 1.0 / (1.0 + 3.0 * (-2.0f64).exp()).sqrt();
        assert!((snaps[0][(0, 0)] - exact).abs() <= 1e-8);
    }

    #[test]
    fn densify_guard_fires() {
        let prob = scalar_problem(0.0, 1.0, Arc::new(ZeroField { m: 1, n: 1 }));
        match reference_solve_with_guard(&prob, 0.0, 1.0, &IvpConfig::reference(), &[1.0], 0) {
            Err(Error::ProblemTooLarge { .. }) => {}
            other => panic!("expected guard error, got {other:?}"),
        }
    }
}
