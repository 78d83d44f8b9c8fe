//! Synthetic low-rank trajectories with known factors, used to validate
//! rangefinders and steppers against an analytic solution.
//!
//! The trajectory is `G(t) = W1 * diag(g(t)) * W2^T` with fixed orthonormal
//! `W1`, `W2` and smooth scalar weights `g_k(t) = base_k + osc_k sin(freq_k t)`.
//! The associated field `F(t, X) = G'(t) + c (X - G(t))` makes `X(t) = G(t)`
//! the exact solution from `X(0) = G(0)` while keeping a genuine dependence
//! on the state; every column of `F` stays inside `range(W1)` whenever `X`
//! does, so sketched subspaces capture the dynamics exactly.

use nalgebra::DMatrix;

use crate::lowrank::{gaussian_sketch, orth};
use crate::odesolve::{FactoredPair, NonstiffField};
use crate::LowRankFactor;

/// One singular mode: `g(t) = base + osc * sin(freq * t)`.
#[derive(Debug, Clone, Copy)]
pub struct ModeSpec {
    pub base: f64,
    pub osc: f64,
    pub freq: f64,
}

impl ModeSpec {
    pub fn constant(base: f64) -> Self {
        Self { base, osc: 0.0, freq: 0.0 }
    }

    /// A mode that vanishes at `t = 0` and grows smoothly.
    pub fn growing(osc: f64, freq: f64) -> Self {
        Self { base: 0.0, osc, freq }
    }

    fn value(&self, t: f64) -> f64 {
        self.base + self.osc * (self.freq * t).sin()
    }

    fn derivative(&self, t: f64) -> f64 {
        self.osc * self.freq * (self.freq * t).cos()
    }
}

#[derive(Clone)]
pub struct ManufacturedTrajectory {
    w1: DMatrix<f64>,
    w2: DMatrix<f64>,
    modes: Vec<ModeSpec>,
    feedback: f64,
}

impl ManufacturedTrajectory {
    pub fn new(m: usize, n: usize, modes: Vec<ModeSpec>, feedback: f64, seed: u64) -> Self {
        let k = modes.len();
        assert!(k >= 1 && k <= m.min(n));
        let w1 = orth(gaussian_sketch(m, k, seed, 17).omega()).expect("left basis");
        let w2 = orth(gaussian_sketch(n, k, seed, 31).omega()).expect("right basis");
        assert_eq!(w1.ncols(), k, "sketch produced a rank-deficient basis");
        assert_eq!(w2.ncols(), k);
        Self { w1, w2, modes, feedback }
    }

    pub fn nrows(&self) -> usize {
        self.w1.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.w2.nrows()
    }

    pub fn weights_at(&self, t: f64) -> Vec<f64> {
        self.modes.iter().map(|m| m.value(t)).collect()
    }

    pub fn dense_at(&self, t: f64) -> DMatrix<f64> {
        &self.w1 * self.core_at(t) * self.w2.transpose()
    }

    /// Exact state as a factor (modes with zero weight included; callers
    /// truncate if they need the minimal rank).
    pub fn factor_at(&self, t: f64) -> LowRankFactor {
        LowRankFactor::new(self.w1.clone(), self.core_at(t), self.w2.clone())
            .expect("manufactured bases are orthonormal")
    }

    fn core_at(&self, t: f64) -> DMatrix<f64> {
        let k = self.modes.len();
        DMatrix::from_fn(k, k, |i, j| if i == j { self.modes[i].value(t) } else { 0.0 })
    }

    fn core_derivative_at(&self, t: f64) -> DMatrix<f64> {
        let k = self.modes.len();
        DMatrix::from_fn(k, k, |i, j| if i == j { self.modes[i].derivative(t) } else { 0.0 })
    }

    /// Owned field handle (cheap clone of the thin factors).
    pub fn field(&self) -> ManufacturedField {
        ManufacturedField { traj: self.clone() }
    }
}

/// `F(t, X) = G'(t) + c (X - G(t))`; see the module docs.
pub struct ManufacturedField {
    traj: ManufacturedTrajectory,
}

impl NonstiffField for ManufacturedField {
    fn nrows(&self) -> usize {
        self.traj.nrows()
    }

    fn ncols(&self) -> usize {
        self.traj.ncols()
    }

    fn times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        let tr = &self.traj;
        let c = tr.feedback;
        let core = tr.core_derivative_at(t) - tr.core_at(t) * c;
        &tr.w1 * (core * (tr.w2.transpose() * w)) + x.left * (x.right.transpose() * w) * c
    }

    fn transpose_times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64> {
        let tr = &self.traj;
        let c = tr.feedback;
        let core = tr.core_derivative_at(t) - tr.core_at(t) * c;
        &tr.w2 * (core.transpose() * (tr.w1.transpose() * w))
            + x.right * (x.left.transpose() * w) * c
    }

    fn dense(&self, t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
        let tr = &self.traj;
        &tr.w1 * tr.core_derivative_at(t) * tr.w2.transpose()
            + (x - tr.dense_at(t)) * tr.feedback
    }
}

/// Standard fixture: fixed rank 3, mild oscillation, feedback 0.5.
pub fn rank3_trajectory(m: usize, n: usize, seed: u64) -> ManufacturedTrajectory {
    ManufacturedTrajectory::new(
        m,
        n,
        vec![
            ModeSpec { base: 1.0, osc: 0.4, freq: 1.3 },
            ModeSpec { base: 0.5, osc: 0.2, freq: 2.1 },
            ModeSpec { base: 0.25, osc: 0.1, freq: 0.7 },
        ],
        0.5,
        seed,
    )
}

/// Rank grows from 3 to 8 over the step: five extra modes start at zero.
pub fn growing_rank_trajectory(m: usize, n: usize, h: f64, seed: u64) -> ManufacturedTrajectory {
    let mut modes = vec![
        ModeSpec { base: 1.0, osc: 0.3, freq: 1.1 },
        ModeSpec { base: 0.6, osc: 0.2, freq: 1.9 },
        ModeSpec { base: 0.3, osc: 0.1, freq: 0.9 },
    ];
    // sized so each new mode is well above truncation tolerances at t = h
    for k in 0..5 {
        let freq = std::f64::consts::FRAC_PI_2 / h;
        modes.push(ModeSpec::growing(0.2 / (k + 1) as f64, freq));
    }
    ManufacturedTrajectory::new(m, n, modes, 0.5, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odesolve::{solve_matrix_ivp, IvpConfig};

    #[test]
    fn exact_solution_satisfies_the_ode() {
        // Integrate dX/dt = F(t, X) densely from G(0); must land on G(h).
        let traj = rank3_trajectory(12, 9, 7);
        let field = traj.field();
        let x0 = traj.dense_at(0.0);
        let h = 0.3;
        let (x, _) = solve_matrix_ivp(
            |t, x| field.dense(t, x),
            &x0,
            0.0,
            h,
            &IvpConfig::with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        let exact = traj.dense_at(h);
        assert!((x - &exact).norm() <= 1e-9 * exact.norm());
    }

    #[test]
    fn field_operations_are_consistent() {
        let traj = rank3_trajectory(10, 8, 3);
        let field = traj.field();
        let f = traj.factor_at(0.2);
        let (l, r) = f.to_product();
        let x = FactoredPair::new(&l, &r);
        let w = DMatrix::from_fn(8, 2, |i, j| ((i * 2 + j + 1) as f64).sin());
        let wt = DMatrix::from_fn(10, 2, |i, j| ((i + 3 * j + 1) as f64).cos());
        let dense_f = field.dense(0.2, &f.dense());
        assert!((field.times(0.2, x, &w) - &dense_f * &w).norm() <= 1e-12);
        assert!(
            (field.transpose_times(0.2, x, &wt) - dense_f.transpose() * &wt).norm() <= 1e-12
        );
    }

    #[test]
    fn growing_trajectory_changes_rank() {
        let h = 0.25;
        let traj = growing_rank_trajectory(16, 16, h, 11);
        let w0 = traj.weights_at(0.0);
        let wh = traj.weights_at(h);
        assert_eq!(w0.iter().filter(|v| v.abs() > 1e-12).count(), 3);
        assert_eq!(wh.iter().filter(|v| v.abs() > 1e-3).count(), 8);
    }
}
