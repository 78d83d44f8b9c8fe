//! Shared contract suite for every nonstiff field implementation: linearity
//! in the block argument and consistency of the projected evaluation, checked
//! on deterministic pseudo-random probes.

use nalgebra::DMatrix;

use lowsplit_core::odesolve::{FactoredPair, NonstiffField};
use lowsplit_core::problems::manufactured::rank3_trajectory;
use lowsplit_core::problems::{allen_cahn_cubic, flory_huggins, riccati_penzl, InterfaceKind};
use lowsplit_core::splitting::SemilinearProblem;

fn probe(rows: usize, cols: usize, salt: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        ((((i * 31 + j * 17 + salt * 13 + 7) * 2654435761) % 997) as f64 / 498.5 - 1.0) * 0.4
    })
}

fn check_field(name: &str, field: &dyn NonstiffField, t: f64) {
    let (m, n) = (field.nrows(), field.ncols());
    let l = probe(m, 4, 1);
    let r = probe(n, 4, 2);
    let x = FactoredPair::new(&l, &r);

    // linearity in W on random probes
    let w1 = probe(n, 3, 3);
    let w2 = probe(n, 3, 4);
    let alpha = 0.37;
    let lhs = field.times(t, x, &(&w1 * alpha + &w2));
    let rhs = field.times(t, x, &w1) * alpha + field.times(t, x, &w2);
    let scale = lhs.norm().max(1.0);
    assert!(
        (lhs - rhs).norm() <= 1e-12 * scale,
        "{name}: times is not linear in W"
    );

    let wt1 = probe(m, 3, 5);
    let wt2 = probe(m, 3, 6);
    let lhs = field.transpose_times(t, x, &(&wt1 * alpha + &wt2));
    let rhs = field.transpose_times(t, x, &wt1) * alpha + field.transpose_times(t, x, &wt2);
    let scale = lhs.norm().max(1.0);
    assert!(
        (lhs - rhs).norm() <= 1e-12 * scale,
        "{name}: transpose_times is not linear in W"
    );

    // projection consistency: project = Q1^T * times(Q2)
    let q1 = probe(m, 3, 7);
    let q2 = probe(n, 2, 8);
    let proj = field.project(t, x, &q1, &q2);
    let oracle = q1.transpose() * field.times(t, x, &q2);
    let scale = oracle.norm().max(1.0);
    assert!(
        (proj - &oracle).norm() <= 1e-12 * scale,
        "{name}: project inconsistent with times"
    );

    // transpose_times consistent with the dense evaluation
    let dense = field.dense(t, &x.dense());
    let w = probe(m, 2, 9);
    let via_t = field.transpose_times(t, x, &w);
    let via_dense = dense.transpose() * &w;
    assert!(
        (via_t - &via_dense).norm() <= 1e-10 * via_dense.norm().max(1.0),
        "{name}: transpose_times disagrees with dense"
    );
}

fn check_problem_field(prob: &SemilinearProblem) {
    check_field(&prob.name, prob.field.as_ref(), prob.t0 + 0.01);
}

#[test]
fn allen_cahn_field_contract() {
    check_problem_field(&allen_cahn_cubic(24));
}

#[test]
fn riccati_field_contract() {
    check_problem_field(&riccati_penzl(5));
}

#[test]
fn flory_huggins_field_contracts() {
    check_problem_field(&flory_huggins(32, InterfaceKind::Star));
    check_problem_field(&flory_huggins(32, InterfaceKind::Butterfly));
}

#[test]
fn manufactured_field_contract() {
    let traj = rank3_trajectory(18, 15, 3);
    check_field("manufactured", &traj.field(), 0.1);
}

#[test]
fn riccati_lie_step_preserves_symmetry() {
    // starting from symmetric low-rank data, one full Lie step stays
    // symmetric to well below the solver tolerances
    use lowsplit_core::harness::{build_splitting_config, SweepParams};
    use lowsplit_core::lowrank::{truncate_dense, TruncationRule};
    use lowsplit_core::splitting::{lie_step, Scheme};
    use lowsplit_core::steppers::StepperKind;

    let prob = riccati_penzl(6);
    let d = 36;
    let raw = probe(d, d, 21);
    let sym = (&raw + raw.transpose()) * 0.5;
    let x0 = truncate_dense(&sym, &TruncationRule::fixed(6)).unwrap();
    let mut params = SweepParams::with_seed(9);
    params.oversampling = 3;
    params.extra_oversampling = 3;
    let cfg = build_splitting_config(Scheme::Lie, 1, StepperKind::Drsvd, 6, &params);
    let tau = 0.1 / 64.0;
    let (y, _) = lie_step(&prob, &x0, 0.0, tau, &cfg, 0).unwrap();
    let dense = y.dense();
    let asym = (&dense - dense.transpose()).norm();
    assert!(
        asym <= 1e-8 * dense.norm(),
        "symmetry broken: {asym:.3e} vs {:.3e}",
        dense.norm()
    );
}
