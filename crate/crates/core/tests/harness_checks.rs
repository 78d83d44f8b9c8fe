//! Harness-level guarantees measured on desk instances: inner-solver error
//! must stay invisible next to the splitting error, and temporal rates must
//! come out at the schemes' orders on the small Riccati benchmark.

use lowsplit_core::harness::{temporal_sweep, SweepParams};
use lowsplit_core::problems::riccati_penzl;
use lowsplit_core::splitting::Scheme;
use lowsplit_core::steppers::StepperKind;

#[test]
fn splitting_error_dominates_inner_error() {
    // Halving the inner tolerances must not move the reported relerr by more
    // than 1%.
    let prob = riccati_penzl(6);
    let run = |rtol: f64, atol: f64| {
        let mut params = SweepParams::with_seed(42);
        params.inner = lowsplit_core::IvpConfig::with_tolerances(rtol, atol);
        let report = temporal_sweep(&prob, Scheme::Strang, StepperKind::Drsvd, &[6], &[64], &params)
            .expect("sweep")
            .pop()
            .unwrap();
        report.rows[0].relerr
    };
    let base = run(1e-8, 1e-12);
    let tight = run(5e-9, 5e-13);
    let change = (base - tight).abs() / base;
    assert!(change < 0.01, "inner tolerance leak: relerr moved by {change:.3e}");
}

#[test]
fn toy_riccati_orders_match_the_schemes() {
    let prob = riccati_penzl(6);
    let params = SweepParams::with_seed(11);
    let steps = [16usize, 32, 64, 128];
    let lie = temporal_sweep(&prob, Scheme::Lie, StepperKind::Drsvd, &[8], &steps, &params)
        .expect("lie")
        .pop()
        .unwrap();
    let lie_rate = lie.fitted_rate(3);
    assert!((0.85..=1.15).contains(&lie_rate), "lie rate {lie_rate}");

    let strang = temporal_sweep(&prob, Scheme::Strang, StepperKind::Dgn, &[8], &steps, &params)
        .expect("strang")
        .pop()
        .unwrap();
    let strang_rate = strang.fitted_rate(3);
    assert!((1.8..=2.15).contains(&strang_rate), "strang rate {strang_rate}");
}
