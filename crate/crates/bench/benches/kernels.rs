//! Micro-benchmarks of the per-step kernels: the two low-rank steppers on a
//! manufactured nonstiff field and the exponential flow of the stiff pair.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lowsplit_core::harness::{build_stepper, SweepParams};
use lowsplit_core::lowrank::{truncate_dense, TruncationRule};
use lowsplit_core::matfun::{expm_action, stiff_flow, DenseOperator};
use lowsplit_core::problems::manufactured::rank3_trajectory;
use lowsplit_core::steppers::{step_with_stream, StepperKind};
use lowsplit_core::ExpmConfig;
use nalgebra::DMatrix;

fn bench_steppers(c: &mut Criterion) {
    let traj = rank3_trajectory(256, 256, 7);
    let field = traj.field();
    let n0 = traj.factor_at(0.0);
    let params = SweepParams::with_seed(3);
    let h = 0.01;

    let mut group = c.benchmark_group("stepper_256");
    for kind in [StepperKind::Drsvd, StepperKind::Dgn] {
        let cfg = build_stepper(kind, 8, &params);
        group.bench_function(kind.label(), |b| {
            b.iter(|| {
                let (out, _) = step_with_stream(black_box(&n0), &field, 0.0, h, &cfg, 0).unwrap();
                black_box(out)
            })
        });
    }
    group.finish();
}

fn bench_stiff_flow(c: &mut Criterion) {
    let d = 256;
    let mut m = DMatrix::from_fn(d, d, |i, j| if i == j { -2.0 } else { 0.0 });
    for i in 0..d - 1 {
        m[(i, i + 1)] = 1.0;
        m[(i + 1, i)] = 1.0;
    }
    let a = DenseOperator::new(m * 40.0);
    let raw = DMatrix::from_fn(d, d, |i, j| {
        ((((i * 13 + j * 29 + 1) * 2654435761) % 997) as f64 / 498.5 - 1.0).sin()
    });
    let x = truncate_dense(&raw, &TruncationRule::fixed(12)).unwrap();
    let cfg = ExpmConfig::default();

    c.bench_function("stiff_flow_256_r12", |b| {
        b.iter(|| black_box(stiff_flow(&a, &a, 0.004, black_box(&x), &cfg).unwrap()))
    });
    c.bench_function("expm_action_256_block12", |b| {
        b.iter(|| black_box(expm_action(&a, 0.004, black_box(x.u()), &cfg).unwrap()))
    });
}

criterion_group!(benches, bench_steppers, bench_stiff_flow);
criterion_main!(benches);
