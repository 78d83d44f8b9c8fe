//! Independent oracles shared by unit tests. Nothing here is part of the
//! implementation paths it checks.

use nalgebra::DMatrix;

/// Dense matrix exponential by scaling-and-squaring of the Taylor series.
pub(crate) fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let k = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(k as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for i in 1..120 {
        term = &term * &scaled / i as f64;
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}
