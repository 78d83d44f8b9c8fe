use std::sync::Arc;

use nalgebra::DMatrix;

use super::allen_cahn::laplacian_1d_periodic;
use super::{EntrywiseField, Grid2D};
use crate::splitting::{InitialState, SemilinearProblem};

/// Concentration clamp keeping the logarithms of the potential defined.
pub const FH_CLAMP: f64 = 1e-9;

/// Knee below which (and mirrored above `1 - knee`) the potential derivative
/// continues as its tangent line. The raw logarithm has slope `theta / u`,
/// which reaches 8e8 at the clamp floor; low-rank reconstructions routinely
/// dip that far, and an explicit inner solver cannot traverse such a
/// Lipschitz constant. The tangent extension caps the slope near 8e3 while
/// only acting where the state is far outside the physically occupied band.
pub const FH_SMOOTH_KNEE: f64 = 1e-4;

const THETA: f64 = 0.8;
const THETA_C: f64 = 1.0;
const EPS: f64 = 0.1;

/// Initial interface geometry for the Flory-Huggins benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceKind {
    /// Six-pointed star on `[0, 1]^2`.
    Star,
    /// Butterfly curve on `[-2, 2]^2`.
    Butterfly,
}

/// Allen-Cahn dynamics with the logarithmic Flory-Huggins potential:
/// `du/dt = eps^2 Delta u - f(u)` with
/// `f(u) = theta ln(u/(1-u)) + 2 theta_c (1 - 2u)`, `theta = 0.8`,
/// `theta_c = 1`, `eps = 0.1`, periodic boundaries.
///
/// The tanh-shaped initial data is mapped into `(0, 1)` by `u -> (1 + u)/2`
/// and clamped to `[FH_CLAMP, 1 - FH_CLAMP]`; the same clamp guards the
/// logarithm inside the field.
pub fn flory_huggins(n: usize, ic: InterfaceKind) -> SemilinearProblem {
    assert!(n >= 32, "flory-huggins grid needs n >= 32");
    let (lo, hi, t_final) = match ic {
        InterfaceKind::Star => (0.0, 1.0, 100.0),
        InterfaceKind::Butterfly => (-2.0, 2.0, 10.0),
    };
    let grid = Grid2D::periodic(n, lo, hi, lo, hi);
    let a = Arc::new(laplacian_1d_periodic(n, grid.spacing(), EPS * EPS));
    let field = Arc::new(EntrywiseField::new(n, n, |v: f64| -potential_derivative(v)));

    let mut u0 = DMatrix::zeros(n, n);
    for j in 0..n {
        let y = grid.y(j);
        for i in 0..n {
            let x = grid.x(i);
            let raw = match ic {
                InterfaceKind::Star => star_profile(x, y),
                InterfaceKind::Butterfly => butterfly_profile(x, y),
            };
            u0[(i, j)] = ((1.0 + raw) / 2.0).clamp(FH_CLAMP, 1.0 - FH_CLAMP);
        }
    }

    SemilinearProblem {
        name: match ic {
            InterfaceKind::Star => format!("fh-star-{n}"),
            InterfaceKind::Butterfly => format!("fh-butterfly-{n}"),
        },
        a1: a.clone(),
        a2: a,
        field,
        initial: InitialState::Dense(u0),
        t0: 0.0,
        t_final,
        grid: Some(grid),
    }
}

/// `f(u) = F'(u)` of the logarithmic potential, continued by its tangent
/// lines outside `[FH_SMOOTH_KNEE, 1 - FH_SMOOTH_KNEE]` (see the knee docs).
pub fn potential_derivative(u: f64) -> f64 {
    let lo = FH_SMOOTH_KNEE;
    let hi = 1.0 - FH_SMOOTH_KNEE;
    if u < lo {
        raw_derivative(lo) + raw_second_derivative(lo) * (u - lo)
    } else if u > hi {
        raw_derivative(hi) + raw_second_derivative(hi) * (u - hi)
    } else {
        raw_derivative(u)
    }
}

fn raw_derivative(u: f64) -> f64 {
    THETA * (u / (1.0 - u)).ln() + 2.0 * THETA_C * (1.0 - 2.0 * u)
}

fn raw_second_derivative(u: f64) -> f64 {
    THETA / (u * (1.0 - u)) - 4.0 * THETA_C
}

fn star_profile(x: f64, y: f64) -> f64 {
    let dx = x - 0.5;
    let dy = y - 0.5;
    let r = (dx * dx + dy * dy).sqrt();
    let theta = if dx == 0.0 && dy == 0.0 { 0.0 } else { dy.atan2(dx) };
    ((0.25 + 0.1 * (6.0 * theta).cos() - r) / (EPS * std::f64::consts::SQRT_2)).tanh()
}

fn butterfly_profile(x: f64, y: f64) -> f64 {
    let (k, a, b, c, d) = (1.8, 0.40178, 0.30178, 6.0, 3.0);
    let r = (x * x + y * y).sqrt();
    let phi = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
    let rho = k * (a + b * (c * phi).cos() * (d * phi).sin());
    ((rho - r) / (EPS * std::f64::consts::SQRT_2)).tanh()
}

/// Discrete free energy
/// `E(u) = sum [ eps^2/2 |grad_h u|^2 + theta (u ln u + (1-u) ln(1-u))
///              + 2 theta_c u (1-u) ] dx dy`
/// with forward differences under periodic wrap.
pub fn flory_huggins_energy(u: &DMatrix<f64>, spacing: f64) -> f64 {
    let n = u.nrows();
    assert_eq!(u.ncols(), n);
    let cell = spacing * spacing;
    let mut e = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = u[(i, j)].clamp(FH_CLAMP, 1.0 - FH_CLAMP);
            let gx = (u[((i + 1) % n, j)] - u[(i, j)]) / spacing;
            let gy = (u[(i, (j + 1) % n)] - u[(i, j)]) / spacing;
            let grad = 0.5 * EPS * EPS * (gx * gx + gy * gy);
            let entropic = THETA * (v * v.ln() + (1.0 - v) * (1.0 - v).ln());
            let mixing = 2.0 * THETA_C * v * (1.0 - v);
            e += (grad + entropic + mixing) * cell;
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_concentration_is_the_symmetric_point() {
        assert_eq!(potential_derivative(0.5), 0.0);
    }

    #[test]
    fn star_center_maps_near_one() {
        // at the domain center the signed distance is 0.25 + 0.1 cos(6 theta) > 0
        let prob = flory_huggins(32, InterfaceKind::Star);
        let u0 = match &prob.initial {
            InitialState::Dense(u) => u.clone(),
            _ => unreachable!(),
        };
        // node nearest the center
        let g = prob.grid.unwrap();
        let mid = 16; // x = 0.5 exactly for n = 32 on [0,1]
        assert!((g.x(mid) - 0.5).abs() < 1e-12);
        assert!(u0[(mid, mid)] > 0.95, "center value {}", u0[(mid, mid)]);
    }

    #[test]
    fn initial_data_respects_clamp() {
        for ic in [InterfaceKind::Star, InterfaceKind::Butterfly] {
            let prob = flory_huggins(32, ic);
            let u0 = match &prob.initial {
                InitialState::Dense(u) => u.clone(),
                _ => unreachable!(),
            };
            let min = u0.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = u0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(min >= FH_CLAMP, "{ic:?}: min {min}");
            assert!(max <= 1.0 - FH_CLAMP, "{ic:?}: max {max}");
        }
    }

    #[test]
    fn butterfly_far_field_is_clamped_low() {
        let prob = flory_huggins(32, InterfaceKind::Butterfly);
        let u0 = match &prob.initial {
            InitialState::Dense(u) => u.clone(),
            _ => unreachable!(),
        };
        // corner of [-2,2]^2 is far outside the curve, tanh saturates to -1
        assert!(u0[(0, 0)] <= FH_CLAMP * 1.0001);
    }

    #[test]
    fn energy_prefers_pure_phases_over_midpoint() {
        let n = 32;
        let spacing = 1.0 / n as f64;
        let mid = DMatrix::from_element(n, n, 0.5);
        // binodal-ish composition
        let phase = DMatrix::from_element(n, n, 0.145);
        let e_mid = flory_huggins_energy(&mid, spacing);
        let e_phase = flory_huggins_energy(&phase, spacing);
        assert!(e_phase < e_mid, "{e_phase} vs {e_mid}");
    }

    #[test]
    fn field_is_finite_at_clamp_bounds() {
        let f_low = potential_derivative(0.0);
        let f_high = potential_derivative(1.0);
        assert!(f_low.is_finite() && f_high.is_finite());
        assert!(f_low < 0.0 && f_high > 0.0);
    }

    #[test]
    fn tangent_extension_is_continuous_with_bounded_slope() {
        let knee = FH_SMOOTH_KNEE;
        let eps = 1e-10;
        let jump = (potential_derivative(knee - eps) - potential_derivative(knee + eps)).abs();
        assert!(jump < 1e-4, "C1 junction at the knee, jump {jump:e}");
        // slope below the knee stays at the tangent value
        let slope = (potential_derivative(0.0) - potential_derivative(-1.0)).abs();
        assert!(slope < 1e4, "tangent slope {slope:e}");
    }
}
