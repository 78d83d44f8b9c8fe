use nalgebra::DMatrix;

use crate::{Error, Result};

/// Configuration of the embedded Runge-Kutta 5(4) solver (Dormand-Prince
/// coefficients, FSAL, PI step-size control).
#[derive(Debug, Clone, Copy)]
pub struct IvpConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Forced initial step; `None` selects the standard heuristic.
    pub initial_step: Option<f64>,
}

impl Default for IvpConfig {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, max_steps: 100_000, initial_step: None }
    }
}

impl IvpConfig {
    /// Tight tolerances for manufacturing reference solutions.
    pub fn reference() -> Self {
        Self { rtol: 1e-10, atol: 1e-13, max_steps: 10_000_000, initial_step: None }
    }

    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        assert!(rtol > 0.0 && atol > 0.0, "tolerances must be positive");
        Self { rtol, atol, ..Self::default() }
    }
}

/// Counters reported back to step records.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

impl SolveStats {
    pub fn absorb(&mut self, other: &SolveStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evals += other.evals;
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th-order weights and the embedded 4th-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn add_scaled(out: &mut DMatrix<f64>, c: f64, k: &DMatrix<f64>) {
    if c == 0.0 {
        return;
    }
    for (o, x) in out.as_mut_slice().iter_mut().zip(k.as_slice()) {
        *o += c * x;
    }
}

/// Scaled RMS norm of the embedded error estimate.
fn error_norm(delta: &DMatrix<f64>, y0: &DMatrix<f64>, y1: &DMatrix<f64>, cfg: &IvpConfig) -> f64 {
    let n = delta.len() as f64;
    let mut acc = 0.0;
    for ((d, a), b) in delta.iter().zip(y0.iter()).zip(y1.iter()) {
        let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
        let r = d / sc;
        acc += r * r;
    }
    (acc / n).sqrt()
}

/// Advances `dY/dt = rhs(t, Y)` from `t0` to `t1 > t0` with adaptive steps.
///
/// The local error per step is controlled to `max(atol, rtol * |Y|)` in a
/// per-entry RMS norm; the result is deterministic for fixed inputs.
pub fn solve_matrix_ivp<F>(
    rhs: F,
    y0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
) -> Result<(DMatrix<f64>, SolveStats)>
where
    F: Fn(f64, &DMatrix<f64>) -> DMatrix<f64>,
{
    let mut stats = SolveStats::default();
    let y = integrate_segment(&rhs, y0.clone(), t0, t1, cfg, &mut stats)?;
    Ok((y, stats))
}

/// As [`solve_matrix_ivp`], returning deep state snapshots at the requested
/// checkpoint times (which must be sorted, inside `(t0, t1]`).
pub fn solve_matrix_ivp_checkpoints<F>(
    rhs: F,
    y0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    checkpoints: &[f64],
) -> Result<(Vec<DMatrix<f64>>, SolveStats)>
where
    F: Fn(f64, &DMatrix<f64>) -> DMatrix<f64>,
{
    for w in checkpoints.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidConfig("checkpoints must be strictly increasing".into()));
        }
    }
    if let (Some(first), Some(last)) = (checkpoints.first(), checkpoints.last()) {
        if *first < t0 || *last > t1 + 1e-12 * (t1 - t0).abs() {
            return Err(Error::InvalidConfig("checkpoints outside the time span".into()));
        }
    }
    let mut stats = SolveStats::default();
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut t = t0;
    let mut y = y0.clone();
    for &tc in checkpoints {
        if tc > t {
            y = integrate_segment(&rhs, y, t, tc, cfg, &mut stats)?;
            t = tc;
        }
        snapshots.push(y.clone());
    }
    Ok((snapshots, stats))
}

fn integrate_segment<F>(
    rhs: &F,
    mut y: DMatrix<f64>,
    t0: f64,
    t1: f64,
    cfg: &IvpConfig,
    stats: &mut SolveStats,
) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &DMatrix<f64>) -> DMatrix<f64>,
{
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(Error::InvalidInput(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    k.push(rhs(t, &y));
    stats.evals += 1;

    let mut h = match cfg.initial_step {
        Some(h0) => h0.min(span),
        None => initial_step(rhs, &y, &k[0], t, cfg, stats).min(span),
    };

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const FACC1: f64 = 5.0; // 1 / min shrink factor
    const FACC2: f64 = 0.1; // 1 / max growth factor
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;
    let mut accepted = 0usize;

    while t < t1 {
        if steps > cfg.max_steps {
            return Err(Error::StiffnessDetected { t, h });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StiffnessDetected { t, h });
        }
        if t + 1.01 * h >= t1 {
            h = t1 - t;
        }

        // Stages 2..7; stage 7 evaluates at (t + h, y1) and is the FSAL slot.
        while k.len() > 1 {
            k.pop();
        }
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                add_scaled(&mut ys, h * A[s][j], kj);
            }
            k.push(rhs(t + C[s] * h, &ys));
            stats.evals += 1;
        }
        // 5th-order solution is the stage-7 argument (A[6] row = b weights).
        let mut y1 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            add_scaled(&mut y1, h * A[6][j], kj);
        }

        let mut delta = DMatrix::zeros(y.nrows(), y.ncols());
        for (j, kj) in k.iter().enumerate() {
            add_scaled(&mut delta, h * E[j], kj);
        }
        let err = error_norm(&delta, &y, &y1, cfg);

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // PI control: the shrink/growth factor uses the previous
            // accepted error before the memory is updated.
            let mut fac = fac11 / facold.powf(BETA);
            fac = FACC2.max(FACC1.min(fac / SAFE));
            facold = err.max(1e-4);
            t += h;
            y = y1;
            let k7 = k.pop().expect("seven stages");
            k.clear();
            k.push(k7); // FSAL
            let mut hnew = h / fac;
            if rejected_last {
                hnew = hnew.min(h);
            }
            h = hnew;
            rejected_last = false;
            steps += 1;
            accepted += 1;
        } else {
            h /= FACC1.min(fac11 / SAFE);
            rejected_last = true;
            stats.rejected += 1;
            steps += 1;
        }
    }
    stats.accepted += accepted;
    Ok(y)
}

/// Standard starting-step heuristic: balance `|y|/|f|` against a probe of the
/// second derivative from one explicit Euler trial.
fn initial_step<F>(
    rhs: &F,
    y: &DMatrix<f64>,
    f0: &DMatrix<f64>,
    t: f64,
    cfg: &IvpConfig,
    stats: &mut SolveStats,
) -> f64
where
    F: Fn(f64, &DMatrix<f64>) -> DMatrix<f64>,
{
    let n = y.len() as f64;
    let scaled_norm = |m: &DMatrix<f64>, reference: &DMatrix<f64>| -> f64 {
        let mut acc = 0.0;
        for (v, r) in m.iter().zip(reference.iter()) {
            let sc = cfg.atol + cfg.rtol * r.abs();
            acc += (v / sc) * (v / sc);
        }
        (acc / n).sqrt()
    };
    let d0 = scaled_norm(y, y);
    let d1 = scaled_norm(f0, y);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };

    let mut y1 = y.clone();
    add_scaled(&mut y1, h0, f0);
    let f1 = rhs(t + h0, &y1);
    stats.evals += 1;
    let d2 = {
        let diff = &f1 - f0;
        scaled_norm(&diff, y) / h0
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
