use nalgebra::DMatrix;

use super::{InitialState, SemilinearProblem};
use crate::lowrank::{truncate_dense, truncate_factor, TruncationRule};
use crate::matfun::{stiff_flow, ExpmConfig};
use crate::steppers::{step_with_stream, StepRecord, StepperConfig};
use crate::{Error, LowRankFactor, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// First order: full nonstiff step, then full stiff flow.
    Lie,
    /// Second order: half stiff flow, full nonstiff step, half stiff flow.
    Strang,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Lie => "lie",
            Self::Strang => "strang",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplittingConfig {
    pub scheme: Scheme,
    /// Number of uniform steps over `[t0, t_final]`.
    pub steps: usize,
    pub stepper: StepperConfig,
    pub expm: ExpmConfig,
    /// Times at which deep factor snapshots are taken; each must coincide
    /// with a step boundary.
    pub checkpoints: Vec<f64>,
    /// Reduction applied to the initial data before stepping. `None` uses
    /// fixed-rank truncation at the stepper's rank, which is also the pinned
    /// behavior for an exact-identity initial value (leading canonical
    /// directions, all singular values tie at 1).
    pub initial_truncation: Option<TruncationRule>,
}

impl SplittingConfig {
    pub fn new(scheme: Scheme, steps: usize, stepper: StepperConfig) -> Self {
        Self {
            scheme,
            steps,
            stepper,
            expm: ExpmConfig::default(),
            checkpoints: Vec::new(),
            initial_truncation: None,
        }
    }
}

/// One Lie-Trotter step: `X -> Phi^A_tau(stepper_tau(X))`.
pub fn lie_step(
    prob: &SemilinearProblem,
    x: &LowRankFactor,
    t: f64,
    tau: f64,
    cfg: &SplittingConfig,
    step_index: usize,
) -> Result<(LowRankFactor, StepRecord)> {
    let (n_tau, mut record) = step_with_stream(
        x,
        prob.field.as_ref(),
        t,
        tau,
        &cfg.stepper,
        step_index as u64,
    )?;
    let out = stiff_flow(prob.a1.as_ref(), prob.a2.as_ref(), tau, &n_tau, &cfg.expm)?;
    debug_assert_eq!(out.rank(), n_tau.rank(), "stiff flow must preserve rank");
    record.step_index = step_index;
    record.t = t;
    record.output_rank = out.rank();
    Ok((out, record))
}

/// One Strang step: half stiff flow, nonstiff step over the full interval
/// (time labels run over `[t, t + tau]`), half stiff flow.
pub fn strang_step(
    prob: &SemilinearProblem,
    x: &LowRankFactor,
    t: f64,
    tau: f64,
    cfg: &SplittingConfig,
    step_index: usize,
) -> Result<(LowRankFactor, StepRecord)> {
    let half = stiff_flow(prob.a1.as_ref(), prob.a2.as_ref(), tau / 2.0, x, &cfg.expm)?;
    let (n_tau, mut record) = step_with_stream(
        &half,
        prob.field.as_ref(),
        t,
        tau,
        &cfg.stepper,
        step_index as u64,
    )?;
    let out = stiff_flow(prob.a1.as_ref(), prob.a2.as_ref(), tau / 2.0, &n_tau, &cfg.expm)?;
    debug_assert_eq!(out.rank(), n_tau.rank(), "stiff flow must preserve rank");
    record.step_index = step_index;
    record.t = t;
    record.output_rank = out.rank();
    Ok((out, record))
}

pub struct IntegrateOutput {
    pub state: LowRankFactor,
    pub records: Vec<StepRecord>,
    /// Deep factor snapshots at the requested checkpoint times.
    pub checkpoints: Vec<(f64, LowRankFactor)>,
}

/// Advances the problem over `[t0, t_final]` with `cfg.steps` uniform steps.
/// Deterministic under the stepper's seed policy.
pub fn integrate(prob: &SemilinearProblem, cfg: &SplittingConfig) -> Result<IntegrateOutput> {
    prob.validate()?;
    cfg.stepper.validate()?;
    if cfg.steps == 0 {
        return Err(Error::InvalidConfig("need at least one step".into()));
    }
    let span = prob.t_final - prob.t0;
    let tau = span / cfg.steps as f64;

    // Checkpoints must land on the uniform grid.
    let mut checkpoint_steps = Vec::with_capacity(cfg.checkpoints.len());
    for &tc in &cfg.checkpoints {
        let k = ((tc - prob.t0) / tau).round();
        let snapped = prob.t0 + k * tau;
        if (snapped - tc).abs() > 1e-9 * span.abs() || k < 0.0 || k > cfg.steps as f64 {
            return Err(Error::InvalidConfig(format!(
                "checkpoint {tc} does not lie on the step grid (tau = {tau})"
            )));
        }
        checkpoint_steps.push(k as usize);
    }

    let mut state = reduce_initial(prob, cfg)?;
    let mut records = Vec::with_capacity(cfg.steps);
    let mut checkpoints = Vec::new();
    for &cs in &checkpoint_steps {
        if cs == 0 {
            checkpoints.push((prob.t0, state.clone()));
        }
    }

    for step in 0..cfg.steps {
        let t = prob.t0 + step as f64 * tau;
        let (next, record) = match cfg.scheme {
            Scheme::Lie => lie_step(prob, &state, t, tau, cfg, step)?,
            Scheme::Strang => strang_step(prob, &state, t, tau, cfg, step)?,
        };
        state = next;
        records.push(record);
        for &cs in &checkpoint_steps {
            if cs == step + 1 {
                checkpoints.push((prob.t0 + (step + 1) as f64 * tau, state.clone()));
            }
        }
    }
    Ok(IntegrateOutput { state, records, checkpoints })
}

/// Reduces the initial data to a factor. An exact identity (the Riccati
/// benchmark) is a fully degenerate tie; the pinned choice is the leading
/// canonical directions at the stepper's rank.
fn reduce_initial(prob: &SemilinearProblem, cfg: &SplittingConfig) -> Result<LowRankFactor> {
    let rule = cfg
        .initial_truncation
        .unwrap_or(TruncationRule::FixedRank { rank: cfg.stepper.rank });
    match &prob.initial {
        InitialState::Factor(f) => truncate_factor(f, &rule),
        InitialState::Dense(x) => {
            if is_identity(x) {
                let k = match rule {
                    TruncationRule::FixedRank { rank } => rank.min(x.nrows().min(x.ncols())),
                    TruncationRule::Tolerance { .. } => cfg.stepper.rank,
                };
                Ok(LowRankFactor::identity_leading(x.nrows(), x.ncols(), k))
            } else {
                truncate_dense(x, &rule)
            }
        }
    }
}

fn is_identity(x: &DMatrix<f64>) -> bool {
    if x.nrows() != x.ncols() {
        return false;
    }
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let expected = if i == j { 1.0 } else { 0.0 };
            if x[(i, j)] != expected {
                return false;
            }
        }
    }
    true
}
