//! One-step low-rank integrators for the nonstiff subproblem
//! `dN/dt = F(t, N)`: dynamical randomized SVD, dynamical generalized
//! Nystrom, and their rank-adaptive variants.

use nalgebra::DMatrix;

use crate::lowrank::{mix_stream, orth, thin_svd, truncate_svd_triplet, TruncationRule};
use crate::odesolve::{FactoredPair, IvpConfig, NonstiffField, SolveStats};
use crate::rangefinder::{
    adaptive_corangefinder, adaptive_rangefinder, dynamical_corangefinder, dynamical_rangefinder,
    solve_corange_ode, solve_range_ode, AdaptiveConfig, RangefinderConfig,
};
use crate::{Error, LowRankFactor, Result};

const ROLE_RANGE: u64 = 1;
const ROLE_CORANGE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperKind {
    Drsvd,
    Dgn,
    Adrsvd,
    Adgn,
}

impl StepperKind {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::Adrsvd | Self::Adgn)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Drsvd => "drsvd",
            Self::Dgn => "dgn",
            Self::Adrsvd => "adrsvd",
            Self::Adgn => "adgn",
        }
    }
}

/// Tolerances of the adaptive kinds: the rangefinder stopping rule and its
/// failure probability, plus a cap on the grown basis.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveParams {
    pub tolerance: f64,
    pub failure_prob: f64,
    pub max_basis: usize,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self { tolerance: 1e-8, failure_prob: 1e-4, max_basis: usize::MAX }
    }
}

#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub kind: StepperKind,
    /// Target rank; adaptive kinds use it only for the initial reduction of
    /// dense initial data.
    pub rank: usize,
    /// Oversampling `p` of the rangefinder sketch.
    pub oversampling: usize,
    /// Extra oversampling `l` of the co-range sketch (generalized Nystrom).
    pub extra_oversampling: usize,
    /// Power iterations `q`; the generalized Nystrom kinds require `q >= 1`.
    pub power_iters: usize,
    pub truncation: TruncationRule,
    pub adaptive: AdaptiveParams,
    pub ivp: IvpConfig,
    /// Base seed; per-step sketch streams are derived from it.
    pub seed: u64,
}

impl StepperConfig {
    /// Fixed-rank configuration with the default oversampling `p = l = 5`
    /// and one power iteration.
    pub fn fixed(kind: StepperKind, rank: usize, seed: u64) -> Self {
        assert!(!kind.is_adaptive(), "use StepperConfig::adaptive for adaptive kinds");
        Self {
            kind,
            rank,
            oversampling: 5,
            extra_oversampling: 5,
            power_iters: 1,
            truncation: TruncationRule::fixed(rank),
            adaptive: AdaptiveParams::default(),
            ivp: IvpConfig::default(),
            seed,
        }
    }

    /// Adaptive configuration: tolerance-mode truncation plus the adaptive
    /// rangefinder parameters. `rank` seeds the initial reduction only.
    pub fn adaptive(
        kind: StepperKind,
        rank: usize,
        truncation_rtol: f64,
        truncation_atol: f64,
        rangefinder_tol: f64,
        seed: u64,
    ) -> Self {
        assert!(kind.is_adaptive(), "use StepperConfig::fixed for fixed-rank kinds");
        Self {
            kind,
            rank,
            oversampling: 5,
            extra_oversampling: 5,
            power_iters: 0,
            truncation: TruncationRule::tolerance(truncation_rtol, truncation_atol),
            adaptive: AdaptiveParams {
                tolerance: rangefinder_tol,
                ..AdaptiveParams::default()
            },
            ivp: IvpConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be positive".into()));
        }
        if self.kind == StepperKind::Dgn && self.power_iters == 0 {
            return Err(Error::InvalidConfig("DGN requires power_iters >= 1".into()));
        }
        match (self.kind.is_adaptive(), &self.truncation) {
            (true, TruncationRule::FixedRank { .. }) => Err(Error::InvalidConfig(
                "adaptive steppers need tolerance-mode truncation".into(),
            )),
            (false, TruncationRule::Tolerance { .. }) => Err(Error::InvalidConfig(
                "fixed-rank steppers need fixed-rank truncation".into(),
            )),
            _ => Ok(()),
        }
    }

    fn rangefinder_config(&self, stream: u64, oversampling: usize) -> RangefinderConfig {
        RangefinderConfig {
            rank: self.rank,
            oversampling,
            power_iters: self.power_iters,
            ivp: self.ivp,
            seed: self.seed,
            stream,
        }
    }

    fn adaptive_config(&self, stream: u64) -> AdaptiveConfig {
        AdaptiveConfig {
            tolerance: self.adaptive.tolerance,
            failure_prob: self.adaptive.failure_prob,
            power_iters: self.power_iters,
            max_basis: self.adaptive.max_basis,
            ivp: self.ivp,
            seed: self.seed,
            stream,
        }
    }
}

/// Per-step observables; feeds rank-evolution traces and solver accounting.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step_index: usize,
    pub t: f64,
    pub output_rank: usize,
    /// Widths of the augmented bases used by the reduced solves.
    pub basis_sizes: Vec<usize>,
    /// Residual estimator of the adaptive rangefinder, when one ran.
    pub residual_estimate: Option<f64>,
    pub stats: SolveStats,
}

/// Dispatches on `cfg.kind`. `stream` separates the sketch randomness of
/// different steps; single-step callers can pass 0.
pub fn step_with_stream(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    stream: u64,
) -> Result<(LowRankFactor, StepRecord)> {
    cfg.validate()?;
    match cfg.kind {
        StepperKind::Drsvd => drsvd_with_stream(n0, field, t0, h, cfg, stream),
        StepperKind::Dgn => dgn_with_stream(n0, field, t0, h, cfg, stream),
        StepperKind::Adrsvd => adrsvd_with_stream(n0, field, t0, h, cfg, stream),
        StepperKind::Adgn => adgn_with_stream(n0, field, t0, h, cfg, stream),
    }
}

pub fn drsvd_step(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
) -> Result<(LowRankFactor, StepRecord)> {
    drsvd_with_stream(n0, field, t0, h, cfg, 0)
}

pub fn dgn_step(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
) -> Result<(LowRankFactor, StepRecord)> {
    dgn_with_stream(n0, field, t0, h, cfg, 0)
}

pub fn adrsvd_step(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
) -> Result<(LowRankFactor, StepRecord)> {
    adrsvd_with_stream(n0, field, t0, h, cfg, 0)
}

pub fn adgn_step(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
) -> Result<(LowRankFactor, StepRecord)> {
    adgn_with_stream(n0, field, t0, h, cfg, 0)
}

/// `orth([existing, fresh])` without an intermediate copy of the factors.
fn augment_basis(existing: &DMatrix<f64>, fresh: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut joined = DMatrix::zeros(existing.nrows(), existing.ncols() + fresh.ncols());
    joined.columns_mut(0, existing.ncols()).copy_from(existing);
    joined.columns_mut(existing.ncols(), fresh.ncols()).copy_from(fresh);
    orth(&joined)
}

/// Shared tail of the randomized-SVD step: augment the basis with `U0`,
/// solve the projected co-range equation, decompose and truncate.
#[allow(clippy::too_many_arguments)]
fn rsvd_finish(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    range_basis: &DMatrix<f64>,
    mut stats: SolveStats,
    residual_estimate: Option<f64>,
) -> Result<(LowRankFactor, StepRecord)> {
    let q = augment_basis(n0.u(), range_basis)?;
    let (c_h, st) = solve_corange_ode(n0, field, t0, h, &q, None, &cfg.ivp)?;
    stats.absorb(&st);

    // C(t0+h)^T = U~ S~ V~^T, then N1 = T(Q U~ S~ V~^T) in product form.
    let (u_small, sigma, v_right) = thin_svd(&c_h.transpose())?;
    let factor = truncate_svd_triplet(&q * u_small, sigma, v_right, &cfg.truncation)?;

    let record = StepRecord {
        step_index: 0,
        t: t0,
        output_rank: factor.rank(),
        basis_sizes: vec![q.ncols()],
        residual_estimate,
        stats,
    };
    Ok((factor, record))
}

fn drsvd_with_stream(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    stream: u64,
) -> Result<(LowRankFactor, StepRecord)> {
    let rf_cfg = cfg.rangefinder_config(mix_stream(stream, ROLE_RANGE), cfg.oversampling);
    let rf = dynamical_rangefinder(n0, field, t0, h, &rf_cfg)?;
    rsvd_finish(n0, field, t0, h, cfg, &rf.basis, rf.stats, None)
}

fn adrsvd_with_stream(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    stream: u64,
) -> Result<(LowRankFactor, StepRecord)> {
    let ad_cfg = cfg.adaptive_config(mix_stream(stream, ROLE_RANGE));
    let rf = adaptive_rangefinder(n0, field, t0, h, &ad_cfg)?;
    let estimate = rf.estimates.last().copied();
    rsvd_finish(n0, field, t0, h, cfg, &rf.basis, rf.stats, estimate)
}

/// Core of the generalized Nystrom step once the two augmented bases are in
/// hand: three reduced solves, truncated decomposition of the coupling core,
/// and the `N1 = (B V_r) S_r^{-1} (C U_r)^T` assembly through QR factors.
#[allow(clippy::too_many_arguments)]
fn nystrom_finish(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    q1: &DMatrix<f64>,
    q2: &DMatrix<f64>,
    mut stats: SolveStats,
    residual_estimate: Option<f64>,
) -> Result<(LowRankFactor, StepRecord)> {
    let d0 = (q1.transpose() * n0.u()) * n0.s() * (n0.v().transpose() * q2);
    let d_rhs = |t: f64, d: &DMatrix<f64>| {
        let left = q1 * d;
        field.project(t, FactoredPair::new(&left, q2), q1, q2)
    };

    let ((b_res, c_res), d_res) = rayon::join(
        || {
            rayon::join(
                || solve_range_ode(n0, field, t0, h, q2, None, &cfg.ivp),
                || solve_corange_ode(n0, field, t0, h, q1, None, &cfg.ivp),
            )
        },
        || crate::odesolve::solve_matrix_ivp(d_rhs, &d0, t0, t0 + h, &cfg.ivp),
    );
    let (b_h, st_b) = b_res?;
    let (c_h, st_c) = c_res?;
    let (d_h, st_d) = d_res?;
    stats.absorb(&st_b);
    stats.absorb(&st_c);
    stats.absorb(&st_d);

    let factor = assemble_nystrom(&b_h, &c_h, &d_h, &cfg.truncation)?;
    let record = StepRecord {
        step_index: 0,
        t: t0,
        output_rank: factor.rank(),
        basis_sizes: vec![q1.ncols(), q2.ncols()],
        residual_estimate,
        stats,
    };
    Ok((factor, record))
}

/// Closing algebra of the generalized Nystrom step: truncate the coupling
/// core `D = U S V^T` to `U_r S_r V_r^T` and realize `N1 = B T_r(D)^+ C^T`
/// through QR factors, `U R1 = qr(B V_r)`, `V R2 = qr(C U_r)`,
/// `S = R1 S_r^{-1} R2^T`.
fn assemble_nystrom(
    b_h: &DMatrix<f64>,
    c_h: &DMatrix<f64>,
    d_h: &DMatrix<f64>,
    rule: &TruncationRule,
) -> Result<LowRankFactor> {
    let (d_u, d_sigma, d_v) = thin_svd(d_h)?;
    let keep = rule.select(&d_sigma);
    if keep == 0 {
        // Degenerate core: the state is numerically zero.
        return truncate_svd_triplet(
            DMatrix::identity(b_h.nrows(), 1),
            nalgebra::DVector::zeros(1),
            DMatrix::identity(c_h.nrows(), 1),
            rule,
        );
    }
    let sigma_max = d_sigma[0];
    let sigma_min = d_sigma[keep - 1];
    if sigma_min < 1e-14 * sigma_max {
        return Err(Error::IllConditionedCore { ratio: sigma_min / sigma_max });
    }

    let b_vr = b_h * d_v.columns(0, keep);
    let c_ur = c_h * d_u.columns(0, keep);
    let qr_b = b_vr.qr();
    let qr_c = c_ur.qr();
    let sigma_inv =
        DMatrix::from_fn(keep, keep, |i, j| if i == j { 1.0 / d_sigma[i] } else { 0.0 });
    let s = qr_b.r() * sigma_inv * qr_c.r().transpose();
    Ok(LowRankFactor::new_unchecked(qr_b.q(), s, qr_c.q()))
}

fn dgn_with_stream(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    stream: u64,
) -> Result<(LowRankFactor, StepRecord)> {
    let rf_range = cfg.rangefinder_config(mix_stream(stream, ROLE_RANGE), cfg.oversampling);
    let rf_corange = cfg.rangefinder_config(
        mix_stream(stream, ROLE_CORANGE),
        cfg.oversampling + cfg.extra_oversampling,
    );
    let (range_out, corange_out) = rayon::join(
        || dynamical_rangefinder(n0, field, t0, h, &rf_range),
        || dynamical_corangefinder(n0, field, t0, h, &rf_corange),
    );
    let range_out = range_out?;
    let corange_out = corange_out?;
    let mut stats = range_out.stats;
    stats.absorb(&corange_out.stats);

    let q1 = augment_basis(n0.u(), &range_out.basis)?;
    let q2 = augment_basis(n0.v(), &corange_out.basis)?;
    nystrom_finish(n0, field, t0, h, cfg, &q1, &q2, stats, None)
}

fn adgn_with_stream(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &StepperConfig,
    stream: u64,
) -> Result<(LowRankFactor, StepRecord)> {
    let ad_range = cfg.adaptive_config(mix_stream(stream, ROLE_RANGE));
    let ad_corange = cfg.adaptive_config(mix_stream(stream, ROLE_CORANGE));
    let (range_out, corange_out) = rayon::join(
        || adaptive_rangefinder(n0, field, t0, h, &ad_range),
        || adaptive_corangefinder(n0, field, t0, h, &ad_corange),
    );
    let range_out = range_out?;
    let corange_out = corange_out?;
    let mut stats = range_out.stats;
    stats.absorb(&corange_out.stats);
    let estimate = match (range_out.estimates.last(), corange_out.estimates.last()) {
        (Some(a), Some(b)) => Some(a.max(*b)),
        (a, b) => a.or(b).copied(),
    };

    let q1 = augment_basis(n0.u(), &range_out.basis)?;
    let q2 = augment_basis(n0.v(), &corange_out.basis)?;
    nystrom_finish(n0, field, t0, h, cfg, &q1, &q2, stats, estimate)
}
