//! Dynamical randomized rangefinder and co-rangefinder, fixed-size and
//! adaptive: orthonormal bases for the range/co-range of the unknown
//! end-of-step solution of the nonstiff subproblem, obtained by integrating
//! sketched ODEs.

use nalgebra::DMatrix;

use crate::lowrank::{gaussian_sketch, mix_stream, orth, GramSolve};
use crate::odesolve::{solve_matrix_ivp, FactoredPair, IvpConfig, NonstiffField, SolveStats};
use crate::{Error, LowRankFactor, Result};

/// Stream tag for the one automatic resample after a singular sketch.
const RETRY_TAG: u64 = 0x5eed;

/// Fixed-size rangefinder parameters: sketch width `rank + oversampling`
/// refined by `power_iters` alternating range/co-range rounds.
#[derive(Debug, Clone)]
pub struct RangefinderConfig {
    pub rank: usize,
    pub oversampling: usize,
    pub power_iters: usize,
    pub ivp: IvpConfig,
    pub seed: u64,
    pub stream: u64,
}

impl RangefinderConfig {
    pub fn new(rank: usize, oversampling: usize, power_iters: usize, seed: u64) -> Self {
        assert!(rank >= 1);
        Self { rank, oversampling, power_iters, ivp: IvpConfig::default(), seed, stream: 0 }
    }

    pub fn sketch_width(&self) -> usize {
        self.rank + self.oversampling
    }
}

/// Adaptive rangefinder parameters. The probe block size is
/// `K = -floor(log10(beta))` and the stopping threshold
/// `eps = sqrt(pi/2) * tolerance / 10`, so the returned basis satisfies
/// `|N - Q Q^T N|_2 <= tolerance` with probability at least `1 - beta`.
#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    /// Spectral-norm tolerance on the uncaptured remainder.
    pub tolerance: f64,
    /// Max failure probability `beta` in `(0, 1)`.
    pub failure_prob: f64,
    /// Alternating refinement rounds applied after convergence.
    pub power_iters: usize,
    pub max_basis: usize,
    pub ivp: IvpConfig,
    pub seed: u64,
    pub stream: u64,
}

impl AdaptiveConfig {
    pub fn new(tolerance: f64, failure_prob: f64, seed: u64) -> Self {
        assert!(tolerance > 0.0);
        assert!(failure_prob > 0.0 && failure_prob < 1.0);
        Self {
            tolerance,
            failure_prob,
            power_iters: 0,
            max_basis: usize::MAX,
            ivp: IvpConfig::default(),
            seed,
            stream: 0,
        }
    }

    /// `K = -floor(log(beta) / log(10))`, at least 1.
    pub fn block_size(&self) -> usize {
        let k = -(self.failure_prob.log10().floor());
        (k as usize).max(1)
    }

    /// `eps = sqrt(pi/2) * tol / 10`.
    pub fn threshold(&self) -> f64 {
        (std::f64::consts::PI / 2.0).sqrt() * self.tolerance / 10.0
    }
}

/// Basis plus solver diagnostics.
pub struct RangefinderOutput {
    pub basis: DMatrix<f64>,
    pub stats: SolveStats,
}

/// Adaptive outcome; `estimates` holds the residual estimator value of each
/// probe iteration (non-increasing on well-behaved problems).
pub struct AdaptiveOutput {
    pub basis: DMatrix<f64>,
    pub estimates: Vec<f64>,
    pub stats: SolveStats,
}

/// Integrates the sketched range equation
/// `dB/dt = F(t, B (S^T S)^{-1} S^T) S`, `B(t0) = N0 S`,
/// where `S` is the sketch. Pass `gram: None` when `S` has orthonormal
/// columns (the Gram factor is the identity). The Gram solve is applied once
/// up front; the right factor stays fixed over the whole solve.
pub(crate) fn solve_range_ode(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    sketch: &DMatrix<f64>,
    gram: Option<&GramSolve>,
    ivp: &IvpConfig,
) -> Result<(DMatrix<f64>, SolveStats)> {
    let right = match gram {
        Some(g) => g.solve(&sketch.transpose()).transpose(),
        None => sketch.clone(),
    };
    let b0 = n0.u() * (n0.s() * (n0.v().transpose() * sketch));
    let rhs = |t: f64, b: &DMatrix<f64>| field.times(t, FactoredPair::new(b, &right), sketch);
    solve_matrix_ivp(rhs, &b0, t0, t0 + h, ivp)
}

/// Mirror image: `dC/dt = F(t, S (S^T S)^{-1} C^T)^T S`, `C(t0) = N0^T S`.
pub(crate) fn solve_corange_ode(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    sketch: &DMatrix<f64>,
    gram: Option<&GramSolve>,
    ivp: &IvpConfig,
) -> Result<(DMatrix<f64>, SolveStats)> {
    let left = match gram {
        Some(g) => g.solve(&sketch.transpose()).transpose(),
        None => sketch.clone(),
    };
    let c0 = n0.v() * (n0.s().transpose() * (n0.u().transpose() * sketch));
    let rhs =
        |t: f64, c: &DMatrix<f64>| field.transpose_times(t, FactoredPair::new(&left, c), sketch);
    solve_matrix_ivp(rhs, &c0, t0, t0 + h, ivp)
}

/// Orthonormal basis approximating the range of `N(t0 + h)` where
/// `dN/dt = F(t, N)`, `N(t0) = N0`.
///
/// Draws an `n x (r + p)` Gaussian sketch, integrates the range equation,
/// orthonormalizes, and refines by `power_iters` alternating range/co-range
/// rounds. A singular sketch triggers one automatic resample on a derived
/// stream before the error propagates.
pub fn dynamical_rangefinder(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &RangefinderConfig,
) -> Result<RangefinderOutput> {
    finder(n0, field, t0, h, cfg, Side::Range)
}

/// Transpose counterpart capturing the row space of `N(t0 + h)`.
pub fn dynamical_corangefinder(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &RangefinderConfig,
) -> Result<RangefinderOutput> {
    finder(n0, field, t0, h, cfg, Side::Corange)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Range,
    Corange,
}

/// One alternating range/co-range refinement round; enters with a basis on
/// `side` and returns an improved basis on the same side.
#[allow(clippy::too_many_arguments)]
fn power_round(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    basis: &DMatrix<f64>,
    ivp: &IvpConfig,
    side: Side,
    stats: &mut SolveStats,
) -> Result<DMatrix<f64>> {
    match side {
        Side::Range => {
            let (c, st) = solve_corange_ode(n0, field, t0, h, basis, None, ivp)?;
            stats.absorb(&st);
            let p = orth(&c)?;
            let (b, st) = solve_range_ode(n0, field, t0, h, &p, None, ivp)?;
            stats.absorb(&st);
            orth(&b)
        }
        Side::Corange => {
            let (b, st) = solve_range_ode(n0, field, t0, h, basis, None, ivp)?;
            stats.absorb(&st);
            let q = orth(&b)?;
            let (c, st) = solve_corange_ode(n0, field, t0, h, &q, None, ivp)?;
            stats.absorb(&st);
            orth(&c)
        }
    }
}

fn finder(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &RangefinderConfig,
    side: Side,
) -> Result<RangefinderOutput> {
    if h <= 0.0 {
        return Err(Error::InvalidInput("rangefinder needs h > 0".into()));
    }
    let s = cfg.sketch_width();
    if s > n0.nrows().min(n0.ncols()) {
        return Err(Error::InvalidConfig(format!(
            "sketch width {s} exceeds min dimension {}",
            n0.nrows().min(n0.ncols())
        )));
    }
    let sketch_len = match side {
        Side::Range => n0.ncols(),
        Side::Corange => n0.nrows(),
    };

    let mut stats = SolveStats::default();
    let mut stream = cfg.stream;
    let block = loop {
        let omega = gaussian_sketch(sketch_len, s, cfg.seed, stream);
        match GramSolve::new(omega.omega()) {
            Ok(gram) => {
                let (block, st) = match side {
                    Side::Range => {
                        solve_range_ode(n0, field, t0, h, omega.omega(), Some(&gram), &cfg.ivp)?
                    }
                    Side::Corange => {
                        solve_corange_ode(n0, field, t0, h, omega.omega(), Some(&gram), &cfg.ivp)?
                    }
                };
                stats.absorb(&st);
                break block;
            }
            Err(e @ Error::SingularSketch { .. }) => {
                if stream != cfg.stream {
                    return Err(e);
                }
                stream = mix_stream(stream, RETRY_TAG);
            }
            Err(e) => return Err(e),
        }
    };
    let mut basis = orth(&block)?;
    for _ in 0..cfg.power_iters {
        basis = power_round(n0, field, t0, h, &basis, &cfg.ivp, side, &mut stats)?;
    }
    Ok(RangefinderOutput { basis, stats })
}

/// Adaptive variant: start from a `K`-column sketched solve, then repeatedly
/// draw a fresh `K`-column probe, measure its residual against the current
/// basis, and append the orthonormalized residual while the estimator
/// `E = max_i |residual[:, i]|` exceeds the threshold. The returned basis is
/// the one certified by the final probe.
pub fn adaptive_rangefinder(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutput> {
    adaptive(n0, field, t0, h, cfg, Side::Range)
}

/// Co-range counterpart of [`adaptive_rangefinder`].
pub fn adaptive_corangefinder(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutput> {
    adaptive(n0, field, t0, h, cfg, Side::Corange)
}

fn adaptive(
    n0: &LowRankFactor,
    field: &dyn NonstiffField,
    t0: f64,
    h: f64,
    cfg: &AdaptiveConfig,
    side: Side,
) -> Result<AdaptiveOutput> {
    if h <= 0.0 {
        return Err(Error::InvalidInput("rangefinder needs h > 0".into()));
    }
    let k = cfg.block_size();
    let eps = cfg.threshold();
    let sketch_len = match side {
        Side::Range => n0.ncols(),
        Side::Corange => n0.nrows(),
    };
    let own_len = match side {
        Side::Range => n0.nrows(),
        Side::Corange => n0.ncols(),
    };
    let max_basis = cfg.max_basis.min(own_len);

    let mut stats = SolveStats::default();
    let solve_block = |tag: u64, stats: &mut SolveStats| -> Result<DMatrix<f64>> {
        let mut stream = mix_stream(cfg.stream, tag);
        loop {
            let omega = gaussian_sketch(sketch_len, k, cfg.seed, stream);
            match GramSolve::new(omega.omega()) {
                Ok(gram) => {
                    let (block, st) = match side {
                        Side::Range => solve_range_ode(
                            n0,
                            field,
                            t0,
                            h,
                            omega.omega(),
                            Some(&gram),
                            &cfg.ivp,
                        )?,
                        Side::Corange => solve_corange_ode(
                            n0,
                            field,
                            t0,
                            h,
                            omega.omega(),
                            Some(&gram),
                            &cfg.ivp,
                        )?,
                    };
                    stats.absorb(&st);
                    return Ok(block);
                }
                Err(e @ Error::SingularSketch { .. }) => {
                    if stream != mix_stream(cfg.stream, tag) {
                        return Err(e);
                    }
                    stream = mix_stream(stream, RETRY_TAG);
                }
                Err(e) => return Err(e),
            }
        }
    };

    let first = solve_block(0, &mut stats)?;
    let mut basis = orth(&first)?;
    let mut estimates = Vec::new();

    let mut probe_tag = 1u64;
    loop {
        let block = solve_block(probe_tag, &mut stats)?;
        probe_tag += 1;
        let residual = &block - &basis * (basis.transpose() * &block);
        let estimate = (0..residual.ncols())
            .map(|i| residual.column(i).norm())
            .fold(0.0, f64::max);
        estimates.push(estimate);
        if estimate <= eps {
            break;
        }
        if basis.ncols() + k > max_basis {
            return Err(Error::ToleranceNotReached {
                estimator: estimate,
                threshold: eps,
                basis: basis.ncols(),
            });
        }
        let mut augmented = DMatrix::zeros(basis.nrows(), basis.ncols() + residual.ncols());
        augmented.columns_mut(0, basis.ncols()).copy_from(&basis);
        augmented.columns_mut(basis.ncols(), residual.ncols()).copy_from(&residual);
        basis = orth(&augmented)?;
    }

    for _ in 0..cfg.power_iters {
        basis = power_round(n0, field, t0, h, &basis, &cfg.ivp, side, &mut stats)?;
    }
    Ok(AdaptiveOutput { basis, estimates, stats })
}
