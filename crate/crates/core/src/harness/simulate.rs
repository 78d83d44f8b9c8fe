use std::path::{Path, PathBuf};

use super::report::{RankSample, RankTrace};
use super::sweep::{build_stepper, SweepParams};
use crate::lowrank::{truncate_dense, truncate_factor, TruncationRule};
use crate::problems::{write_grid_csv, write_grid_snapshot};
use crate::splitting::{InitialState, Scheme, SemilinearProblem, SplittingConfig};
use crate::steppers::StepperKind;
use crate::{Error, LowRankFactor, Result};

/// Per-step hook for observers (energy monitors, custom traces).
pub type StepObserver<'a> = &'a dyn Fn(usize, f64, &LowRankFactor);

/// Long-time simulation parameters. Unlike the convergence sweeps, the
/// initial data is reduced by the tolerance rule (the phase-field initial
/// surfaces have decaying spectra, so this stays low rank).
#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub scheme: Scheme,
    pub kind: StepperKind,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    pub params: SweepParams,
    /// Initial rank used only if the tolerance reduction is degenerate.
    pub fallback_rank: usize,
    /// Bounds applied to snapshot values on export. Low-rank reconstructions
    /// of clamped fields can dip microscopically outside the admissible band;
    /// the exported concentration is the clamped reconstruction.
    pub snapshot_clamp: Option<(f64, f64)>,
}

impl SimulateConfig {
    pub fn new(scheme: Scheme, kind: StepperKind, dt: f64, snapshot_times: Vec<f64>) -> Self {
        // Simulation-grade tolerances: long-time runs trade the sweep-grade
        // 1e-8 for lower adaptive ranks; accuracy studies go through the
        // convergence harness instead.
        let params = SweepParams {
            truncation_rtol: 1e-6,
            rangefinder_tol: 1e-6,
            ..SweepParams::default()
        };
        Self {
            scheme,
            kind,
            dt,
            snapshot_times,
            params,
            fallback_rank: 16,
            snapshot_clamp: None,
        }
    }
}

pub struct SimulateOutput {
    pub snapshot_paths: Vec<PathBuf>,
    pub rank_trace: RankTrace,
    pub state: LowRankFactor,
}

/// Runs the problem to its final time with uniform steps `dt`, writing grid
/// snapshots at the requested times and recording the rank trace. Detects
/// non-finite states and reports divergence with the last good snapshot
/// already on disk.
pub fn simulate(
    prob: &SemilinearProblem,
    cfg: &SimulateConfig,
    out_dir: &Path,
    observer: Option<StepObserver<'_>>,
) -> Result<SimulateOutput> {
    prob.validate()?;
    let span = prob.t_final - prob.t0;
    let steps_f = span / cfg.dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f.abs() {
        return Err(Error::InvalidConfig(format!(
            "dt {} does not divide the time span {span}",
            cfg.dt
        )));
    }
    let mut snapshot_steps = Vec::with_capacity(cfg.snapshot_times.len());
    for &tc in &cfg.snapshot_times {
        let k = ((tc - prob.t0) / cfg.dt).round();
        if ((prob.t0 + k * cfg.dt) - tc).abs() > 1e-9 * span.abs() || k < 0.0 || k > steps as f64 {
            return Err(Error::InvalidConfig(format!(
                "snapshot time {tc} does not lie on the step grid"
            )));
        }
        snapshot_steps.push(k as usize);
    }
    std::fs::create_dir_all(out_dir)?;

    let stepper = build_stepper(cfg.kind, cfg.fallback_rank, &cfg.params);
    let mut split_cfg = SplittingConfig::new(cfg.scheme, steps, stepper);
    split_cfg.expm = cfg.params.expm;

    // Tolerance-based initial reduction; flat-spectrum inputs fall back to
    // the configured rank.
    let init_rule =
        TruncationRule::tolerance(cfg.params.truncation_rtol, cfg.params.truncation_atol);
    let mut state = match &prob.initial {
        InitialState::Factor(f) => truncate_factor(f, &init_rule)?,
        InitialState::Dense(x) => truncate_dense(x, &init_rule)?,
    };
    if state.rank() > state.nrows().min(state.ncols()) / 2 {
        state = match &prob.initial {
            InitialState::Factor(f) => {
                truncate_factor(f, &TruncationRule::fixed(cfg.fallback_rank))?
            }
            InitialState::Dense(x) => {
                truncate_dense(x, &TruncationRule::fixed(cfg.fallback_rank))?
            }
        };
    }

    let mut rank_trace = RankTrace::default();
    rank_trace.rows.push(RankSample { step: 0, t: prob.t0, rank: state.rank() });
    let mut snapshot_paths = Vec::new();
    let write_snapshot = |state: &LowRankFactor, t: f64, label: &str| -> Result<PathBuf> {
        let mut dense = state.dense();
        if let Some((lo, hi)) = cfg.snapshot_clamp {
            for v in dense.iter_mut() {
                *v = v.clamp(lo, hi);
            }
        }
        if !dense.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("snapshot contains non-finite values".into()));
        }
        let path = out_dir.join(format!("{label}.grid"));
        let grid = prob.grid.as_ref().ok_or_else(|| {
            Error::InvalidConfig("simulate needs a grid descriptor for snapshot export".into())
        })?;
        write_grid_snapshot(&path, &dense, grid, t)?;
        if grid.n <= 64 {
            write_grid_csv(&out_dir.join(format!("{label}.csv")), &dense)?;
        }
        Ok(path)
    };

    for (&sstep, &stime) in snapshot_steps.iter().zip(&cfg.snapshot_times) {
        if sstep == 0 {
            snapshot_paths.push(write_snapshot(&state, stime, &format!("snapshot_t{stime}"))?);
        }
    }
    if let Some(obs) = observer {
        obs(0, prob.t0, &state);
    }

    let mut last_good = state.clone();
    for step in 0..steps {
        let t = prob.t0 + step as f64 * cfg.dt;
        let result = match cfg.scheme {
            Scheme::Lie => crate::splitting::lie_step(prob, &state, t, cfg.dt, &split_cfg, step),
            Scheme::Strang => {
                crate::splitting::strang_step(prob, &state, t, cfg.dt, &split_cfg, step)
            }
        };
        let (next, record) = result?;
        if !next.s().iter().all(|v| v.is_finite()) {
            let _ = write_snapshot(&last_good, t, "last_good");
            return Err(Error::SimulationDiverged { step, t });
        }
        state = next;
        last_good = state.clone();
        let t_next = prob.t0 + (step + 1) as f64 * cfg.dt;
        rank_trace.rows.push(RankSample {
            step: step + 1,
            t: t_next,
            rank: record.output_rank,
        });
        if let Some(obs) = observer {
            obs(step + 1, t_next, &state);
        }
        for (&sstep, &stime) in snapshot_steps.iter().zip(&cfg.snapshot_times) {
            if sstep == step + 1 {
                snapshot_paths
                    .push(write_snapshot(&state, stime, &format!("snapshot_t{stime}"))?);
            }
        }
    }

    super::report::write_rank_trace_csv(&out_dir.join("rank_trace.csv"), &rank_trace)?;
    Ok(SimulateOutput { snapshot_paths, rank_trace, state })
}
