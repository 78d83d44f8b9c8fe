use std::path::Path;

use crate::splitting::Scheme;
use crate::steppers::StepperKind;
use crate::Result;

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub relerr: f64,
    /// `log2(relerr_prev / relerr_this) / log2(M_this / M_prev)`; `None` on
    /// the first row.
    pub rate: Option<f64>,
}

/// Per-(stepper, rank) convergence study; rows sorted by step count.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: Scheme,
    pub kind: StepperKind,
    /// Fixed rank (`"16"`) or truncation tolerance (`"1e-8"`) of adaptive runs.
    pub rank_label: String,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    /// Wall-clock seconds per row; diagnostics only, never serialized.
    pub wall_times: Vec<f64>,
}

impl ConvergenceReport {
    /// Least-squares slope of `log2(relerr)` against `log2(M)` over the
    /// `points` finest rows, negated so a first-order method reports ~1.
    pub fn fitted_rate(&self, points: usize) -> f64 {
        let rows = &self.rows[self.rows.len().saturating_sub(points)..];
        assert!(rows.len() >= 2, "need at least two rows for a slope");
        let n = rows.len() as f64;
        let xs: Vec<f64> = rows.iter().map(|r| (r.steps as f64).log2()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.relerr.max(1e-300).log2()).collect();
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let den: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        -num / den
    }
}

/// Rank-over-time observable of adaptive runs.
#[derive(Debug, Clone, Copy)]
pub struct RankSample {
    pub step: usize,
    pub t: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RankTrace {
    pub rows: Vec<RankSample>,
}

impl RankTrace {
    pub fn max_rank(&self) -> usize {
        self.rows.iter().map(|r| r.rank).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BestRankRow {
    pub t: f64,
    pub relerr_method: f64,
    pub relerr_bestrank: f64,
}

#[derive(Debug, Clone)]
pub struct BestRankCurve {
    pub rank: usize,
    pub rows: Vec<BestRankRow>,
}

/// CSV with header `method,scheme,rank,M,relerr,rate`; identical invocations
/// produce byte-identical output.
pub fn convergence_csv_string(reports: &[ConvergenceReport]) -> String {
    let mut out = String::from("method,scheme,rank,M,relerr,rate\n");
    for report in reports {
        for row in &report.rows {
            let rate = match row.rate {
                Some(r) => format!("{r:.4}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{:.6e},{}\n",
                report.kind.label(),
                report.scheme.label(),
                report.rank_label,
                row.steps,
                row.relerr,
                rate
            ));
        }
    }
    out
}

pub fn write_convergence_csv(path: &Path, reports: &[ConvergenceReport]) -> Result<()> {
    std::fs::write(path, convergence_csv_string(reports))?;
    Ok(())
}

/// CSV with header `step,t,rank`.
pub fn rank_trace_csv_string(trace: &RankTrace) -> String {
    let mut out = String::from("step,t,rank\n");
    for row in &trace.rows {
        out.push_str(&format!("{},{},{}\n", row.step, row.t, row.rank));
    }
    out
}

pub fn write_rank_trace_csv(path: &Path, trace: &RankTrace) -> Result<()> {
    std::fs::write(path, rank_trace_csv_string(trace))?;
    Ok(())
}

/// CSV with header `t,relerr_method,relerr_bestrank`.
pub fn best_rank_csv_string(curve: &BestRankCurve) -> String {
    let mut out = String::from("t,relerr_method,relerr_bestrank\n");
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{:.6e},{:.6e}\n",
            row.t, row.relerr_method, row.relerr_bestrank
        ));
    }
    out
}

pub fn write_best_rank_csv(path: &Path, curve: &BestRankCurve) -> Result<()> {
    std::fs::write(path, best_rank_csv_string(curve))?;
    Ok(())
}
