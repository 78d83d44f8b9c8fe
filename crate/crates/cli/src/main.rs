//! `lowsplit`: benchmark CLI for the low-rank splitting integrators.
//!
//! Subcommands:
//! - `convergence`: temporal convergence sweeps against a dense reference.
//! - `simulate`: long-time phase-field runs with snapshot and rank-trace output.
//! - `best-rank`: method error vs. best rank-r error along a trajectory.
//!
//! Every flag can also be supplied through `--config <file>` as `key = value`
//! lines (`#` starts a comment); explicit flags override file values.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lowsplit_core::harness::{
    best_rank_curve, simulate, temporal_sweep, write_best_rank_csv, write_convergence_csv,
    SimulateConfig, SweepParams,
};
use lowsplit_core::problems::{
    allen_cahn_cubic, flory_huggins, riccati_penzl, InterfaceKind, FH_CLAMP,
};
use lowsplit_core::{Scheme, SemilinearProblem, StepperKind};

use config::ConfigMap;

#[derive(Parser)]
#[command(
    name = "lowsplit",
    version,
    about = "Low-rank splitting integrators for stiff matrix ODEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal convergence study: relative errors and observed orders.
    Convergence(ConvergenceArgs),
    /// Long-time simulation writing grid snapshots and the rank trace.
    Simulate(SimulateArgs),
    /// Method error vs. best rank-r truncation error over time.
    BestRank(BestRankArgs),
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Problem id: ac-cubic | dre-penzl
    #[arg(long)]
    problem: Option<String>,
    /// Splitting scheme: lie | strang
    #[arg(long)]
    scheme: Option<String>,
    /// Stepper kind: drsvd | dgn | adrsvd | adgn
    #[arg(long)]
    stepper: Option<String>,
    /// Comma-separated rank list, e.g. 12,14,16,18
    #[arg(long)]
    ranks: Option<String>,
    /// Comma-separated step counts, e.g. 16,32,64,128,256
    #[arg(long)]
    steps: Option<String>,
    /// Grid points per dimension (ac-cubic: N, default 256; dre-penzl:
    /// interior points per dimension, default 20 giving d = 400)
    #[arg(long)]
    grid: Option<usize>,
    /// Final time (defaults: ac-cubic 1.0, dre-penzl 0.1)
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Rangefinder oversampling p
    #[arg(long)]
    oversample: Option<usize>,
    /// Extra co-range oversampling l (generalized Nystrom)
    #[arg(long = "extra-oversample")]
    extra_oversample: Option<usize>,
    /// Power iterations q of the fixed-rank finders
    #[arg(long = "power-iters")]
    power_iters: Option<usize>,
    /// Inner-solver relative tolerance; adaptive steppers reuse it as the
    /// truncation rtol and the rangefinder tolerance
    #[arg(long)]
    rtol: Option<f64>,
    /// Inner-solver absolute tolerance; adaptive truncation atol
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (header: method,scheme,rank,M,relerr,rate)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the full-size grid (ac-cubic N = 1024); the dense reference at
    /// this scale takes hours
    #[arg(long = "paper-scale", default_value_t = false)]
    paper_scale: bool,
    /// Key-value file mirroring these flags; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Problem id: flory-huggins | ac-cubic | dre-penzl
    #[arg(long)]
    problem: Option<String>,
    /// Initial interface for flory-huggins: star | butterfly
    #[arg(long)]
    ic: Option<String>,
    /// Grid points per dimension (default 128)
    #[arg(long)]
    grid: Option<usize>,
    /// Time step (default 0.01)
    #[arg(long)]
    dt: Option<f64>,
    /// Final time (defaults to the problem's, e.g. star 100, butterfly 10)
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Comma-separated snapshot times, e.g. 0,10,50,100
    #[arg(long)]
    snapshots: Option<String>,
    /// Splitting scheme: lie | strang (default strang)
    #[arg(long)]
    scheme: Option<String>,
    /// Stepper kind (default adrsvd)
    #[arg(long)]
    stepper: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for snapshots and rank_trace.csv
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Key-value file mirroring these flags; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BestRankArgs {
    /// Problem id: ac-cubic | dre-penzl
    #[arg(long)]
    problem: Option<String>,
    /// Target rank r (single value)
    #[arg(long)]
    ranks: Option<usize>,
    /// Number of time steps
    #[arg(long)]
    steps: Option<usize>,
    /// Splitting scheme (default strang)
    #[arg(long)]
    scheme: Option<String>,
    /// Stepper kind (default drsvd)
    #[arg(long)]
    stepper: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// Number of curve sample times (default 33, snapped to the step grid)
    #[arg(long = "curve-points")]
    curve_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (header: t,relerr_method,relerr_bestrank)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value file mirroring these flags; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Convergence(args) => run_convergence(args),
        Command::Simulate(args) => run_simulate(args),
        Command::BestRank(args) => run_best_rank(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "lie" => Ok(Scheme::Lie),
        "strang" => Ok(Scheme::Strang),
        other => Err(format!("unknown scheme '{other}' (expected lie|strang)")),
    }
}

fn parse_stepper(s: &str) -> Result<StepperKind, String> {
    match s {
        "drsvd" => Ok(StepperKind::Drsvd),
        "dgn" => Ok(StepperKind::Dgn),
        "adrsvd" => Ok(StepperKind::Adrsvd),
        "adgn" => Ok(StepperKind::Adgn),
        other => Err(format!("unknown stepper '{other}' (expected drsvd|dgn|adrsvd|adgn)")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|tok| tok.trim().parse::<T>().map_err(|_| format!("bad {what} entry '{tok}'")))
        .collect()
}

fn build_problem(
    problem: &str,
    grid: Option<usize>,
    t_final: Option<f64>,
    ic: Option<&str>,
    paper_scale: bool,
) -> Result<SemilinearProblem, String> {
    let mut prob = match problem {
        "ac-cubic" => {
            let n = grid.unwrap_or(if paper_scale { 1024 } else { 256 });
            allen_cahn_cubic(n)
        }
        "dre-penzl" => {
            let nt = grid.unwrap_or(20);
            riccati_penzl(nt)
        }
        "flory-huggins" => {
            let n = grid.unwrap_or(128);
            let kind = match ic.unwrap_or("star") {
                "star" => InterfaceKind::Star,
                "butterfly" => InterfaceKind::Butterfly,
                other => return Err(format!("unknown ic '{other}' (expected star|butterfly)")),
            };
            flory_huggins(n, kind)
        }
        other => {
            return Err(format!(
                "unknown problem '{other}' (expected ac-cubic|dre-penzl|flory-huggins)"
            ))
        }
    };
    if let Some(t) = t_final {
        if t <= prob.t0 {
            return Err(format!("t-final {t} must exceed t0 {}", prob.t0));
        }
        prob.t_final = t;
    }
    Ok(prob)
}

fn run_convergence(args: ConvergenceArgs) -> Result<(), String> {
    let file = ConfigMap::load(args.config.as_deref()).map_err(|e| e.to_string())?;
    let problem =
        args.problem.or_else(|| file.get("problem")).unwrap_or_else(|| "ac-cubic".into());
    let scheme =
        parse_scheme(&args.scheme.or_else(|| file.get("scheme")).unwrap_or_else(|| "lie".into()))?;
    let stepper = parse_stepper(
        &args.stepper.or_else(|| file.get("stepper")).unwrap_or_else(|| "drsvd".into()),
    )?;
    let ranks: Vec<usize> = parse_list(
        &args.ranks.or_else(|| file.get("ranks")).unwrap_or_else(|| "12,14,16,18".into()),
        "rank",
    )?;
    let steps: Vec<usize> = parse_list(
        &args.steps.or_else(|| file.get("steps")).unwrap_or_else(|| "16,32,64,128,256".into()),
        "steps",
    )?;
    let paper_scale = args.paper_scale || file.get_bool("paper-scale").unwrap_or(false);
    let grid = args.grid.or_else(|| file.get_parsed("grid"));
    let t_final = args.t_final.or_else(|| file.get_parsed("t-final"));
    let out = args
        .out
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("report.csv"));

    let mut params =
        SweepParams::with_seed(args.seed.or_else(|| file.get_parsed("seed")).unwrap_or(42));
    params.oversampling = args.oversample.or_else(|| file.get_parsed("oversample")).unwrap_or(5);
    params.extra_oversampling =
        args.extra_oversample.or_else(|| file.get_parsed("extra-oversample")).unwrap_or(5);
    params.power_iters = args.power_iters.or_else(|| file.get_parsed("power-iters")).unwrap_or(1);
    let rtol = args.rtol.or_else(|| file.get_parsed("rtol")).unwrap_or(1e-8);
    let atol = args.atol.or_else(|| file.get_parsed("atol")).unwrap_or(1e-12);
    params.inner = lowsplit_core::IvpConfig::with_tolerances(rtol, atol);
    params.truncation_rtol = rtol;
    params.truncation_atol = atol;
    params.rangefinder_tol = rtol;

    let prob = build_problem(&problem, grid, t_final, None, paper_scale)?;
    eprintln!(
        "convergence: problem={} scheme={} stepper={} ranks={ranks:?} steps={steps:?}",
        prob.name,
        scheme.label(),
        stepper.label()
    );
    let reports =
        temporal_sweep(&prob, scheme, stepper, &ranks, &steps, &params).map_err(|e| e.to_string())?;
    for report in &reports {
        let last = report.rows.last().unwrap();
        if report.rows.len() >= 2 {
            eprintln!(
                "  rank {}: relerr@M={} is {:.4e}, fitted rate {:.4}",
                report.rank_label,
                last.steps,
                last.relerr,
                report.fitted_rate(report.rows.len().min(4))
            );
        } else {
            eprintln!("  rank {}: relerr@M={} is {:.4e}", report.rank_label, last.steps, last.relerr);
        }
    }
    write_convergence_csv(&out, &reports).map_err(|e| e.to_string())?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), String> {
    let file = ConfigMap::load(args.config.as_deref()).map_err(|e| e.to_string())?;
    let problem =
        args.problem.or_else(|| file.get("problem")).unwrap_or_else(|| "flory-huggins".into());
    let ic = args.ic.or_else(|| file.get("ic"));
    let grid = args.grid.or_else(|| file.get_parsed("grid"));
    let dt = args.dt.or_else(|| file.get_parsed("dt")).unwrap_or(0.01);
    let t_final = args.t_final.or_else(|| file.get_parsed("t-final"));
    let snapshots: Vec<f64> = parse_list(
        &args.snapshots.or_else(|| file.get("snapshots")).unwrap_or_else(|| "0".into()),
        "snapshot time",
    )?;
    let scheme = parse_scheme(
        &args.scheme.or_else(|| file.get("scheme")).unwrap_or_else(|| "strang".into()),
    )?;
    let stepper = parse_stepper(
        &args.stepper.or_else(|| file.get("stepper")).unwrap_or_else(|| "adrsvd".into()),
    )?;
    let seed = args.seed.or_else(|| file.get_parsed("seed")).unwrap_or(42);
    let out_dir = args
        .out_dir
        .or_else(|| file.get("out-dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("snaps"));

    let prob = build_problem(&problem, grid, t_final, ic.as_deref(), false)?;
    let mut cfg = SimulateConfig::new(scheme, stepper, dt, snapshots);
    cfg.params.seed = seed;
    if problem == "flory-huggins" {
        cfg.snapshot_clamp = Some((FH_CLAMP, 1.0 - FH_CLAMP));
    }
    eprintln!(
        "simulate: problem={} scheme={} stepper={} dt={dt} T={}",
        prob.name,
        scheme.label(),
        stepper.label(),
        prob.t_final
    );
    let out = simulate(&prob, &cfg, &out_dir, None).map_err(|e| e.to_string())?;
    eprintln!(
        "wrote {} snapshots and rank trace (max rank {}) to {}",
        out.snapshot_paths.len(),
        out.rank_trace.max_rank(),
        out_dir.display()
    );
    Ok(())
}

fn run_best_rank(args: BestRankArgs) -> Result<(), String> {
    let file = ConfigMap::load(args.config.as_deref()).map_err(|e| e.to_string())?;
    let problem =
        args.problem.or_else(|| file.get("problem")).unwrap_or_else(|| "dre-penzl".into());
    let rank = args.ranks.or_else(|| file.get_parsed("ranks")).unwrap_or(8);
    let steps = args.steps.or_else(|| file.get_parsed("steps")).unwrap_or(512);
    let scheme = parse_scheme(
        &args.scheme.or_else(|| file.get("scheme")).unwrap_or_else(|| "strang".into()),
    )?;
    let stepper = parse_stepper(
        &args.stepper.or_else(|| file.get("stepper")).unwrap_or_else(|| "drsvd".into()),
    )?;
    let grid = args.grid.or_else(|| file.get_parsed("grid"));
    let curve_points = args.curve_points.or_else(|| file.get_parsed("curve-points")).unwrap_or(33);
    let seed = args.seed.or_else(|| file.get_parsed("seed")).unwrap_or(42);
    let out = args
        .out
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("curve.csv"));

    let prob = build_problem(&problem, grid, None, None, false)?;
    let params = SweepParams::with_seed(seed);
    // sample times snapped onto the step grid
    let span = prob.t_final - prob.t0;
    let tau = span / steps as f64;
    let every = (steps / curve_points.saturating_sub(1).max(1)).max(1);
    let mut checkpoints: Vec<f64> =
        (0..=steps).step_by(every).map(|k| prob.t0 + k as f64 * tau).collect();
    if *checkpoints.last().unwrap() < prob.t_final {
        checkpoints.push(prob.t_final);
    }
    eprintln!(
        "best-rank: problem={} scheme={} stepper={} rank={rank} M={steps}",
        prob.name,
        scheme.label(),
        stepper.label()
    );
    let curve = best_rank_curve(&prob, scheme, stepper, rank, steps, &checkpoints, &params)
        .map_err(|e| e.to_string())?;
    write_best_rank_csv(&out, &curve).map_err(|e| e.to_string())?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
