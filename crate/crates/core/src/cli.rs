//! Command-line front end. Exit codes: 0 success, 1 error or failed
//! verification, 2 refinement stopped with the gap above epsilon.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::dynamics::{simulate, Signal};
use crate::error::{Error, Result};
use crate::feasibility::{candidate_controls, classify_point, Classification};
use crate::monotonicity::classify_model;
use crate::order::{BoxRegion, Vector};
use crate::persist;
use crate::solver::{compute_invariant, inclusion_violations, verify_result, ContainmentViolation, SolverResult, VerifyOptions, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCONVERGED: i32 = 2;

const CONFIG_DEFAULTS: &str = "\
Configuration defaults (TOML):
  [model]   name = \"coupled_tanks\"; monotone_class and lipschitz_x optional
  [solver]  epsilon = 1.0, t_max = 200.0, h = 0.01, strategy = \"csm_min\",
            margin = 0.0, use_beta = false, max_iterations = 10000,
            grid_resolution = epsilon / 2, tau = 1e-6
  [output]  dir = \"out\", csv = true, svg = true, trajectories = true";

#[derive(Debug, Parser)]
#[command(name = "monoinv", version, about = "Robust controlled invariant sets for monotone systems", after_help = CONFIG_DEFAULTS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an invariant inner approximation and write the result directory.
    Compute {
        #[arg(long)]
        config: PathBuf,
        /// Overrides solver.epsilon (and resets grid_resolution to epsilon / 2).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Classify a single state.
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated coordinates, e.g. "29,19".
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Trajectory CSV path; `<output.dir>/classify_trajectory.csv` by default.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Replay the certificates of a result directory.
    Verify {
        #[arg(long)]
        dir: PathBuf,
        /// Random disturbance signals per generator.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Compute { config, epsilon, out, threads } => {
            cmd_compute(&config, epsilon, out, threads).map(|r| if r.is_converged() { EXIT_OK } else { EXIT_UNCONVERGED })
        }
        Command::Classify { config, point, trajectory } => cmd_classify(&config, &point, trajectory).map(|_| EXIT_OK),
        Command::Verify { dir, trials } => cmd_verify(&dir, trials).map(|r| if r.passed() { EXIT_OK } else { EXIT_ERROR }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn cmd_compute(config_path: &Path, epsilon: Option<f64>, out: Option<PathBuf>, threads: Option<usize>) -> Result<SolverResult> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(e) = epsilon {
        config.solver.epsilon = e;
        config.solver.grid_resolution = None;
    }
    if let Some(dir) = out {
        config.output.dir = dir;
    }
    let solver = config.solver_config()?;
    let (model, constraint) = config.build()?;
    let result = with_threads(threads, || compute_invariant(&model, &constraint, &solver))??;
    let dir = config.output.dir.clone();
    persist::write_result(&dir, &config, &model, &constraint, &result)?;

    println!("model        {}", model.name());
    println!("epsilon      {}", result.epsilon);
    println!("gap          {}", result.gap);
    println!("termination  {}", result.termination);
    println!("F1           {} generators{}", result.f1.generators().len(), if result.f1.is_empty() { " (empty invariant)" } else { "" });
    println!("F2           {} generators", result.f2.generators().len());
    println!("unknown      {}", result.unknown_points.len());
    println!("classified   {} points ({} simulations)", result.stats.classifications, result.stats.simulations);
    println!("wall time    {:.1} ms", result.stats.wall_time_ms);
    println!("output       {}", dir.display());
    Ok(result)
}

pub fn parse_point(text: &str) -> Result<Vector> {
    let coords = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad coordinate `{}`: {e}", s.trim()))))
        .collect::<Result<Vec<f64>>>()?;
    Vector::new(coords)
}

pub fn cmd_classify(config_path: &Path, point: &str, trajectory: Option<PathBuf>) -> Result<Classification> {
    let config = RunConfig::load(config_path)?;
    let solver = config.solver_config()?;
    let (model, constraint) = config.build()?;
    let x0 = parse_point(point)?;
    x0.check_dim(model.state_dim())?;
    if !constraint.contains_with_slack(&x0, 1e-9) {
        return Err(Error::InvalidArgument(format!("point {x0} is outside the constraint set")));
    }
    let class = classify_model(&model, constraint.ambient())?;
    let controls = candidate_controls(&model, &solver.strategy, class)?;
    let mut outcome = classify_point(&model, &constraint, &x0, &controls, &solver.classify_options())?;
    if let Classification::Feasible { certificate } = &mut outcome {
        if let Some(l) = solver.lipschitz.or(model.lipschitz_x()) {
            certificate.beta = crate::feasibility::beta_radius(certificate, l);
        }
    }

    println!("point        {x0}");
    println!("outcome      {}", outcome.label());
    let (control, horizon) = match &outcome {
        Classification::Feasible { certificate } => {
            println!("{certificate}");
            (certificate.control.clone(), certificate.horizon)
        }
        Classification::Unsafe { exit_time, prefix } => {
            println!("exit time    {exit_time}");
            println!("prefix       {} states", prefix.len());
            (controls[0].clone(), *exit_time)
        }
        Classification::Unknown { horizon_exhausted } => {
            println!("undecided after {horizon_exhausted} s");
            (controls[0].clone(), *horizon_exhausted)
        }
    };
    let path = trajectory.unwrap_or_else(|| config.output.dir.join("classify_trajectory.csv"));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let traj = simulate(&model, &x0, &control, &Signal::constant(model.d_max().clone()), horizon, solver.h)?;
    traj.write_csv(BufWriter::new(File::create(&path)?))?;
    println!("trajectory   {}", path.display());
    Ok(outcome)
}

pub fn cmd_verify(dir: &Path, trials: usize) -> Result<VerifyReport> {
    let (config, result) = persist::load_result(dir)?;
    let (model, constraint) = config.build()?;
    let opts = VerifyOptions { trials, h: config.solver.h, ..Default::default() };
    let mut report = verify_result(&model, &constraint, &result, &opts)?;

    // shrinking D can only enlarge the invariant
    let d = model.disturbances();
    if report.passed() && (0..d.dim()).any(|i| d.extent(i) > 0.0) {
        let mid = Vector::from((0..d.dim()).map(|i| d.lower()[i] + d.extent(i) / 2.0).collect::<Vec<_>>());
        let shrunk = model.clone().with_disturbances(BoxRegion::new(mid, d.upper().clone())?)?;
        let other = compute_invariant(&shrunk, &constraint, &config.solver_config()?)?;
        for p in inclusion_violations(&result.f1, &other.f1, constraint.ambient(), result.resolution, opts.tau)? {
            report.violations.push(ContainmentViolation {
                generator: p.clone(),
                time: 0.0,
                state: p,
                reason: "not in the invariant recomputed with a smaller disturbance set".into(),
            });
        }
    }

    println!("generators   {}", report.generators_checked);
    println!("simulations  {}", report.simulations);
    println!("violations   {}", report.violations.len());
    for v in report.violations.iter().take(20) {
        println!("  {v}");
    }
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report)
}
