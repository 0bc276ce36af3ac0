//! Result directory layout:
//!
//! | file                    | content                                        |
//! |-------------------------|------------------------------------------------|
//! | `config.toml`           | resolved run configuration                     |
//! | `result.json`           | summary, certificates, generator provenance    |
//! | `F1.csv`, `F2.csv`      | antichains, header `x1..xn`                    |
//! | `trajectories/cert_NNNN.csv` | certificate trajectories, `t,x..,u..,d..` |
//! | `plot.svg`              | two-dimensional models only                    |

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dynamics::{SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::feasibility::{certificate_trajectory, FeasibilityCertificate};
use crate::order::{Antichain, LowerSet, UpperSet, Vector};
use crate::plot;
use crate::solver::{GeneratorRecord, SolverResult, SolverStats, Termination};

pub const RESULT_FILE: &str = "result.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const F1_FILE: &str = "F1.csv";
pub const F2_FILE: &str = "F2.csv";
pub const PLOT_FILE: &str = "plot.svg";
pub const TRAJECTORY_DIR: &str = "trajectories";

/// Serialized form of a [`SolverResult`] without the antichains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model: String,
    pub epsilon: f64,
    pub resolution: f64,
    /// Absent when infinite (one frontier missing).
    pub gap: Option<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub lambda: Option<f64>,
    pub f1_generators: usize,
    pub f2_generators: usize,
    pub empty_invariant: bool,
    pub unknown_points: Vec<Vector>,
    pub stats: SolverStats,
    pub certificates: Vec<FeasibilityCertificate>,
    pub generators: Vec<GeneratorRecord>,
}

impl ResultRecord {
    pub fn from_result(model: &SystemModel, result: &SolverResult) -> ResultRecord {
        ResultRecord {
            model: model.name().to_string(),
            epsilon: result.epsilon,
            resolution: result.resolution,
            gap: result.gap.is_finite().then_some(result.gap),
            converged: result.is_converged(),
            termination: result.termination,
            lambda: result.lambda,
            f1_generators: result.f1.generators().len(),
            f2_generators: result.f2.generators().len(),
            empty_invariant: result.f1.is_empty(),
            unknown_points: result.unknown_points.clone(),
            stats: result.stats.clone(),
            certificates: result.certificates.clone(),
            generators: result.generators.clone(),
        }
    }
}

/// Writes every artifact enabled in `config.output` to `dir`.
pub fn write_result(dir: &Path, config: &RunConfig, model: &SystemModel, constraint: &LowerSet, result: &SolverResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let n = model.state_dim();
    fs::write(dir.join(CONFIG_FILE), config.to_toml()?)?;
    let record = ResultRecord::from_result(model, result);
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join(RESULT_FILE))?), &record)?;
    if config.output.csv {
        result.f1.generators().write_csv(n, BufWriter::new(File::create(dir.join(F1_FILE))?))?;
        result.f2.generators().write_csv(n, BufWriter::new(File::create(dir.join(F2_FILE))?))?;
    }
    let need_trajectories = config.output.trajectories || config.output.svg;
    let trajectories: Vec<Trajectory> = if need_trajectories {
        result
            .certificates
            .iter()
            .map(|c| certificate_trajectory(model, c, c.h))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    if config.output.trajectories {
        let tdir = dir.join(TRAJECTORY_DIR);
        fs::create_dir_all(&tdir)?;
        for (i, traj) in trajectories.iter().enumerate() {
            traj.write_csv(BufWriter::new(File::create(tdir.join(format!("cert_{i:04}.csv")))?))?;
        }
    }
    if config.output.svg && n == 2 {
        fs::write(dir.join(PLOT_FILE), plot::render(constraint, result, &trajectories)?)?;
    }
    Ok(())
}

/// Reloads a result directory. F1 and F2 come from the CSV files when
/// present, otherwise from the generator records.
pub fn load_result(dir: &Path) -> Result<(RunConfig, SolverResult)> {
    let config_path = dir.join(CONFIG_FILE);
    let result_path = dir.join(RESULT_FILE);
    for p in [&config_path, &result_path] {
        if !p.exists() {
            return Err(Error::Config(format!("missing artifact {}", p.display())));
        }
    }
    let config = RunConfig::load(&config_path)?;
    let (_, constraint) = config.build()?;
    let record: ResultRecord = serde_json::from_reader(BufReader::new(File::open(&result_path)?))?;
    let f1 = match read_antichain(&dir.join(F1_FILE))? {
        Some(a) => a,
        None => Antichain::from_antichain_points(record.generators.iter().map(|g| g.point.clone()).collect())?,
    };
    let f2 = read_antichain(&dir.join(F2_FILE))?.unwrap_or_default();
    let ambient = constraint.ambient().clone();
    let result = SolverResult {
        f1: LowerSet::new(f1, ambient.clone()),
        f2: UpperSet::new(f2, ambient),
        unknown_points: record.unknown_points,
        gap: record.gap.unwrap_or(f64::INFINITY),
        epsilon: record.epsilon,
        resolution: record.resolution,
        lambda: record.lambda,
        certificates: record.certificates,
        generators: record.generators,
        termination: record.termination,
        stats: record.stats,
    };
    Ok((config, result))
}

fn read_antichain(path: &Path) -> Result<Option<Antichain>> {
    if !path.exists() {
        return Ok(None);
    }
    let chain = Antichain::read_csv(BufReader::new(File::open(path)?)).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(Some(chain))
}
