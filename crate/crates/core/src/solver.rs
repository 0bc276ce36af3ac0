//! Lattice refinement between a certified-feasible lower set and a
//! certified-unsafe upper set, plus replay-based verification of the result.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{estimate_lipschitz, simulate, Signal, SystemModel};
use crate::error::{Error, Result};
use crate::feasibility::{
    beta_radius, candidate_controls, certificate_trajectory, classify_point, periodic_control, Classification,
    ClassifyOptions, ControlStrategy, FeasibilityCertificate,
};
use crate::monotonicity::{classify_model, MonotoneClass};
use crate::order::{CellStatus, Lattice, StatusGrid};
use crate::order::{Antichain, BoxRegion, LowerSet, UpperSet, Vector};

const VERIFY_SEED: u64 = 0x5eed_0f1a;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub t_max: f64,
    pub h: f64,
    pub strategy: ControlStrategy,
    pub margin: f64,
    pub use_beta: bool,
    pub max_iterations: usize,
    /// Lattice spacing; `epsilon / 2` when absent.
    pub grid_resolution: Option<f64>,
    /// State Lipschitz constant for the expansion radius; estimated when
    /// absent and needed.
    pub lipschitz: Option<f64>,
    /// Membership slack for consistency and replay checks.
    pub tau: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1.0,
            t_max: 200.0,
            h: 0.01,
            strategy: ControlStrategy::CsmMin,
            margin: 0.0,
            use_beta: false,
            max_iterations: 10_000,
            grid_resolution: None,
            lipschitz: None,
            tau: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn resolution(&self) -> f64 {
        self.grid_resolution.unwrap_or(self.epsilon / 2.0)
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions { t_max: self.t_max, h: self.h, margin: self.margin, decisive: self.strategy.is_decisive() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("solver.epsilon must be a positive number");
        }
        let r = self.resolution();
        if !(r > 0.0 && r <= self.epsilon) {
            return bad("solver.grid_resolution must lie in (0, epsilon]");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("solver.t_max must be a positive number");
        }
        if !(self.h > 0.0 && self.h <= self.t_max) {
            return bad("solver.h must lie in (0, t_max]");
        }
        if !(self.margin >= 0.0) {
            return bad("solver.margin must be non-negative");
        }
        if self.max_iterations == 0 {
            return bad("solver.max_iterations must be at least 1");
        }
        if !(self.tau >= 0.0) {
            return bad("solver.tau must be non-negative");
        }
        if matches!(self.lipschitz, Some(l) if !(l > 0.0)) {
            return bad("solver.lipschitz must be positive");
        }
        Ok(())
    }
}

/// Where an F1 generator came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSource {
    /// State of the certificate trajectory at `step · h`.
    Trajectory { step: usize, time: f64 },
    /// Sample of `↑x0 ∩ B_β(x0)`.
    Expansion { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub point: Vector,
    pub certificate: usize,
    pub source: GeneratorSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every point of the constraint set is feasible.
    ConstraintInvariant,
    /// The least point of the constraint set is unsafe, so nothing is.
    OriginUnsafe,
    Converged,
    /// Nothing left to select but the gap still exceeds epsilon.
    CandidatesExhausted,
    IterationLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::ConstraintInvariant => "constraint set is invariant",
            Termination::OriginUnsafe => "origin unsafe, empty invariant",
            Termination::Converged => "gap below epsilon",
            Termination::CandidatesExhausted => "no unclassified candidates left",
            Termination::IterationLimit => "iteration limit reached",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub classifications: usize,
    pub simulations: usize,
    pub iterations: usize,
    pub feasible: usize,
    pub unsafe_points: usize,
    pub unknown: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub f1: LowerSet,
    pub f2: UpperSet,
    pub unknown_points: Vec<Vector>,
    pub gap: f64,
    pub epsilon: f64,
    pub resolution: f64,
    pub lambda: Option<f64>,
    pub certificates: Vec<FeasibilityCertificate>,
    /// One record per F1 generator, in generator order.
    pub generators: Vec<GeneratorRecord>,
    pub termination: Termination,
    pub stats: SolverStats,
}

impl SolverResult {
    pub fn is_converged(&self) -> bool {
        self.gap <= self.epsilon
    }

    pub fn record_for(&self, g: &Vector) -> Option<&GeneratorRecord> {
        self.generators.iter().find(|r| &r.point == g)
    }
}

/// Generators of `Z`: the maximal states of the certificate trajectory, plus
/// the expansion samples when `beta > 0`.
pub fn z_generators(model: &SystemModel, constraint: &LowerSet, cert: &FeasibilityCertificate, beta: f64) -> Result<Vec<(Vector, GeneratorSource)>> {
    let traj = certificate_trajectory(model, cert, cert.h)?;
    let mut chain = Antichain::new();
    let mut steps: HashMap<Vec<u64>, usize> = HashMap::new();
    for (k, x) in traj.states.iter().enumerate() {
        if chain.insert_maximal(x.clone()) {
            steps.insert(key(x), k);
        }
    }
    let mut out: Vec<(Vector, GeneratorSource)> = chain
        .iter()
        .map(|g| {
            let k = steps[&key(g)];
            (g.clone(), GeneratorSource::Trajectory { step: k, time: traj.times[k] })
        })
        .collect();
    if beta > 0.0 {
        let n = cert.x0.dim();
        let r = beta / (n as f64).sqrt();
        let ambient = constraint.ambient();
        let mut extra: Vec<Vector> = (0..n)
            .map(|i| {
                let mut p = cert.x0.clone().into_inner();
                p[i] += r;
                Vector::from(p)
            })
            .collect();
        extra.push(cert.x0.offset(r));
        for p in extra {
            let p = ambient.clamp(&p);
            if constraint.covers(&p, 0.0) && !out.iter().any(|(g, _)| p.is_below(g)) {
                out.push((p, GeneratorSource::Expansion { beta }));
            }
        }
    }
    Ok(out)
}

fn key(x: &Vector) -> Vec<u64> {
    x.iter().map(|c| c.to_bits()).collect()
}

/// `Z`: lower closure of the certificate trajectory, optionally augmented
/// with a sample of `↑x0 ∩ B_β(x0)`.
pub fn build_z(model: &SystemModel, constraint: &LowerSet, cert: &FeasibilityCertificate, use_beta: bool, lambda: Option<f64>) -> Result<LowerSet> {
    let beta = match (use_beta, lambda) {
        (true, Some(l)) => beta_radius(cert, l),
        _ => 0.0,
    };
    let points = z_generators(model, constraint, cert, beta)?;
    Ok(LowerSet::new(Antichain::maximal_of(points.into_iter().map(|(p, _)| p)), constraint.ambient().clone()))
}

/// `H`: upper closure of the in-constraint prefix of an unsafe trajectory.
pub fn build_h(ambient: &BoxRegion, prefix: &[Vector]) -> Result<UpperSet> {
    if prefix.is_empty() {
        return Err(Error::InvalidArgument("unsafe prefix is empty".into()));
    }
    Ok(UpperSet::new(Antichain::minimal_of(prefix.iter().cloned()), ambient.clone()))
}

struct State<'a> {
    model: &'a SystemModel,
    constraint: &'a LowerSet,
    config: &'a SolverConfig,
    lambda: Option<f64>,
    grid: StatusGrid,
    f1: Antichain,
    f2: Antichain,
    sources: HashMap<Vec<u64>, GeneratorRecord>,
    certificates: Vec<FeasibilityCertificate>,
    unknown: Vec<Vector>,
    stats: SolverStats,
}

impl State<'_> {
    fn commit(&mut self, x: &Vector, cell: Option<usize>, outcome: Classification, sims: usize) -> Result<()> {
        self.stats.classifications += 1;
        self.stats.simulations += sims;
        match outcome {
            Classification::Feasible { mut certificate } => {
                self.stats.feasible += 1;
                if self.config.use_beta {
                    if let Some(l) = self.lambda {
                        certificate.beta = beta_radius(&certificate, l);
                    }
                }
                let index = self.certificates.len();
                let points = z_generators(self.model, self.constraint, &certificate, certificate.beta)?;
                self.stats.simulations += 1;
                self.certificates.push(certificate);
                for (g, source) in points {
                    if self.f2.is_dominated_by(&g, -self.config.tau) {
                        return Err(Error::Overlap(g.into_inner()));
                    }
                    self.grid.mark_below(&g)?;
                    if self.f1.insert_maximal(g.clone()) {
                        self.sources.insert(key(&g), GeneratorRecord { point: g, certificate: index, source });
                    }
                }
            }
            Classification::Unsafe { prefix, .. } => {
                self.stats.unsafe_points += 1;
                let h = build_h(self.constraint.ambient(), &prefix)?;
                for p in h.generators().iter() {
                    if self.f1.dominates(p, -self.config.tau) {
                        return Err(Error::Overlap(p.to_vec()));
                    }
                    self.grid.mark_above(p)?;
                    self.f2.insert_minimal(p.clone());
                }
            }
            Classification::Unknown { .. } => {
                self.stats.unknown += 1;
                if let Some(k) = cell {
                    self.grid.mark_unknown(k);
                }
                self.unknown.push(x.clone());
            }
        }
        Ok(())
    }

    fn f1_covers(&self, x: &Vector) -> bool {
        self.f1.dominates(x, 0.0)
    }
}

/// Longest run of unclassified cells along the lattice diagonals; returns
/// the midpoint of that run (smallest linear index on ties).
fn select_candidate(grid: &StatusGrid) -> Option<usize> {
    let lattice = grid.lattice();
    let mut best: Option<(usize, usize)> = None;
    for start in 0..lattice.len() {
        if !lattice.multi(start).iter().any(|&i| i == 0) {
            continue;
        }
        let mut run: Vec<usize> = Vec::new();
        let mut cur = Some(start);
        loop {
            let open = cur.map(|k| grid.status(k) == CellStatus::Unclassified).unwrap_or(false);
            if open {
                run.push(cur.expect("open cell"));
            } else if !run.is_empty() {
                let mid = run[(run.len() - 1) / 2];
                let better = match best {
                    None => true,
                    Some((len, k)) => run.len() > len || (run.len() == len && mid < k),
                };
                if better {
                    best = Some((run.len(), mid));
                }
                run.clear();
            }
            match cur {
                Some(k) => cur = diagonal_next(lattice, k),
                None => break,
            }
        }
    }
    best.map(|(_, k)| k)
}

fn diagonal_next(lattice: &Lattice, k: usize) -> Option<usize> {
    let mut idx = lattice.multi(k);
    for (i, c) in idx.iter_mut().zip(lattice.counts()) {
        *i += 1;
        if *i >= *c {
            return None;
        }
    }
    Some(lattice.linear(&idx))
}

/// Computes an inner approximation of the maximal robust controlled
/// invariant inside `constraint`.
pub fn compute_invariant(model: &SystemModel, constraint: &LowerSet, config: &SolverConfig) -> Result<SolverResult> {
    let started = Instant::now();
    config.validate()?;
    if constraint.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch { expected: model.state_dim(), got: constraint.dim() });
    }
    let class = classify_model(model, constraint.ambient())?;
    if class == MonotoneClass::None {
        return Err(Error::NotMonotone(format!("`{}` is not state monotone", model.name())));
    }
    let controls = candidate_controls(model, &config.strategy, class)?;
    let lambda = if config.use_beta {
        Some(match config.lipschitz.or(model.lipschitz_x()) {
            Some(l) => l,
            None => estimate_lipschitz(model, constraint.ambient(), 2000, 1.5)?,
        })
    } else {
        config.lipschitz.or(model.lipschitz_x())
    };
    let opts = config.classify_options();
    let sims_per = controls.len();

    let mut state = State {
        model,
        constraint,
        config,
        lambda,
        grid: StatusGrid::new(constraint, config.resolution())?,
        f1: Antichain::new(),
        f2: Antichain::new(),
        sources: HashMap::new(),
        certificates: Vec::new(),
        unknown: Vec::new(),
        stats: SolverStats::default(),
    };

    let tops: Vec<Vector> = constraint.generators().points().to_vec();
    let outcomes: Vec<Result<Classification>> =
        tops.par_iter().map(|x| classify_point(model, constraint, x, &controls, &opts)).collect();
    for (x, outcome) in tops.iter().zip(outcomes) {
        let cell = state.grid.lattice().floor_index(x).map(|i| state.grid.lattice().linear(&i));
        state.commit(x, cell, outcome?, sims_per)?;
    }

    let termination = 'run: {
        if state.grid.all_feasible() {
            break 'run Termination::ConstraintInvariant;
        }
        let origin = constraint.ambient().lower().clone();
        if !state.f1_covers(&origin) {
            let outcome = classify_point(model, constraint, &origin, &controls, &opts)?;
            let unsafe_origin = outcome.is_unsafe();
            state.commit(&origin, Some(0), outcome, sims_per)?;
            if unsafe_origin {
                break 'run Termination::OriginUnsafe;
            }
        }
        loop {
            if state.grid.gap() <= config.epsilon {
                break 'run Termination::Converged;
            }
            if state.stats.iterations >= config.max_iterations {
                break 'run Termination::IterationLimit;
            }
            let Some(cell) = select_candidate(&state.grid) else {
                break 'run Termination::CandidatesExhausted;
            };
            state.stats.iterations += 1;
            let x = state.grid.lattice().point_at(cell);
            let outcome = classify_point(model, constraint, &x, &controls, &opts)?;
            state.commit(&x, Some(cell), outcome, sims_per)?;
        }
    };

    let gap = state.grid.gap();
    let mut generators = Vec::with_capacity(state.f1.len());
    for g in state.f1.iter() {
        let record = state.sources.get(&key(g)).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!("generator {g} lost its certificate"))
        })?;
        generators.push(record);
    }
    let ambient = constraint.ambient().clone();
    let mut stats = state.stats;
    stats.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(SolverResult {
        f1: LowerSet::new(state.f1, ambient.clone()),
        f2: UpperSet::new(state.f2, ambient),
        unknown_points: state.unknown,
        gap,
        epsilon: config.epsilon,
        resolution: config.resolution(),
        lambda,
        certificates: state.certificates,
        generators,
        termination,
        stats,
    })
}

/// Lattice points of `region` in `inner` but not in `outer` (up to `tau`).
pub fn inclusion_violations(inner: &LowerSet, outer: &LowerSet, region: &BoxRegion, resolution: f64, tau: f64) -> Result<Vec<Vector>> {
    let lattice = Lattice::new(region, resolution)?;
    Ok((0..lattice.len())
        .map(|k| lattice.point_at(k))
        .filter(|p| inner.contains(p) && !outer.contains_with_slack(p, tau))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Random piecewise disturbance signals per generator, on top of `d_max`.
    pub trials: usize,
    /// Replay horizon as a multiple of the certificate's `T`.
    pub horizon_factor: f64,
    pub tau: f64,
    pub h: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { trials: 20, horizon_factor: 10.0, tau: 1e-3, h: 0.01, seed: VERIFY_SEED }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentViolation {
    pub generator: Vector,
    pub time: f64,
    pub state: Vector,
    pub reason: String,
}

impl fmt::Display for ContainmentViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "generator {}: {} (t = {}, x = {})", self.generator, self.reason, self.time, self.state)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub generators_checked: usize,
    pub simulations: usize,
    pub violations: Vec<ContainmentViolation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Piecewise-constant signal with `pieces` uniformly random values in `region`.
pub fn random_piecewise<R: Rng>(region: &BoxRegion, horizon: f64, pieces: usize, rng: &mut R) -> Result<Signal> {
    let pieces = pieces.max(1);
    let times = (0..pieces).map(|i| horizon * i as f64 / pieces as f64).collect();
    let values = (0..pieces).map(|_| region.sample(rng)).collect();
    Signal::piecewise(times, values)
}

/// Replays every F1 generator under the time-shifted periodic control of
/// its certificate, against `d_max` and random disturbance signals, and
/// checks that the state stays covered by F1.
pub fn verify_result(model: &SystemModel, constraint: &LowerSet, result: &SolverResult, opts: &VerifyOptions) -> Result<VerifyReport> {
    let checks: Vec<Result<(usize, Vec<ContainmentViolation>)>> = result
        .f1
        .generators()
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, g)| verify_generator(model, constraint, result, g, i, opts))
        .collect();
    let mut report = VerifyReport { generators_checked: checks.len(), ..Default::default() };
    for check in checks {
        let (sims, violations) = check?;
        report.simulations += sims;
        report.violations.extend(violations);
    }
    Ok(report)
}

fn verify_generator(
    model: &SystemModel,
    constraint: &LowerSet,
    result: &SolverResult,
    g: &Vector,
    index: usize,
    opts: &VerifyOptions,
) -> Result<(usize, Vec<ContainmentViolation>)> {
    let violation = |reason: &str| ContainmentViolation { generator: g.clone(), time: 0.0, state: g.clone(), reason: reason.into() };
    if g.dim() != model.state_dim() || !constraint.contains_with_slack(g, opts.tau) {
        return Ok((0, vec![violation("generator outside the constraint set")]));
    }
    let Some(record) = result.record_for(g) else {
        return Ok((0, vec![violation("generator has no certificate")]));
    };
    let (cert, offset, target) = match &record.source {
        GeneratorSource::Trajectory { time, .. } => {
            let Some(cert) = result.certificates.get(record.certificate) else {
                return Ok((0, vec![violation("certificate index out of range")]));
            };
            (cert.clone(), *time, result.f1.clone())
        }
        GeneratorSource::Expansion { .. } => {
            let controls = vec![Signal::constant(model.u_min().clone())];
            let opts_c = ClassifyOptions { t_max: 200.0, h: opts.h, margin: 0.0, decisive: false };
            let Some(cert) = classify_point(model, constraint, g, &controls, &opts_c)?.certificate().cloned() else {
                return Ok((1, vec![violation("expansion point is not feasible")]));
            };
            let mut target = result.f1.clone();
            for x in certificate_trajectory(model, &cert, opts.h)?.states {
                target.insert(x);
            }
            (cert, 0.0, target)
        }
    };
    let cert_state = certificate_trajectory(model, &cert, cert.h)?;
    let k = (offset / cert.h).round() as usize;
    if let Some(x) = cert_state.states.get(k) {
        if x.distance(g) > opts.tau {
            return Ok((1, vec![violation("generator does not lie on its certificate trajectory")]));
        }
    }
    let control = Signal::shifted(periodic_control(&cert)?, offset);
    let horizon = opts.horizon_factor * cert.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ index as u64);
    let mut disturbances = vec![Signal::constant(model.d_max().clone())];
    for _ in 0..opts.trials {
        disturbances.push(random_piecewise(model.disturbances(), horizon, 20, &mut rng)?);
    }
    let mut sims = 1;
    for d in &disturbances {
        sims += 1;
        let traj = simulate(model, g, &control, d, horizon, opts.h)?;
        if let Some((t, x)) = traj.times.iter().zip(&traj.states).find(|(_, x)| !target.covers(x, opts.tau)) {
            return Ok((
                sims,
                vec![ContainmentViolation { generator: g.clone(), time: *t, state: x.clone(), reason: "left F1".into() }],
            ));
        }
    }
    Ok((sims, Vec::new()))
}
