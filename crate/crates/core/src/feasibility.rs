//! Point feasibility: does some candidate control drive the state, under the
//! maximal disturbance, to a point dominated by its own past while staying in
//! the constraint set? A feasible point yields a robust controlled invariant
//! (the lower closure of its trajectory) and a periodic control sustaining it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, step_count, Signal, Stepper, SystemModel, Trajectory};
use crate::error::{Error, Result};
use crate::monotonicity::MonotoneClass;
use crate::order::{Antichain, LowerSet, Vector};

/// Slack used when checking that an initial point lies in the constraint set.
const MEMBERSHIP_EPS: f64 = 1e-9;

/// Witness that `x0` is feasible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub x0: Vector,
    pub control: Signal,
    /// Constant disturbance the certificate was computed against (`d_max`).
    pub disturbance: Vector,
    /// Detection time: `x(T) ≤ x(t_dom)` componentwise.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub t_dom: f64,
    /// `T − t_dom`.
    pub delta: f64,
    /// `min_i (x(t_dom)_i − x(T)_i)`.
    #[serde(rename = "eps_T")]
    pub eps_t: f64,
    /// Smallest sup-norm distance from `x(t)`, `0 ≤ t ≤ T`, to the upper
    /// frontier of the constraint set.
    pub gamma: f64,
    /// Expansion radius; zero unless a Lipschitz constant was supplied.
    pub beta: f64,
    /// Integration step the certificate was found with.
    pub h: f64,
}

impl FeasibilityCertificate {
    pub fn is_strict(&self) -> bool {
        self.eps_t > 0.0 && self.gamma > 0.0
    }
}

impl fmt::Display for FeasibilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x0     = {}", self.x0)?;
        writeln!(f, "T      = {}", self.horizon)?;
        writeln!(f, "t_dom  = {}", self.t_dom)?;
        writeln!(f, "delta  = {}", self.delta)?;
        writeln!(f, "eps_T  = {}", self.eps_t)?;
        writeln!(f, "gamma  = {}", self.gamma)?;
        writeln!(f, "beta   = {}", self.beta)?;
        write!(f, "control = {}", serde_json::to_string(&self.control).unwrap_or_default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Classification {
    Feasible { certificate: FeasibilityCertificate },
    /// The decisive trajectory left the constraint set at `exit_time`;
    /// `prefix` holds its states before that grid time.
    Unsafe { exit_time: f64, prefix: Vec<Vector> },
    Unknown { horizon_exhausted: f64 },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Feasible { .. } => "feasible",
            Classification::Unsafe { .. } => "unsafe",
            Classification::Unknown { .. } => "unknown",
        }
    }

    pub fn certificate(&self) -> Option<&FeasibilityCertificate> {
        match self {
            Classification::Feasible { certificate } => Some(certificate),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Classification::Feasible { .. })
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self, Classification::Unsafe { .. })
    }
}

/// Parameters of a single classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub t_max: f64,
    pub h: f64,
    /// Required dominance gap `η`: `x(T) ≤ x(t_dom) − η·𝟙`.
    pub margin: f64,
    /// Whether exit of every candidate proves the point unsafe. Only true for
    /// the single minimal control of a CSM model.
    pub decisive: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { t_max: 200.0, h: 0.01, margin: 0.0, decisive: true }
    }
}

/// How candidate controls are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlStrategy {
    /// The single constant control `u_min`.
    CsmMin,
    /// `kᵐ` constant controls on a uniform lattice of `U`.
    Grid(usize),
    User(Vec<Signal>),
}

impl ControlStrategy {
    /// Parses `csm_min` or `grid:k`.
    pub fn parse(text: &str) -> Result<ControlStrategy> {
        let text = text.trim();
        if text == "csm_min" {
            return Ok(ControlStrategy::CsmMin);
        }
        if let Some(k) = text.strip_prefix("grid:") {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad grid size in strategy `{text}`")))?;
            if k == 0 {
                return Err(Error::Config("grid strategy needs k ≥ 1".into()));
            }
            return Ok(ControlStrategy::Grid(k));
        }
        Err(Error::Config(format!("unknown strategy `{text}` (expected `csm_min` or `grid:k`)")))
    }

    pub fn is_decisive(&self) -> bool {
        matches!(self, ControlStrategy::CsmMin)
    }
}

impl fmt::Display for ControlStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlStrategy::CsmMin => f.write_str("csm_min"),
            ControlStrategy::Grid(k) => write!(f, "grid:{k}"),
            ControlStrategy::User(list) => write!(f, "user({})", list.len()),
        }
    }
}

pub fn candidate_controls(model: &SystemModel, strategy: &ControlStrategy, class: MonotoneClass) -> Result<Vec<Signal>> {
    match strategy {
        ControlStrategy::CsmMin => {
            if class != MonotoneClass::Csm {
                return Err(Error::NotMonotone(format!(
                    "minimal-control strategy needs a CSM model, `{}` is {class}",
                    model.name()
                )));
            }
            Ok(vec![Signal::constant(model.u_min().clone())])
        }
        ControlStrategy::Grid(k) => {
            if *k == 0 {
                return Err(Error::InvalidArgument("grid strategy needs k ≥ 1".into()));
            }
            let u = model.controls();
            let m = u.dim();
            let level = |axis: usize, i: usize| {
                if *k == 1 {
                    u.lower()[axis]
                } else {
                    u.lower()[axis] + u.extent(axis) * i as f64 / (*k - 1) as f64
                }
            };
            let total = k.pow(m as u32);
            Ok((0..total)
                .map(|mut code| {
                    let mut idx = vec![0; m];
                    for axis in (0..m).rev() {
                        idx[axis] = code % k;
                        code /= k;
                    }
                    Signal::constant(Vector::from((0..m).map(|a| level(a, idx[a])).collect::<Vec<_>>()))
                })
                .collect())
        }
        ControlStrategy::User(list) => {
            if let Some(bad) = list.iter().find(|s| !s.within(model.controls())) {
                return Err(Error::InvalidArgument(format!("control {bad:?} leaves U")));
            }
            Ok(list.clone())
        }
    }
}

enum ControlOutcome {
    Feasible(FeasibilityCertificate),
    Exited { exit_time: f64, prefix: Vec<Vector> },
    Undecided,
}

/// Classifies `x0` against the constraint set using the maximal disturbance.
pub fn classify_point(model: &SystemModel, constraint: &LowerSet, x0: &Vector, controls: &[Signal], opts: &ClassifyOptions) -> Result<Classification> {
    classify_point_robust(model, constraint, x0, controls, std::slice::from_ref(model.d_max()), opts)
}

/// Classifies `x0` requiring the feasibility conditions to hold jointly for
/// every constant disturbance in `disturbances` (which must include `d_max`
/// for the certificate to refer to it).
pub fn classify_point_robust(
    model: &SystemModel,
    constraint: &LowerSet,
    x0: &Vector,
    controls: &[Signal],
    disturbances: &[Vector],
    opts: &ClassifyOptions,
) -> Result<Classification> {
    x0.check_dim(model.state_dim())?;
    if controls.is_empty() {
        return Err(Error::NoControls);
    }
    if disturbances.is_empty() {
        return Err(Error::InvalidArgument("empty disturbance list".into()));
    }
    if !(opts.t_max > 0.0 && opts.h > 0.0 && opts.margin >= 0.0) {
        return Err(Error::InvalidArgument("need t_max > 0, h > 0 and margin ≥ 0".into()));
    }
    if !constraint.contains_with_slack(x0, MEMBERSHIP_EPS) {
        return Err(Error::OutsideConstraints(x0.to_vec()));
    }
    let reference = disturbances
        .iter()
        .position(|d| d == model.d_max())
        .unwrap_or(disturbances.len() - 1);

    let mut exits = Vec::new();
    for control in controls {
        match run_control(model, constraint, x0, control, disturbances, reference, opts)? {
            ControlOutcome::Feasible(certificate) => return Ok(Classification::Feasible { certificate }),
            ControlOutcome::Exited { exit_time, prefix } => exits.push((exit_time, prefix)),
            ControlOutcome::Undecided => {}
        }
    }
    if opts.decisive && controls.len() == 1 && exits.len() == 1 {
        let (exit_time, prefix) = exits.pop().expect("one exit");
        return Ok(Classification::Unsafe { exit_time, prefix });
    }
    Ok(Classification::Unknown { horizon_exhausted: opts.t_max })
}

fn run_control(
    model: &SystemModel,
    constraint: &LowerSet,
    x0: &Vector,
    control: &Signal,
    disturbances: &[Vector],
    reference: usize,
    opts: &ClassifyOptions,
) -> Result<ControlOutcome> {
    let dist_signals: Vec<Signal> = disturbances.iter().map(|d| Signal::constant(d.clone())).collect();
    let mut steppers = dist_signals
        .iter()
        .map(|d| Stepper::new(model, x0.clone(), control, d))
        .collect::<Result<Vec<_>>>()?;
    let mut histories: Vec<Vec<Vector>> = vec![vec![x0.clone()]; disturbances.len()];
    // maximal elements of every state visited so far, across disturbances
    let mut past = Antichain::maximal_of([x0.clone()]);
    let steps = step_count(opts.t_max, opts.h);

    for k in 1..=steps {
        let t = if k == steps { opts.t_max } else { k as f64 * opts.h };
        let mut current = Vec::with_capacity(steppers.len());
        for (i, stepper) in steppers.iter_mut().enumerate() {
            let dt = t - stepper.time();
            let x = stepper.advance_to(t, dt)?.clone();
            if !constraint.covers(&x, 0.0) {
                let prefix = std::mem::take(&mut histories[i]);
                return Ok(ControlOutcome::Exited { exit_time: t, prefix });
            }
            current.push(x);
        }

        let all_dominated = current.iter().all(|x| past.dominates(&x.offset(opts.margin), 0.0));
        if all_dominated {
            let history = &histories[reference];
            let x_t = &current[reference];
            let shifted = x_t.offset(opts.margin);
            if let Some(j) = (0..history.len()).rev().find(|&j| shifted.is_below(&history[j])) {
                let x_dom = &history[j];
                let eps_t = (0..x_t.dim()).map(|i| x_dom[i] - x_t[i]).fold(f64::INFINITY, f64::min);
                let gamma = history
                    .iter()
                    .chain(std::iter::once(x_t))
                    .map(|x| constraint.depth(x))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                let t_dom = j as f64 * opts.h;
                return Ok(ControlOutcome::Feasible(FeasibilityCertificate {
                    x0: x0.clone(),
                    control: control.clone(),
                    disturbance: disturbances[reference].clone(),
                    horizon: t,
                    t_dom,
                    delta: t - t_dom,
                    eps_t,
                    gamma,
                    beta: 0.0,
                    h: opts.h,
                }));
            }
        }
        for (i, x) in current.into_iter().enumerate() {
            past.insert_maximal(x.clone());
            histories[i].push(x);
        }
    }
    Ok(ControlOutcome::Undecided)
}

/// Re-simulates the certificate's trajectory on `[0, T]` under `d_max`.
pub fn certificate_trajectory(model: &SystemModel, cert: &FeasibilityCertificate, h: f64) -> Result<Trajectory> {
    simulate(model, &cert.x0, &cert.control, &Signal::constant(cert.disturbance.clone()), cert.horizon, h)
}

/// Lower closure of the sampled certificate trajectory: a robust controlled
/// invariant contained in `constraint`.
pub fn invariant_from_certificate(model: &SystemModel, constraint: &LowerSet, cert: &FeasibilityCertificate, h: f64) -> Result<LowerSet> {
    let traj = certificate_trajectory(model, cert, h)?;
    Ok(LowerSet::new(Antichain::maximal_of(traj.states), constraint.ambient().clone()))
}

/// Control that keeps the certificate's trajectory inside its invariant
/// forever by looping the window `(T − δ, T]`.
pub fn periodic_control(cert: &FeasibilityCertificate) -> Result<Signal> {
    if cert.delta <= 0.0 || cert.control.is_constant() {
        return Ok(cert.control.clone());
    }
    Signal::periodic(cert.control.clone(), cert.horizon, cert.delta)
}

/// `β = min(ε_T, γ)·λ·e^{−λT}/(1 + λ)`; zero when the certificate is not
/// strict or `λ ≤ 0`.
pub fn beta_radius(cert: &FeasibilityCertificate, lambda: f64) -> f64 {
    let eps = cert.eps_t.min(cert.gamma);
    if !(lambda > 0.0) || !(eps > 0.0) {
        return 0.0;
    }
    eps * lambda * (-lambda * cert.horizon).exp() / (1.0 + lambda)
}
