//! Numerical checks that a model is state monotone (SM) or control-state
//! monotone (CSM) with respect to the componentwise order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, Signal, SystemModel};
use crate::error::{Error, Result};
use crate::order::{BoxRegion, Vector};

/// Monotonicity class, ordered `None < Sm < Csm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MonotoneClass {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "SM")]
    Sm,
    #[serde(rename = "CSM")]
    Csm,
}

impl MonotoneClass {
    pub fn is_state_monotone(self) -> bool {
        self >= MonotoneClass::Sm
    }
}

impl fmt::Display for MonotoneClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonotoneClass::None => "none",
            MonotoneClass::Sm => "SM",
            MonotoneClass::Csm => "CSM",
        })
    }
}

/// Which partial derivative a violation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partial {
    /// `∂f_i/∂x_j`, `i ≠ j`
    State { i: usize, j: usize },
    /// `∂f_i/∂u_h`
    Control { i: usize, h: usize },
    /// `∂f_i/∂d_h`
    Disturbance { i: usize, h: usize },
}

impl fmt::Display for Partial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partial::State { i, j } => write!(f, "df{}/dx{}", i + 1, j + 1),
            Partial::Control { i, h } => write!(f, "df{}/du{}", i + 1, h + 1),
            Partial::Disturbance { i, h } => write!(f, "df{}/dd{}", i + 1, h + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub partial: Partial,
    pub x: Vector,
    pub u: Vector,
    pub d: Vector,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub classification: MonotoneClass,
    pub violations: Vec<Violation>,
    pub samples_used: usize,
}

impl fmt::Display for MonotonicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "classification: {}", self.classification)?;
        writeln!(f, "samples: {}", self.samples_used)?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "{} = {:e} at x = {}, u = {}, d = {}", v.partial, v.value, v.x, v.u, v.d)?;
        }
        Ok(())
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `k` in base `b`.
fn radical_inverse(mut k: u64, b: u32) -> f64 {
    let b = b as u64;
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += (k % b) as f64 * f;
        k /= b;
        f *= inv;
    }
    r
}

/// `k`-th point of the Halton sequence in `dim` dimensions, starting at index
/// 1 so the origin is never sampled.
fn halton(k: usize, dim: usize) -> Vec<f64> {
    (0..dim).map(|i| radical_inverse(k as u64 + 1, PRIMES[i % PRIMES.len()])).collect()
}

/// Moves `x` at least `margin` inside `region` on every axis that is wide
/// enough.
fn inset(region: &BoxRegion, x: &Vector, margin: f64) -> Vector {
    Vector::from(
        (0..x.dim())
            .map(|i| {
                let (lo, hi) = (region.lower()[i], region.upper()[i]);
                if hi - lo > 2.0 * margin {
                    x[i].clamp(lo + margin, hi - margin)
                } else {
                    0.5 * (lo + hi)
                }
            })
            .collect::<Vec<_>>(),
    )
}

/// Central-difference check of the Kamke–Müller sign conditions at
/// `samples` quasi-random points of `region × U × D`.
pub fn check_kamke_muller(model: &SystemModel, region: &BoxRegion, samples: usize, fd_step: f64, tol: f64) -> Result<MonotonicityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if !(fd_step > 0.0) || !(tol >= 0.0) {
        return Err(Error::InvalidArgument("fd_step must be positive and tol non-negative".into()));
    }
    let (n, m, p) = (model.state_dim(), model.control_dim(), model.disturbance_dim());
    if region.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: region.dim() });
    }
    let mut violations = Vec::new();
    for k in 0..samples {
        let unit = halton(k, n + m + p);
        let x = inset(region, &region.from_unit(&unit[..n]), fd_step);
        let u = inset(model.controls(), &model.controls().from_unit(&unit[n..n + m]), fd_step);
        let d = inset(model.disturbances(), &model.disturbances().from_unit(&unit[n + m..]), fd_step);

        let mut push = |partial: Partial, value: f64| {
            if value < -tol {
                violations.push(Violation { partial, x: x.clone(), u: u.clone(), d: d.clone(), value });
            }
        };

        for j in 0..n {
            let col = central_difference(model, &x, &u, &d, Slot::State(j), fd_step)?;
            for (i, value) in col.into_iter().enumerate() {
                if i != j {
                    push(Partial::State { i, j }, value);
                }
            }
        }
        for h in 0..m {
            let col = central_difference(model, &x, &u, &d, Slot::Control(h), fd_step)?;
            for (i, value) in col.into_iter().enumerate() {
                push(Partial::Control { i, h }, value);
            }
        }
        for h in 0..p {
            let col = central_difference(model, &x, &u, &d, Slot::Disturbance(h), fd_step)?;
            for (i, value) in col.into_iter().enumerate() {
                push(Partial::Disturbance { i, h }, value);
            }
        }
    }
    let sm = !violations.iter().any(|v| !matches!(v.partial, Partial::Control { .. }));
    let csm = sm && violations.is_empty();
    let classification = match (sm, csm) {
        (_, true) => MonotoneClass::Csm,
        (true, false) => MonotoneClass::Sm,
        _ => MonotoneClass::None,
    };
    Ok(MonotonicityReport { classification, violations, samples_used: samples })
}

enum Slot {
    State(usize),
    Control(usize),
    Disturbance(usize),
}

fn central_difference(model: &SystemModel, x: &Vector, u: &Vector, d: &Vector, slot: Slot, step: f64) -> Result<Vec<f64>> {
    let bump = |v: &Vector, k: usize, s: f64| {
        let mut w = v.to_vec();
        w[k] += s;
        w
    };
    let (plus, minus) = match slot {
        Slot::State(k) => (
            model.eval(&bump(x, k, step), u, d)?,
            model.eval(&bump(x, k, -step), u, d)?,
        ),
        Slot::Control(k) => (
            model.eval(x, &bump(u, k, step), d)?,
            model.eval(x, &bump(u, k, -step), d)?,
        ),
        Slot::Disturbance(k) => (
            model.eval(x, u, &bump(d, k, step))?,
            model.eval(x, u, &bump(d, k, -step))?,
        ),
    };
    Ok(plus.iter().zip(minus.iter()).map(|(a, b)| (a - b) / (2.0 * step)).collect())
}

/// Resolves the class of `model`: a trusted annotation when present,
/// otherwise a Kamke–Müller check over `region`.
pub fn classify_model(model: &SystemModel, region: &BoxRegion) -> Result<MonotoneClass> {
    if let Some(class) = model.monotone_class() {
        return Ok(class);
    }
    Ok(check_kamke_muller(model, region, 2000, 1e-5, 1e-9)?.classification)
}

/// Initial condition and constant inputs of one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub x0: Vector,
    pub u: Vector,
    pub d: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCounterexample {
    pub lower: RunSpec,
    pub upper: RunSpec,
    pub time: f64,
    pub lower_state: Vector,
    pub upper_state: Vector,
}

/// Simulates both runs and returns the first grid time where the order of
/// the states breaks by more than `slack`.
pub fn check_order_pair(model: &SystemModel, lower: &RunSpec, upper: &RunSpec, horizon: f64, h: f64, slack: f64) -> Result<Option<OrderCounterexample>> {
    let a = simulate(model, &lower.x0, &Signal::constant(lower.u.clone()), &Signal::constant(lower.d.clone()), horizon, h)?;
    let b = simulate(model, &upper.x0, &Signal::constant(upper.u.clone()), &Signal::constant(upper.d.clone()), horizon, h)?;
    for ((t, xa), xb) in a.times.iter().zip(&a.states).zip(&b.states) {
        if !xa.is_below_with_slack(xb, slack) {
            return Ok(Some(OrderCounterexample {
                lower: lower.clone(),
                upper: upper.clone(),
                time: *t,
                lower_state: xa.clone(),
                upper_state: xb.clone(),
            }));
        }
    }
    Ok(None)
}

fn ordered_pair<R: Rng>(region: &BoxRegion, rng: &mut R) -> (Vector, Vector) {
    let hi = region.sample(rng);
    let lo = Vector::from(
        (0..hi.dim())
            .map(|i| region.lower()[i] + rng.gen::<f64>() * (hi[i] - region.lower()[i]))
            .collect::<Vec<_>>(),
    );
    (lo, hi)
}

/// Samples ordered initial states (and ordered constant disturbances; for
/// `Csm` also ordered constant controls) and checks that the order of the
/// trajectories is preserved at every grid time up to a slack of 1e-6.
pub fn check_order_preservation(
    model: &SystemModel,
    region: &BoxRegion,
    horizon: f64,
    trials: usize,
    class: MonotoneClass,
    h: f64,
) -> Result<Option<OrderCounterexample>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0bde);
    for _ in 0..trials {
        let (x1, x2) = ordered_pair(region, &mut rng);
        let (d1, d2) = ordered_pair(model.disturbances(), &mut rng);
        let (u1, u2) = if class == MonotoneClass::Csm {
            ordered_pair(model.controls(), &mut rng)
        } else {
            let u = model.controls().sample(&mut rng);
            (u.clone(), u)
        };
        let lower = RunSpec { x0: x1, u: u1, d: d1 };
        let upper = RunSpec { x0: x2, u: u2, d: d2 };
        if let Some(cex) = check_order_pair(model, &lower, &upper, horizon, h, 1e-6)? {
            return Ok(Some(cex));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCounterexample {
    pub x_low: Vector,
    pub eps: Vector,
    pub time: f64,
    /// `min_i (Φ(t, x_low + ε)_i − Φ(t, x_low)_i) − min_i ε_i`; negative on failure.
    pub margin: f64,
}

/// Checks, at one pair, that the ball of radius `min ε` around
/// `Φ(t, x_low, u_min, d_max)` fits below `Φ(t, x_low + ε, u_min, d_max)` for
/// every grid time in `(0, horizon]`.
pub fn expansion_holds_at(model: &SystemModel, x_low: &Vector, eps: &Vector, horizon: f64, h: f64) -> Result<Option<ExpansionCounterexample>> {
    let radius = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let u = Signal::constant(model.u_min().clone());
    let d = Signal::constant(model.d_max().clone());
    let a = simulate(model, x_low, &u, &d, horizon, h)?;
    let b = simulate(model, &x_low.add(eps), &u, &d, horizon, h)?;
    for k in 1..a.times.len() {
        let margin = (0..x_low.dim())
            .map(|i| b.states[k][i] - a.states[k][i])
            .fold(f64::INFINITY, f64::min)
            - radius;
        if margin < -1e-9 {
            return Ok(Some(ExpansionCounterexample { x_low: x_low.clone(), eps: eps.clone(), time: a.times[k], margin }));
        }
    }
    Ok(None)
}

/// Randomised check of the expansion condition used to restrict the search
/// to minimal controls.
pub fn check_expansion_condition(model: &SystemModel, region: &BoxRegion, horizon: f64, trials: usize, h: f64) -> Result<Option<ExpansionCounterexample>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xe8);
    for _ in 0..trials {
        let x_low = region.sample(&mut rng);
        let eps = Vector::from(
            (0..region.dim())
                .map(|i| 0.1 * region.extent(i) * rng.gen::<f64>())
                .collect::<Vec<_>>(),
        );
        if let Some(cex) = expansion_holds_at(model, &x_low, &eps, horizon, h)? {
            return Ok(Some(cex));
        }
    }
    Ok(None)
}
