//! Continuous-time control systems `ẋ = f(x, u, d)`, piecewise-constant
//! input signals, and a fixed-step RK4 integrator.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotonicity::MonotoneClass;
use crate::order::{BoxRegion, Vector};

/// `f(x, u, d, out)` writes `ẋ` into `out`.
pub type VectorField = dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync;

/// A control system with box constraints on its inputs.
#[derive(Clone)]
pub struct SystemModel {
    name: String,
    state_dim: usize,
    controls: BoxRegion,
    disturbances: BoxRegion,
    field: Arc<VectorField>,
    lipschitz_x: Option<f64>,
    monotone_class: Option<MonotoneClass>,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("n", &self.state_dim)
            .field("controls", &self.controls)
            .field("disturbances", &self.disturbances)
            .field("lipschitz_x", &self.lipschitz_x)
            .field("monotone_class", &self.monotone_class)
            .finish()
    }
}

impl SystemModel {
    pub fn new<F>(name: impl Into<String>, state_dim: usize, controls: BoxRegion, disturbances: BoxRegion, field: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if state_dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be at least 1".into()));
        }
        Ok(SystemModel {
            name: name.into(),
            state_dim,
            controls,
            disturbances,
            field: Arc::new(field),
            lipschitz_x: None,
            monotone_class: None,
        })
    }

    pub fn with_lipschitz(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant must be ≥ 0, got {lambda}")));
        }
        self.lipschitz_x = Some(lambda);
        Ok(self)
    }

    /// Trusted monotonicity annotation; skips numerical verification.
    pub fn with_monotone_class(mut self, class: MonotoneClass) -> Self {
        self.monotone_class = Some(class);
        self
    }

    pub fn with_controls(mut self, controls: BoxRegion) -> Result<Self> {
        controls.check_same_dim(&self.controls)?;
        self.controls = controls;
        Ok(self)
    }

    pub fn with_disturbances(mut self, disturbances: BoxRegion) -> Result<Self> {
        disturbances.check_same_dim(&self.disturbances)?;
        self.disturbances = disturbances;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.controls.dim()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.disturbances.dim()
    }

    pub fn controls(&self) -> &BoxRegion {
        &self.controls
    }

    pub fn disturbances(&self) -> &BoxRegion {
        &self.disturbances
    }

    pub fn lipschitz_x(&self) -> Option<f64> {
        self.lipschitz_x
    }

    pub fn monotone_class(&self) -> Option<MonotoneClass> {
        self.monotone_class
    }

    pub fn u_min(&self) -> &Vector {
        self.controls.lower()
    }

    pub fn d_max(&self) -> &Vector {
        self.disturbances.upper()
    }

    /// Evaluates `f(x, u, d)`; fails if any component is non-finite.
    pub fn eval(&self, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vector> {
        let mut out = vec![0.0; self.state_dim];
        self.eval_into(x, u, d, &mut out)?;
        Ok(Vector::from(out))
    }

    fn eval_into(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        (self.field)(x, u, d, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::ModelEvaluation { x: x.to_vec(), u: u.to_vec(), d: d.to_vec() })
        }
    }

    /// One classical RK4 step with inputs held constant.
    pub fn rk4_step(&self, x: &[f64], u: &[f64], d: &[f64], h: f64) -> Result<Vector> {
        let n = self.state_dim;
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.eval_into(x, u, d, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        self.eval_into(&tmp, u, d, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        self.eval_into(&tmp, u, d, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        self.eval_into(&tmp, u, d, &mut k4)?;
        Ok(Vector::from(
            (0..n)
                .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect::<Vec<_>>(),
        ))
    }
}

impl BoxRegion {
    fn check_same_dim(&self, other: &BoxRegion) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: other.dim(), got: self.dim() });
        }
        Ok(())
    }
}

/// Piecewise-constant input signal. Also used for disturbances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Constant {
        value: Vector,
    },
    /// `values[i]` on `[times[i], times[i + 1])`; the last value holds forever.
    Piecewise {
        times: Vec<f64>,
        values: Vec<Vector>,
    },
    /// `base` on `[0, horizon]`, then the window `(horizon − period, horizon]`
    /// repeated.
    Periodic {
        base: Box<Signal>,
        horizon: f64,
        period: f64,
    },
    /// `inner(t + offset)`.
    Shifted {
        inner: Box<Signal>,
        offset: f64,
    },
}

impl Signal {
    pub fn constant(value: Vector) -> Signal {
        Signal::Constant { value }
    }

    pub fn piecewise(times: Vec<f64>, values: Vec<Vector>) -> Result<Signal> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument("piecewise signal needs one value per switching time".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument("piecewise signal must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("switching times must be strictly increasing".into()));
        }
        let dim = values[0].dim();
        for v in &values {
            v.check_dim(dim)?;
        }
        Ok(Signal::Piecewise { times, values })
    }

    pub fn periodic(base: Signal, horizon: f64, period: f64) -> Result<Signal> {
        if !(period > 0.0 && period <= horizon) {
            return Err(Error::InvalidArgument(format!(
                "periodic extension needs 0 < δ ≤ T, got δ = {period}, T = {horizon}"
            )));
        }
        Ok(Signal::Periodic { base: Box::new(base), horizon, period })
    }

    pub fn shifted(inner: Signal, offset: f64) -> Signal {
        if offset == 0.0 {
            return inner;
        }
        match inner {
            Signal::Constant { .. } => inner,
            other => Signal::Shifted { inner: Box::new(other), offset },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Signal::Constant { value } => value.dim(),
            Signal::Piecewise { values, .. } => values[0].dim(),
            Signal::Periodic { base, .. } => base.dim(),
            Signal::Shifted { inner, .. } => inner.dim(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Signal::Constant { .. } => true,
            Signal::Piecewise { .. } => false,
            Signal::Periodic { base, .. } => base.is_constant(),
            Signal::Shifted { inner, .. } => inner.is_constant(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<Vector> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.at(t).clone())
    }

    /// Value at `t ≥ 0`.
    pub fn at(&self, t: f64) -> &Vector {
        match self {
            Signal::Constant { value } => value,
            Signal::Piecewise { times, values } => {
                let k = times.partition_point(|s| *s <= t);
                &values[k.max(1) - 1]
            }
            Signal::Periodic { base, horizon, period } => base.at(periodic_argument(t, *horizon, *period)),
            Signal::Shifted { inner, offset } => inner.at(t + offset),
        }
    }

    /// Every value the signal can take.
    pub fn values(&self) -> Vec<&Vector> {
        match self {
            Signal::Constant { value } => vec![value],
            Signal::Piecewise { values, .. } => values.iter().collect(),
            Signal::Periodic { base, .. } => base.values(),
            Signal::Shifted { inner, .. } => inner.values(),
        }
    }

    pub fn within(&self, region: &BoxRegion) -> bool {
        self.values().into_iter().all(|v| v.dim() == region.dim() && region.contains(v))
    }
}

/// Maps `t` to the base time used by the periodic extension: `t` itself for
/// `t ≤ T`, otherwise `t − ⌈(t − T)/δ⌉·δ`, which lies in `(T − δ, T]`.
pub fn periodic_argument(t: f64, horizon: f64, period: f64) -> f64 {
    if t <= horizon {
        return t;
    }
    let mut s = t - ((t - horizon) / period).ceil() * period;
    // rounding in the quotient can land one period off
    if s <= horizon - period {
        s += period;
    } else if s > horizon {
        s -= period;
    }
    debug_assert!(s > horizon - period && s <= horizon, "periodic argument {s} outside (T-δ, T]");
    s
}

/// Sampled solution of the system on a uniform grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub control: Signal,
    pub disturbance: Signal,
}

impl Trajectory {
    pub fn end(&self) -> &Vector {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV with columns `t, x1..xn, u1..um, d1..dp`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.states.first().map_or(0, |s| s.dim());
        let m = self.control.dim();
        let p = self.disturbance.dim();
        let mut out = csv::Writer::from_writer(writer);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("x{i}")))
            .chain((1..=m).map(|i| format!("u{i}")))
            .chain((1..=p).map(|i| format!("d{i}")))
            .collect();
        out.write_record(&header)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(x.iter().copied())
                .chain(self.control.at(*t).iter().copied())
                .chain(self.disturbance.at(*t).iter().copied())
                .map(|v| v.to_string())
                .collect();
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Advances a state through time under fixed signals. Inputs are sampled at
/// the left endpoint of every step.
pub struct Stepper<'a> {
    model: &'a SystemModel,
    control: &'a Signal,
    disturbance: &'a Signal,
    t: f64,
    x: Vector,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a SystemModel, x0: Vector, control: &'a Signal, disturbance: &'a Signal) -> Result<Self> {
        x0.check_dim(model.state_dim())?;
        if !x0.is_finite() {
            return Err(Error::Integration { last_valid_time: 0.0 });
        }
        if control.dim() != model.control_dim() {
            return Err(Error::DimensionMismatch { expected: model.control_dim(), got: control.dim() });
        }
        if disturbance.dim() != model.disturbance_dim() {
            return Err(Error::DimensionMismatch { expected: model.disturbance_dim(), got: disturbance.dim() });
        }
        Ok(Stepper { model, control, disturbance, t: 0.0, x: x0 })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &Vector {
        &self.x
    }

    /// Steps by `dt` and sets the clock to `t_next` (which should equal
    /// `time() + dt` up to rounding).
    pub fn advance_to(&mut self, t_next: f64, dt: f64) -> Result<&Vector> {
        let u = self.control.at(self.t);
        let d = self.disturbance.at(self.t);
        let next = self
            .model
            .rk4_step(&self.x, u, d, dt)
            .map_err(|_| Error::Integration { last_valid_time: self.t })?;
        if !next.is_finite() {
            return Err(Error::Integration { last_valid_time: self.t });
        }
        self.x = next;
        self.t = t_next;
        Ok(&self.x)
    }
}

/// Number of grid steps to reach `horizon` with step `h`; the last step may
/// be shorter.
pub fn step_count(horizon: f64, h: f64) -> usize {
    ((horizon / h) - 1e-9).ceil().max(0.0) as usize
}

/// Integrates `ẋ = f(x, u(t), d(t))` from `x0` over `[0, horizon]` with fixed
/// step `h`, shortening the final step to land on `horizon`.
pub fn simulate(model: &SystemModel, x0: &Vector, control: &Signal, disturbance: &Signal, horizon: f64, h: f64) -> Result<Trajectory> {
    if !(h > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("need h > 0 and T ≥ 0, got h = {h}, T = {horizon}")));
    }
    let mut stepper = Stepper::new(model, x0.clone(), control, disturbance)?;
    let steps = step_count(horizon, h);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    for k in 1..=steps {
        let t_next = if k == steps { horizon } else { k as f64 * h };
        let dt = t_next - stepper.time();
        states.push(stepper.advance_to(t_next, dt)?.clone());
        times.push(t_next);
    }
    Ok(Trajectory { times, states, control: control.clone(), disturbance: disturbance.clone() })
}

/// Sampled lower estimate of the Lipschitz constant of `f` in `x` over
/// `region × U × D`, multiplied by `safety_factor`.
pub fn estimate_lipschitz(model: &SystemModel, region: &BoxRegion, samples: usize, safety_factor: f64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    region.check_same_dim(&BoxRegion::point(Vector::zeros(model.state_dim())))?;
    region.require_volume()?;
    let mut rng = ChaCha8Rng::seed_from_u64(LIPSCHITZ_SEED);
    let mut best: f64 = 0.0;
    for s in 0..samples {
        let x1 = region.sample(&mut rng);
        // alternate far pairs with close pairs, which probe local slopes
        let x2 = if s % 2 == 0 {
            region.sample(&mut rng)
        } else {
            let jitter: Vec<f64> = (0..x1.dim())
                .map(|i| x1[i] + 1e-3 * region.extent(i) * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            region.clamp(&Vector::from(jitter))
        };
        let dist = x1.distance(&x2);
        if dist == 0.0 {
            continue;
        }
        let u = model.controls().sample(&mut rng);
        let d = model.disturbances().sample(&mut rng);
        let f1 = model.eval(&x1, &u, &d)?;
        let f2 = model.eval(&x2, &u, &d)?;
        best = best.max(f1.distance(&f2) / dist);
    }
    Ok(best * safety_factor)
}

const LIPSCHITZ_SEED: u64 = 0x1a5c;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn decay() -> SystemModel {
        let empty = BoxRegion::point(Vector::zeros(0));
        SystemModel::new("decay", 1, empty.clone(), empty, |x, _, _, dx| dx[0] = -x[0]).unwrap()
    }

    fn none() -> Signal {
        Signal::constant(Vector::zeros(0))
    }

    fn tanks() -> SystemModel {
        models::coupled_tanks(&models::TankParameters::default()).unwrap()
    }

    #[test]
    fn constant_signal() {
        let s = Signal::constant(Vector::from([0.0, 0.0]));
        assert_eq!(s.eval(17.3).unwrap(), Vector::from([0.0, 0.0]));
        assert!(matches!(s.eval(-1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn piecewise_is_right_continuous() {
        let s = Signal::piecewise(vec![0.0, 1.0, 2.5], vec![Vector::from([0.0]), Vector::from([1.0]), Vector::from([2.0])]).unwrap();
        assert_eq!(s.at(0.0)[0], 0.0);
        assert_eq!(s.at(0.999)[0], 0.0);
        assert_eq!(s.at(1.0)[0], 1.0);
        assert_eq!(s.at(2.5)[0], 2.0);
        assert_eq!(s.at(100.0)[0], 2.0);
        assert!(Signal::piecewise(vec![0.0, 0.0], vec![Vector::from([0.0]), Vector::from([1.0])]).is_err());
        assert!(Signal::piecewise(vec![0.5], vec![Vector::from([0.0])]).is_err());
    }

    /// Base signal whose value encodes the time it was sampled at (to 0.5 s).
    fn ramp() -> Signal {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let values = times.iter().map(|t| Vector::from([*t])).collect();
        Signal::piecewise(times, values).unwrap()
    }

    #[test]
    fn periodic_extension_arithmetic() {
        let s = Signal::periodic(ramp(), 10.0, 4.0).unwrap();
        // ⌈(11 − 10)/4⌉ = 1, 11 − 4 = 7
        assert_eq!(s.eval(11.0).unwrap()[0], 7.0);
        assert_eq!(s.eval(10.0).unwrap()[0], 10.0);
        // ⌈(14 − 10)/4⌉ = 1, 14 − 4 = 10
        assert_eq!(s.eval(14.0).unwrap()[0], 10.0);
        // ⌈(14.5 − 10)/4⌉ = 2, 14.5 − 8 = 6.5
        assert_eq!(s.eval(14.5).unwrap()[0], 6.5);
        assert!(Signal::periodic(ramp(), 10.0, 0.0).is_err());
        assert!(Signal::periodic(ramp(), 10.0, 11.0).is_err());
    }

    #[test]
    fn shifted_signal() {
        let s = Signal::shifted(ramp(), 2.0);
        assert_eq!(s.at(1.0)[0], 3.0);
        let c = Signal::shifted(Signal::constant(Vector::from([1.0])), 3.0);
        assert!(matches!(c, Signal::Constant { .. }));
    }

    #[test]
    fn tanks_equilibrium_at_empty() {
        let m = tanks();
        let u = Signal::constant(Vector::from([0.0, 0.0]));
        let d = Signal::constant(Vector::from([0.0]));
        let traj = simulate(&m, &Vector::from([0.0, 0.0]), &u, &d, 10.0, 0.01).unwrap();
        assert_eq!(traj.states.len(), 1001);
        assert!(traj.states.iter().all(|x| x[0] == 0.0 && x[1] == 0.0));
    }

    #[test]
    fn tanks_first_tank_drains() {
        let m = tanks();
        let u = Signal::constant(Vector::from([0.0, 0.0]));
        let d = Signal::constant(Vector::from([0.0]));
        let traj = simulate(&m, &Vector::from([30.0, 18.0]), &u, &d, 2.0, 0.01).unwrap();
        assert!(traj.states.windows(2).all(|w| w[1][0] < w[0][0]));
    }

    #[test]
    fn decay_matches_exponential() {
        let traj = simulate(&decay(), &Vector::from([1.0]), &none(), &none(), 1.0, 0.01).unwrap();
        assert!((traj.end()[0] - (-1f64).exp()).abs() < 1e-6);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn final_step_lands_on_horizon() {
        let traj = simulate(&decay(), &Vector::from([1.0]), &none(), &none(), 0.35, 0.1).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 0.35);
        assert!((traj.end()[0] - (-0.35f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let traj = simulate(&decay(), &Vector::from([1.0]), &none(), &none(), 1.0, h).unwrap();
            (traj.end()[0] - (-1f64).exp()).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
        }
    }

    #[test]
    fn semigroup_property() {
        let m = tanks();
        let h = 0.01;
        let base = ramp_control();
        let d = Signal::constant(Vector::from([-5.0]));
        let x0 = Vector::from([25.0, 12.0]);
        let (t1, t2) = (1.5, 2.5);
        let whole = simulate(&m, &x0, &base, &d, t1 + t2, h).unwrap();
        let first = simulate(&m, &x0, &base, &d, t1, h).unwrap();
        let second = simulate(&m, first.end(), &Signal::shifted(base.clone(), t1), &d, t2, h).unwrap();
        let tol = 10.0 * h.powi(4) * (t1 + t2);
        for i in 0..2 {
            assert!((whole.end()[i] - second.end()[i]).abs() <= tol);
        }
    }

    fn ramp_control() -> Signal {
        Signal::piecewise(
            vec![0.0, 0.5, 2.0, 3.0],
            vec![Vector::from([0.0, 3.0]), Vector::from([5.0, 0.0]), Vector::from([1.0, 1.0]), Vector::from([0.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn blow_up_reports_last_valid_time() {
        let empty = BoxRegion::point(Vector::zeros(0));
        let m = SystemModel::new("blowup", 1, empty.clone(), empty, |x, _, _, dx| dx[0] = x[0] * x[0]).unwrap();
        let err = simulate(&m, &Vector::from([1.0]), &none(), &none(), 5.0, 0.1).unwrap_err();
        match err {
            Error::Integration { last_valid_time } => assert!(last_valid_time > 0.5 && last_valid_time < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let m = tanks();
        let u = Signal::constant(Vector::from([1.0, 2.0]));
        let d = Signal::constant(Vector::from([-3.0]));
        let traj = simulate(&m, &Vector::from([5.0, 5.0]), &u, &d, 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,u1,u2,d1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,5,5,1,2,-3"));
    }

    #[test]
    fn lipschitz_estimates() {
        let unit = BoxRegion::new(Vector::from([0.0]), Vector::from([1.0])).unwrap();
        let lam = estimate_lipschitz(&decay(), &unit, 200, 1.0).unwrap();
        assert!((lam - 1.0).abs() < 1e-9, "{lam}");
        assert!((estimate_lipschitz(&decay(), &unit, 200, 1.5).unwrap() - 1.5).abs() < 1e-9);

        let empty = BoxRegion::point(Vector::zeros(0));
        let flat = SystemModel::new("flat", 1, empty.clone(), empty, |_, _, _, dx| dx[0] = 3.0).unwrap();
        assert_eq!(estimate_lipschitz(&flat, &unit, 50, 1.5).unwrap(), 0.0);

        assert!(estimate_lipschitz(&decay(), &BoxRegion::point(Vector::from([0.5])), 10, 1.5).is_err());
        assert!(estimate_lipschitz(&decay(), &unit, 1, 1.5).is_err());

        // ∂f/∂x grows like c/(2√x): bounded away from 0, large near it
        let m = tanks();
        let away = BoxRegion::new(Vector::from([1.0, 1.0]), Vector::from([30.0, 20.0])).unwrap();
        let touching = BoxRegion::new(Vector::from([0.0, 0.0]), Vector::from([30.0, 20.0])).unwrap();
        let l_away = estimate_lipschitz(&m, &away, 4000, 1.0).unwrap();
        let l_touch = estimate_lipschitz(&m, &touching, 4000, 1.0).unwrap();
        let c = 0.476 * (2.0f64 * 980.0).sqrt() / 4.425;
        assert!(l_away.is_finite() && l_away > 0.0);
        // Frobenius bound on the Jacobian at x = (1, 1): (c/2)·√3
        assert!(l_away <= c * 3f64.sqrt() / 2.0 + 1e-9, "{l_away}");
        assert!(l_touch > 3.0 * l_away, "{l_touch} vs {l_away}");
    }
}
