//! Built-in systems: the coupled-tanks benchmark and small analytic models
//! whose flows are known in closed form.

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::order::{BoxRegion, LowerSet, Vector};

/// Physical parameters of the coupled tanks (cm, s, V).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TankParameters {
    /// Tank cross-section (cm²).
    #[serde(rename = "A")]
    pub tank_area: f64,
    /// Orifice cross-section (cm²).
    #[serde(rename = "a")]
    pub orifice_area: f64,
    /// Pump constants (cm³/V/s).
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Leakage bounds on tank 2 (cm³/s).
    pub d_min: f64,
    pub d_max: f64,
    pub g: f64,
}

impl Default for TankParameters {
    fn default() -> Self {
        TankParameters {
            tank_area: 4.425,
            orifice_area: 0.476,
            k1: 4.6,
            k2: 2.0,
            u_min: 0.0,
            u_max: 22.0,
            d_min: -20.0,
            d_max: 0.0,
            g: 980.0,
        }
    }
}

impl TankParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.tank_area > 0.0 && self.orifice_area > 0.0 && self.g > 0.0) {
            return Err(Error::InvalidArgument("A, a and g must be positive".into()));
        }
        if self.u_min > self.u_max || self.d_min > self.d_max {
            return Err(Error::InvalidArgument("need u_min ≤ u_max and d_min ≤ d_max".into()));
        }
        Ok(())
    }

    /// Outflow coefficient `a·√(2g)/A`.
    pub fn outflow_coefficient(&self) -> f64 {
        self.orifice_area * (2.0 * self.g).sqrt() / self.tank_area
    }
}

/// `ẋ₁ = −c√x₁ + (K₁/A)u₁`, `ẋ₂ = c(√x₁ − √x₂) + (K₂/A)u₂ + d/A`, with
/// `√` clamped to zero for negative heights.
pub fn coupled_tanks(params: &TankParameters) -> Result<SystemModel> {
    params.validate()?;
    let c = params.outflow_coefficient();
    let b1 = params.k1 / params.tank_area;
    let b2 = params.k2 / params.tank_area;
    let e = 1.0 / params.tank_area;
    let controls = BoxRegion::new(Vector::splat(2, params.u_min), Vector::splat(2, params.u_max))?;
    let disturbances = BoxRegion::new(Vector::from([params.d_min]), Vector::from([params.d_max]))?;
    SystemModel::new("coupled_tanks", 2, controls, disturbances, move |x, u, d, dx| {
        let s1 = x[0].max(0.0).sqrt();
        let s2 = x[1].max(0.0).sqrt();
        dx[0] = -c * s1 + b1 * u[0];
        dx[1] = c * (s1 - s2) + b2 * u[1] + e * d[0];
    })
}

/// `{0 ≤ x₁ ≤ 30, 0 ≤ x₂ ≤ 20}` as `↓{(30, 20)}`.
pub fn tank_safety_set() -> LowerSet {
    LowerSet::from_box(
        BoxRegion::new(Vector::from([0.0, 0.0]), Vector::from([30.0, 20.0])).expect("static bounds"),
    )
}

/// `ẋ = −x + u` with `U = [0, 1]`, `D = {0}`. From `x0` under constant `u`
/// the flow is `u + (x0 − u)e^{−t}`.
pub fn linear_decay() -> SystemModel {
    SystemModel::new(
        "linear_decay",
        1,
        BoxRegion::new(Vector::from([0.0]), Vector::from([1.0])).expect("static bounds"),
        BoxRegion::point(Vector::from([0.0])),
        |x, u, d, dx| dx[0] = -x[0] + u[0] + d[0],
    )
    .expect("static model")
}

/// `ẋ = 1` with no control authority: `x(t) = x0 + t`.
pub fn drift() -> SystemModel {
    SystemModel::new(
        "drift",
        1,
        BoxRegion::point(Vector::from([0.0])),
        BoxRegion::point(Vector::from([0.0])),
        |_, _, d, dx| dx[0] = 1.0 + d[0],
    )
    .expect("static model")
}

pub fn analytic_oracles() -> Vec<SystemModel> {
    vec![linear_decay(), drift()]
}

/// Default constraint set used with each analytic oracle.
pub fn oracle_safety_set(name: &str) -> Option<LowerSet> {
    let upper = match name {
        "linear_decay" => 2.0,
        "drift" => 1.0,
        _ => return None,
    };
    Some(LowerSet::from_box(
        BoxRegion::new(Vector::from([0.0]), Vector::from([upper])).expect("static bounds"),
    ))
}

/// `ẋ₁ = −x₂`, `ẋ₂ = x₁`: not monotone.
pub fn rotation() -> SystemModel {
    let empty = BoxRegion::point(Vector::zeros(0));
    SystemModel::new("rotation", 2, empty.clone(), empty, |x, _, _, dx| {
        dx[0] = -x[1];
        dx[1] = x[0];
    })
    .expect("static model")
}

/// `ẋ_i = −x_i + u_i`, `U = [0, 1]ⁿ`, no disturbance.
pub fn decoupled(n: usize) -> SystemModel {
    SystemModel::new(
        "decoupled",
        n,
        BoxRegion::new(Vector::zeros(n), Vector::splat(n, 1.0)).expect("static bounds"),
        BoxRegion::point(Vector::zeros(0)),
        |x, u, _, dx| {
            for i in 0..x.len() {
                dx[i] = -x[i] + u[i];
            }
        },
    )
    .expect("static model")
}

/// `ẋ_i = u_i`, `U = [0, 1]ⁿ`, no disturbance.
pub fn integrator(n: usize) -> SystemModel {
    SystemModel::new(
        "integrator",
        n,
        BoxRegion::new(Vector::zeros(n), Vector::splat(n, 1.0)).expect("static bounds"),
        BoxRegion::point(Vector::zeros(0)),
        |_, u, _, dx| dx.copy_from_slice(u),
    )
    .expect("static model")
}

/// Looks up a model by its configuration name.
pub fn by_name(name: &str, tank_params: Option<&TankParameters>) -> Result<(SystemModel, LowerSet)> {
    match name {
        "coupled_tanks" => {
            let params = tank_params.cloned().unwrap_or_default();
            Ok((coupled_tanks(&params)?, tank_safety_set()))
        }
        "linear_decay" => Ok((linear_decay(), oracle_safety_set(name).expect("known oracle"))),
        "drift" => Ok((drift(), oracle_safety_set(name).expect("known oracle"))),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, Signal};

    #[test]
    fn table_parameters() {
        let p = TankParameters::default();
        assert_eq!((p.tank_area, p.orifice_area, p.k1, p.k2), (4.425, 0.476, 4.6, 2.0));
        assert_eq!((p.u_min, p.u_max, p.d_min, p.d_max, p.g), (0.0, 22.0, -20.0, 0.0, 980.0));
        // 0.476 · √1960 / 4.425 = 0.476 · 44.27188724 / 4.425
        assert!((p.outflow_coefficient() - 4.762354424).abs() < 1e-8);
    }

    #[test]
    fn tank_field_values() {
        let m = coupled_tanks(&TankParameters::default()).unwrap();
        assert_eq!(m.eval(&[0.0, 0.0], &[0.0, 0.0], &[0.0]).unwrap(), Vector::from([0.0, 0.0]));
        let c = TankParameters::default().outflow_coefficient();
        let f = m.eval(&[30.0, 18.0], &[0.0, 0.0], &[0.0]).unwrap();
        assert!((f[0] + c * 30f64.sqrt()).abs() < 1e-12);
        assert!((f[1] - c * (30f64.sqrt() - 18f64.sqrt())).abs() < 1e-12);
        // negative heights are clamped rather than producing NaN
        assert!(m.eval(&[-1e-6, -1.0], &[0.0, 0.0], &[-20.0]).unwrap().is_finite());
    }

    #[test]
    fn invalid_parameters() {
        let p = TankParameters { u_min: 5.0, u_max: 1.0, ..Default::default() };
        assert!(coupled_tanks(&p).is_err());
        let p = TankParameters { tank_area: 0.0, ..Default::default() };
        assert!(coupled_tanks(&p).is_err());
    }

    #[test]
    fn safety_set() {
        let x = tank_safety_set();
        assert!(x.contains(&Vector::from([30.0, 20.0])));
        assert!(!x.contains(&Vector::from([30.1, 0.0])));
        assert!(x.contains(&Vector::from([0.0, 0.0])));
        assert_eq!(x.generators().points(), &[Vector::from([30.0, 20.0])]);
        assert_eq!(x.ambient().lower(), &Vector::from([0.0, 0.0]));
    }

    #[test]
    fn full_pump_flow_is_bounded() {
        let m = coupled_tanks(&TankParameters::default()).unwrap();
        let u = Signal::constant(Vector::from([22.0, 22.0]));
        let d = Signal::constant(Vector::from([0.0]));
        let traj = simulate(&m, &Vector::from([0.0, 0.0]), &u, &d, 500.0, 0.01).unwrap();
        // equilibrium: c√x₁ = (K₁/A)u₁ and c(√x₂ − √x₁) = (K₂/A)u₂
        let p = TankParameters::default();
        let c = p.outflow_coefficient();
        let s1 = p.k1 * 22.0 / p.tank_area / c;
        let s2 = s1 + p.k2 * 22.0 / p.tank_area / c;
        let end = traj.end();
        assert!((end[0] - s1 * s1).abs() < 1e-3, "{end}");
        assert!((end[1] - s2 * s2).abs() < 1e-3, "{end}");
    }

    #[test]
    fn analytic_flows() {
        let none = Signal::constant(Vector::from([0.0]));
        let decay = linear_decay();
        let traj = simulate(&decay, &Vector::from([1.0]), &none, &none, 2.0, 0.01).unwrap();
        assert!((traj.end()[0] - (-2f64).exp()).abs() < 1e-8);
        let one = Signal::constant(Vector::from([1.0]));
        let traj = simulate(&decay, &Vector::from([1.0]), &one, &none, 5.0, 0.01).unwrap();
        assert!((traj.end()[0] - 1.0).abs() < 1e-12);

        let traj = simulate(&drift(), &Vector::from([0.0]), &none, &none, 3.0, 0.01).unwrap();
        assert!((traj.end()[0] - 3.0).abs() < 1e-9);
        assert_eq!(analytic_oracles().len(), 2);
    }

    #[test]
    fn lookup_by_name() {
        assert!(by_name("coupled_tanks", None).is_ok());
        assert_eq!(by_name("drift", None).unwrap().1.generators().points(), &[Vector::from([1.0])]);
        assert!(matches!(by_name("thermal", None), Err(Error::UnknownModel(_))));
    }
}
