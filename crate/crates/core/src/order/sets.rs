use serde::{Deserialize, Serialize};

use super::{Antichain, BoxRegion, Vector};
use crate::error::Result;

/// `↓generators ∩ ambient ∩ ℝⁿ₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerSet {
    generators: Antichain,
    ambient: BoxRegion,
}

impl LowerSet {
    pub fn new(generators: Antichain, ambient: BoxRegion) -> Self {
        LowerSet { generators, ambient }
    }

    /// `↓{upper}` inside `[lower, upper]`.
    pub fn from_box(ambient: BoxRegion) -> Self {
        LowerSet {
            generators: Antichain::maximal_of([ambient.upper().clone()]),
            ambient,
        }
    }

    pub fn empty(ambient: BoxRegion) -> Self {
        LowerSet { generators: Antichain::new(), ambient }
    }

    pub fn generators(&self) -> &Antichain {
        &self.generators
    }

    pub fn ambient(&self) -> &BoxRegion {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn member(&self, x: &Vector) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.contains(x))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.contains_with_slack(x, 0.0)
    }

    pub fn contains_with_slack(&self, x: &Vector, tau: f64) -> bool {
        in_orthant_box(&self.ambient, x, tau) && self.generators.dominates(x, tau)
    }

    /// Membership in `↓generators` alone, ignoring the ambient box. This is
    /// the test used for trajectories: a lower-closed constraint can only be
    /// left through its upper frontier.
    pub fn covers(&self, x: &Vector, tau: f64) -> bool {
        self.generators.dominates(x, tau)
    }

    /// Largest `r` such that the sup-norm ball of radius `r` around `x` stays
    /// in `↓generators` (negative when `x` is outside).
    pub fn depth(&self, x: &Vector) -> f64 {
        self.generators
            .iter()
            .map(|g| g.iter().zip(x.iter()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn insert(&mut self, x: Vector) -> bool {
        self.generators.insert_maximal(x)
    }
}

/// `↑generators ∩ ambient`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperSet {
    generators: Antichain,
    ambient: BoxRegion,
}

impl UpperSet {
    pub fn new(generators: Antichain, ambient: BoxRegion) -> Self {
        UpperSet { generators, ambient }
    }

    pub fn empty(ambient: BoxRegion) -> Self {
        UpperSet { generators: Antichain::new(), ambient }
    }

    pub fn generators(&self) -> &Antichain {
        &self.generators
    }

    pub fn ambient(&self) -> &BoxRegion {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn member(&self, x: &Vector) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.contains(x))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.contains_with_slack(x, 0.0)
    }

    pub fn contains_with_slack(&self, x: &Vector, tau: f64) -> bool {
        in_orthant_box(&self.ambient, x, tau) && self.generators.is_dominated_by(x, tau)
    }

    pub fn insert(&mut self, x: Vector) -> bool {
        self.generators.insert_minimal(x)
    }
}

fn in_orthant_box(ambient: &BoxRegion, x: &Vector, tau: f64) -> bool {
    (0..x.dim()).all(|i| {
        let lo = ambient.lower()[i].max(0.0);
        x[i] >= lo - tau && x[i] <= ambient.upper()[i] + tau
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64) -> Vector {
        Vector::from([x, y])
    }

    fn tank_box() -> BoxRegion {
        BoxRegion::new(v(0.0, 0.0), v(30.0, 20.0)).unwrap()
    }

    #[test]
    fn lower_membership_examples() {
        let s = LowerSet::from_box(tank_box());
        assert!(s.member(&v(15.0, 10.0)).unwrap());
        assert!(!s.member(&v(31.0, 0.0)).unwrap());
        assert!(s.member(&Vector::from([1.0])).is_err());

        let s = LowerSet::new(Antichain::maximal_of([v(2.0, 0.0), v(0.0, 2.0)]), tank_box());
        // brute force over the two generators
        let x = v(1.0, 1.0);
        let expected = s.generators().iter().any(|g| x[0] <= g[0] && x[1] <= g[1]);
        assert_eq!(s.member(&x).unwrap(), expected);
        assert!(!expected);
    }

    #[test]
    fn negative_coordinates_are_outside_the_orthant() {
        let s = LowerSet::from_box(tank_box());
        assert!(!s.contains(&v(-0.5, 1.0)));
        assert!(s.covers(&v(-0.5, 1.0), 0.0));
    }

    #[test]
    fn upper_membership_examples() {
        let s = UpperSet::new(Antichain::minimal_of([v(10.0, 10.0)]), tank_box());
        assert!(s.member(&v(12.0, 15.0)).unwrap());
        assert!(!s.member(&v(9.0, 15.0)).unwrap());
        let empty = UpperSet::empty(tank_box());
        assert!(!empty.member(&v(29.0, 19.0)).unwrap());
    }

    #[test]
    fn depth_is_sup_ball_radius() {
        let s = LowerSet::new(Antichain::maximal_of([v(30.0, 20.0), v(40.0, 5.0)]), tank_box());
        assert_eq!(s.depth(&v(29.0, 18.5)), 1.0);
        assert_eq!(s.depth(&v(30.0, 4.0)), 1.0);
        assert!(s.depth(&v(41.0, 0.0)) < 0.0);
    }

    proptest! {
        #[test]
        fn lower_membership_is_downward_closed(
            gens in prop::collection::vec((0.0f64..30.0, 0.0f64..20.0), 1..6),
            x in (0.0f64..30.0, 0.0f64..20.0),
            shrink in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let s = LowerSet::new(
                Antichain::maximal_of(gens.into_iter().map(|(a, b)| v(a, b))),
                tank_box(),
            );
            let x = v(x.0, x.1);
            let y = v(x[0] * shrink.0, x[1] * shrink.1);
            if s.contains(&x) {
                prop_assert!(s.contains(&y));
            }
        }

        #[test]
        fn upper_membership_is_upward_closed(
            gens in prop::collection::vec((0.0f64..30.0, 0.0f64..20.0), 1..6),
            x in (0.0f64..30.0, 0.0f64..20.0),
            grow in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let s = UpperSet::new(
                Antichain::minimal_of(gens.into_iter().map(|(a, b)| v(a, b))),
                tank_box(),
            );
            let x = v(x.0, x.1);
            let y = v(x[0] + grow.0 * (30.0 - x[0]), x[1] + grow.1 * (20.0 - x[1]));
            if s.contains(&x) {
                prop_assert!(s.contains(&y));
            }
        }
    }
}
