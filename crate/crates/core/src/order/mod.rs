//! Componentwise order on ℝⁿ and finite-generator representations of
//! lower-closed and upper-closed sets.

mod antichain;
mod lattice;
mod sets;

pub use antichain::Antichain;
pub use lattice::{frontier_gap, hausdorff, CellStatus, Lattice, StatusGrid};
pub use sets::{LowerSet, UpperSet};

use std::fmt;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℝⁿ. Coordinates are always finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Vector(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn splat(n: usize, value: f64) -> Self {
        Vector(vec![value; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self ≤ other` componentwise. Dimensions are assumed equal.
    pub fn is_below(&self, other: &Vector) -> bool {
        self.is_below_with_slack(other, 0.0)
    }

    /// `self_i ≤ other_i + tau` for every coordinate.
    pub fn is_below_with_slack(&self, other: &Vector, tau: f64) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tau)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * k).collect())
    }

    pub fn offset(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|a| a + k).collect())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch { expected, got: self.dim() });
        }
        Ok(())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| v.is_finite()));
        Vector(coords)
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(coords: [f64; N]) -> Self {
        Vector::from(coords.to_vec())
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Componentwise comparison `a ≤ b`.
pub fn leq(a: &Vector, b: &Vector) -> Result<bool> {
    b.check_dim(a.dim())?;
    Ok(a.is_below(b))
}

/// Relaxed comparison `a_i ≤ b_i + tau`.
pub fn leq_with_slack(a: &Vector, b: &Vector, tau: f64) -> Result<bool> {
    b.check_dim(a.dim())?;
    Ok(a.is_below_with_slack(b, tau))
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Vector,
    upper: Vector,
}

impl BoxRegion {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        upper.check_dim(lower.dim())?;
        if let Some(axis) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidBox { axis });
        }
        Ok(BoxRegion { lower, upper })
    }

    /// The degenerate box `{point}`.
    pub fn point(p: Vector) -> Self {
        BoxRegion { lower: p.clone(), upper: p }
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.lower.is_below(x) && x.is_below(&self.upper)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Errors unless every axis has positive extent.
    pub fn require_volume(&self) -> Result<()> {
        match (0..self.dim()).find(|&i| self.extent(i) <= 0.0) {
            Some(axis) => Err(Error::DegenerateBox { axis }),
            None => Ok(()),
        }
    }

    pub fn with_lower(&self, lower: Vector) -> Result<Self> {
        BoxRegion::new(lower, self.upper.clone())
    }

    pub fn with_upper(&self, upper: Vector) -> Result<Self> {
        BoxRegion::new(self.lower.clone(), upper)
    }

    /// Shrinks every axis by `margin` from both ends (clamped at the midpoint).
    pub fn shrink(&self, margin: f64) -> BoxRegion {
        let mut lo = self.lower.clone().into_inner();
        let mut hi = self.upper.clone().into_inner();
        for i in 0..lo.len() {
            let m = margin.min(0.5 * (hi[i] - lo[i]));
            lo[i] += m;
            hi[i] -= m;
        }
        BoxRegion { lower: Vector(lo), upper: Vector(hi) }
    }

    /// Clamps `x` into the box.
    pub fn clamp(&self, x: &Vector) -> Vector {
        Vector(
            x.iter()
                .enumerate()
                .map(|(i, v)| v.clamp(self.lower[i], self.upper[i]))
                .collect(),
        )
    }

    /// Maps a point of the unit cube onto the box.
    pub fn from_unit(&self, unit: &[f64]) -> Vector {
        Vector(
            unit.iter()
                .enumerate()
                .map(|(i, s)| self.lower[i] + s * self.extent(i))
                .collect(),
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let unit: Vec<f64> = (0..self.dim()).map(|_| rng.gen::<f64>()).collect();
        self.from_unit(&unit)
    }
}
