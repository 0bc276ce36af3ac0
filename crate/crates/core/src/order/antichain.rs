use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::Vector;
use crate::error::{Error, Result};

/// A finite set of pairwise incomparable points.
///
/// The same type stores the maximal elements of a lower set and the minimal
/// elements of an upper set; which one is meant depends on the insertion
/// routine used to build it. Insertion order is preserved, which keeps CSV
/// exports deterministic.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Antichain {
    points: Vec<Vector>,
}

impl Antichain {
    pub fn new() -> Self {
        Antichain::default()
    }

    /// Builds an antichain from points already known to be incomparable.
    pub fn from_antichain_points(points: Vec<Vector>) -> Result<Self> {
        let chain = Antichain { points };
        chain.check()?;
        Ok(chain)
    }

    /// Maximal elements of `points`.
    pub fn maximal_of<I: IntoIterator<Item = Vector>>(points: I) -> Self {
        let mut chain = Antichain::new();
        for p in points {
            chain.insert_maximal(p);
        }
        chain
    }

    /// Minimal elements of `points`.
    pub fn minimal_of<I: IntoIterator<Item = Vector>>(points: I) -> Self {
        let mut chain = Antichain::new();
        for p in points {
            chain.insert_minimal(p);
        }
        chain
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector> {
        self.points.iter()
    }

    /// Inserts `x` keeping only maximal elements. Returns false when `x` is
    /// already dominated by (or equal to) an existing point.
    pub fn insert_maximal(&mut self, x: Vector) -> bool {
        if self.points.iter().any(|p| x.is_below(p)) {
            return false;
        }
        self.points.retain(|q| !q.is_below(&x));
        self.points.push(x);
        true
    }

    /// Inserts `x` keeping only minimal elements.
    pub fn insert_minimal(&mut self, x: Vector) -> bool {
        if self.points.iter().any(|p| p.is_below(&x)) {
            return false;
        }
        self.points.retain(|q| !x.is_below(q));
        self.points.push(x);
        true
    }

    /// Non-mutating form of [`Antichain::insert_maximal`].
    pub fn with_maximal(&self, x: Vector) -> Antichain {
        let mut next = self.clone();
        next.insert_maximal(x);
        next
    }

    pub fn with_minimal(&self, x: Vector) -> Antichain {
        let mut next = self.clone();
        next.insert_minimal(x);
        next
    }

    /// True when some point `p` satisfies `x ≤ p + tau`.
    pub fn dominates(&self, x: &Vector, tau: f64) -> bool {
        self.points.iter().any(|p| x.is_below_with_slack(p, tau))
    }

    /// True when some point `p` satisfies `p ≤ x + tau`.
    pub fn is_dominated_by(&self, x: &Vector, tau: f64) -> bool {
        self.points.iter().any(|p| p.is_below_with_slack(x, tau))
    }

    pub fn is_antichain(&self) -> bool {
        self.check().is_ok()
    }

    fn check(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                if q.dim() != p.dim() {
                    return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
                }
                if p.is_below(q) || q.is_below(p) {
                    return Err(Error::NotAnAntichain(p.to_vec(), q.to_vec()));
                }
            }
        }
        Ok(())
    }

    /// Writes one row per point with a `x1..xn` header.
    pub fn write_csv<W: Write>(&self, dim: usize, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record((1..=dim).map(|i| format!("x{i}")))?;
        for p in &self.points {
            out.write_record(p.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Parses the layout produced by [`Antichain::write_csv`]. The points
    /// must be pairwise incomparable.
    pub fn read_csv<R: Read>(reader: R) -> Result<Antichain> {
        let mut input = csv::Reader::from_reader(reader);
        let dim = input.headers()?.len();
        let mut points = Vec::new();
        for (row, record) in input.records().enumerate() {
            let record = record?;
            let coords = record
                .iter()
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidArgument(format!("row {}: `{field}`: {e}", row + 2))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let v = Vector::new(coords)?;
            v.check_dim(dim)?;
            points.push(v);
        }
        Antichain::from_antichain_points(points)
    }
}

impl<'a> IntoIterator for &'a Antichain {
    type Item = &'a Vector;
    type IntoIter = std::slice::Iter<'a, Vector>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
