//! Uniform candidate lattice over a box and the per-cell classification grid
//! used to measure the gap between a lower set and an upper set.

use serde::{Deserialize, Serialize};

use super::{BoxRegion, LowerSet, UpperSet, Vector};
use crate::error::{Error, Result};

const INDEX_EPS: f64 = 1e-9;

/// Points `lower + k·resolution` (per axis) inside a box.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    origin: Vector,
    resolution: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(region: &BoxRegion, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!("lattice resolution must be positive, got {resolution}")));
        }
        let counts: Vec<usize> = (0..region.dim())
            .map(|i| (region.extent(i) / resolution + INDEX_EPS).floor() as usize + 1)
            .collect();
        let mut strides = vec![1; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        Ok(Lattice { origin: region.lower().clone(), resolution, counts, strides })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (axis, stride) in self.strides.iter().enumerate() {
            idx[axis] = linear / stride;
            linear %= stride;
        }
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vector {
        Vector::from(
            idx.iter()
                .enumerate()
                .map(|(i, &k)| self.origin[i] + k as f64 * self.resolution)
                .collect::<Vec<_>>(),
        )
    }

    pub fn point_at(&self, linear: usize) -> Vector {
        self.point(&self.multi(linear))
    }

    /// Neighbour of `linear` one step along `axis`, if it exists.
    pub fn step(&self, linear: usize, axis: usize, up: bool) -> Option<usize> {
        let k = (linear / self.strides[axis]) % self.counts[axis];
        if up {
            (k + 1 < self.counts[axis]).then(|| linear + self.strides[axis])
        } else {
            (k > 0).then(|| linear - self.strides[axis])
        }
    }

    /// Largest index per axis whose coordinate is `≤ x_i`, or `None` when `x`
    /// lies below the lattice on some axis.
    pub fn floor_index(&self, x: &Vector) -> Option<Vec<usize>> {
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let k = ((x[i] - self.origin[i]) / self.resolution + INDEX_EPS).floor();
            if k < 0.0 {
                return None;
            }
            hi.push((k as usize).min(self.counts[i] - 1));
        }
        Some(hi)
    }

    /// Smallest index per axis whose coordinate is `≥ x_i`.
    pub fn ceil_index(&self, x: &Vector) -> Option<Vec<usize>> {
        let mut lo = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let k = ((x[i] - self.origin[i]) / self.resolution - INDEX_EPS).ceil().max(0.0) as usize;
            if k >= self.counts[i] {
                return None;
            }
            lo.push(k);
        }
        Some(lo)
    }

    /// Visits every linear index in the index box `[lo, hi]`.
    pub fn for_each_in(&self, lo: &[usize], hi: &[usize], mut f: impl FnMut(usize) -> Result<()>) -> Result<()> {
        let n = self.dim();
        let mut idx = lo.to_vec();
        loop {
            f(self.linear(&idx))?;
            let mut axis = n;
            loop {
                if axis == 0 {
                    return Ok(());
                }
                axis -= 1;
                if idx[axis] < hi[axis] {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    /// Lattice point outside the constraint set.
    Outside,
    Unclassified,
    Feasible,
    Unsafe,
    /// Classification attempted but undecided within the horizon.
    Unknown,
}

/// Classification state of every lattice point.
#[derive(Clone, Debug)]
pub struct StatusGrid {
    lattice: Lattice,
    cells: Vec<CellStatus>,
}

impl StatusGrid {
    /// All points of `constraint` start unclassified; the rest are outside.
    pub fn new(constraint: &LowerSet, resolution: f64) -> Result<Self> {
        let lattice = Lattice::new(constraint.ambient(), resolution)?;
        let cells = (0..lattice.len())
            .map(|k| {
                if constraint.contains_with_slack(&lattice.point_at(k), INDEX_EPS) {
                    CellStatus::Unclassified
                } else {
                    CellStatus::Outside
                }
            })
            .collect();
        Ok(StatusGrid { lattice, cells })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn status(&self, linear: usize) -> CellStatus {
        self.cells[linear]
    }

    pub fn cells(&self) -> &[CellStatus] {
        &self.cells
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| **c == status).count()
    }

    /// True when every point of the constraint set is feasible.
    pub fn all_feasible(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, CellStatus::Feasible | CellStatus::Outside))
    }

    pub fn mark_unknown(&mut self, linear: usize) {
        if self.cells[linear] == CellStatus::Unclassified {
            self.cells[linear] = CellStatus::Unknown;
        }
    }

    /// Marks every constraint point `≤ g` feasible. Returns the number of
    /// newly classified points.
    pub fn mark_below(&mut self, g: &Vector) -> Result<usize> {
        let Some(hi) = self.lattice.floor_index(g) else {
            return Ok(0);
        };
        let lo = vec![0; hi.len()];
        self.mark_range(&lo, &hi, CellStatus::Feasible, CellStatus::Unsafe)
    }

    /// Marks every constraint point `≥ h` unsafe.
    pub fn mark_above(&mut self, h: &Vector) -> Result<usize> {
        let Some(lo) = self.lattice.ceil_index(h) else {
            return Ok(0);
        };
        let hi: Vec<usize> = self.lattice.counts.iter().map(|c| c - 1).collect();
        self.mark_range(&lo, &hi, CellStatus::Unsafe, CellStatus::Feasible)
    }

    fn mark_range(&mut self, lo: &[usize], hi: &[usize], to: CellStatus, conflict: CellStatus) -> Result<usize> {
        let mut added = 0;
        let lattice = &self.lattice;
        let cells = &mut self.cells;
        lattice.for_each_in(lo, hi, |k| {
            match cells[k] {
                CellStatus::Outside => {}
                c if c == to => {}
                c if c == conflict => return Err(Error::Overlap(lattice.point_at(k).into_inner())),
                _ => {
                    cells[k] = to;
                    added += 1;
                }
            }
            Ok(())
        })?;
        Ok(added)
    }

    /// Hausdorff distance between the upper frontier of the feasible cells
    /// and the lower frontier of the unsafe cells. Zero when nothing is left
    /// unclassified.
    ///
    /// An empty feasible region is replaced by the lower faces of the
    /// constraint set, an empty unsafe region by its upper faces.
    pub fn gap(&self) -> f64 {
        use CellStatus::*;
        let open = |c: CellStatus| matches!(c, Unclassified | Unknown);
        if !self.cells.iter().any(|c| open(*c)) {
            return 0.0;
        }
        let n = self.lattice.dim();
        let has_f1 = self.cells.contains(&Feasible);
        let has_f2 = self.cells.contains(&Unsafe);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (k, &c) in self.cells.iter().enumerate() {
            if c == Outside {
                continue;
            }
            let ups = (0..n).map(|i| self.lattice.step(k, i, true).map(|j| self.cells[j]));
            let downs = (0..n).map(|i| self.lattice.step(k, i, false).map(|j| self.cells[j]));
            let in_a = if has_f1 {
                c == Feasible && ups.clone().any(|s| matches!(s, Some(s) if s != Feasible && s != Outside))
            } else {
                c != Unsafe && downs.clone().any(|s| s.is_none())
            };
            let in_b = if has_f2 {
                c == Unsafe && downs.clone().any(|s| matches!(s, Some(s) if s != Unsafe && s != Outside))
            } else {
                c != Feasible && ups.clone().any(|s| matches!(s, None | Some(Outside)))
            };
            if in_a {
                a.push(self.lattice.point_at(k));
            }
            if in_b {
                b.push(self.lattice.point_at(k));
            }
        }
        hausdorff(&a, &b)
    }
}

/// Euclidean Hausdorff distance between two finite point sets. Infinite when
/// exactly one of them is empty.
pub fn hausdorff(a: &[Vector], b: &[Vector]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |from: &[Vector], to: &[Vector]| {
        from.iter()
            .map(|p| to.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Gap between a feasible lower set and an unsafe upper set, sampled on a
/// lattice of spacing `resolution` over `region`.
pub fn frontier_gap(f1: &LowerSet, f2: &UpperSet, region: &BoxRegion, resolution: f64) -> Result<f64> {
    let lattice = Lattice::new(region, resolution)?;
    let mut cells = Vec::with_capacity(lattice.len());
    for k in 0..lattice.len() {
        let p = lattice.point_at(k);
        let status = match (f1.contains(&p), f2.contains(&p)) {
            (true, true) => return Err(Error::Overlap(p.into_inner())),
            (true, false) => CellStatus::Feasible,
            (false, true) => CellStatus::Unsafe,
            (false, false) => CellStatus::Unclassified,
        };
        cells.push(status);
    }
    Ok(StatusGrid { lattice, cells }.gap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::Antichain;

    fn v(x: f64, y: f64) -> Vector {
        Vector::from([x, y])
    }

    fn tank_box() -> BoxRegion {
        BoxRegion::new(v(0.0, 0.0), v(30.0, 20.0)).unwrap()
    }

    fn lower(points: &[Vector]) -> LowerSet {
        LowerSet::new(Antichain::maximal_of(points.to_vec()), tank_box())
    }

    fn upper(points: &[Vector]) -> UpperSet {
        UpperSet::new(Antichain::minimal_of(points.to_vec()), tank_box())
    }

    #[test]
    fn lattice_indexing() {
        let l = Lattice::new(&tank_box(), 0.5).unwrap();
        assert_eq!(l.counts(), &[61, 41]);
        let k = l.linear(&[3, 7]);
        assert_eq!(l.multi(k), vec![3, 7]);
        assert_eq!(l.point(&[3, 7]), v(1.5, 3.5));
        assert_eq!(l.step(k, 0, true), Some(l.linear(&[4, 7])));
        assert_eq!(l.step(l.linear(&[0, 7]), 0, false), None);
        assert_eq!(l.step(l.linear(&[3, 40]), 1, true), None);
    }

    #[test]
    fn full_cover_has_zero_gap() {
        let gap = frontier_gap(&lower(&[v(30.0, 20.0)]), &upper(&[]), &tank_box(), 0.5).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn parallel_frontiers() {
        for g in [1.0, 2.0, 7.5] {
            let gap = frontier_gap(&lower(&[v(10.0, 20.0)]), &upper(&[v(10.0 + g, 0.0)]), &tank_box(), 0.5).unwrap();
            assert!((gap - g).abs() < 1e-12, "g = {g}, gap = {gap}");
        }
    }

    #[test]
    fn adjacent_frontiers_leave_nothing_to_classify() {
        let gap = frontier_gap(&lower(&[v(10.0, 20.0)]), &upper(&[v(10.5, 0.0)]), &tank_box(), 0.5).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn overlap_is_an_error() {
        let err = frontier_gap(&lower(&[v(10.0, 10.0)]), &upper(&[v(5.0, 5.0)]), &tank_box(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Overlap(_)));
    }

    #[test]
    fn corner_frontiers_match_brute_force() {
        let r = 0.5;
        let f1 = lower(&[v(29.0, 19.0)]);
        let f2 = upper(&[v(30.0, 20.0)]);
        let gap = frontier_gap(&f1, &f2, &tank_box(), r).unwrap();

        // Exhaustive double loop over the grid samples, with membership
        // written out coordinate by coordinate.
        let in_f1 = |x: f64, y: f64| x <= 29.0 && y <= 19.0;
        let in_f2 = |x: f64, y: f64| x >= 30.0 && y >= 20.0;
        let (nx, ny) = (61, 41);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = (i as f64 * r, j as f64 * r);
                let right = (i + 1 < nx).then(|| (x + r, y));
                let up = (j + 1 < ny).then(|| (x, y + r));
                let left = (i > 0).then(|| (x - r, y));
                let down = (j > 0).then(|| (x, y - r));
                if in_f1(x, y) && [right, up].iter().flatten().any(|&(p, q)| !in_f1(p, q)) {
                    a.push((x, y));
                }
                if in_f2(x, y) && [left, down].iter().flatten().any(|&(p, q)| !in_f2(p, q)) {
                    b.push((x, y));
                }
            }
        }
        let mut brute: f64 = 0.0;
        for &(x, y) in &a {
            let m = b.iter().map(|&(p, q)| ((x - p).powi(2) + (y - q).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            brute = brute.max(m);
        }
        for &(p, q) in &b {
            let m = a.iter().map(|&(x, y)| ((x - p).powi(2) + (y - q).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            brute = brute.max(m);
        }
        assert_eq!(gap, brute);
        assert!((gap - 901f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_unsafe_set_measures_to_upper_faces() {
        let gap = frontier_gap(&lower(&[v(10.0, 20.0)]), &upper(&[]), &tank_box(), 0.5).unwrap();
        // frontier x = 10 against the unexplored upper faces (x = 30 or y = 20, x > 10)
        assert!((gap - 20.0).abs() < 1e-12, "{gap}");
    }

    #[test]
    fn hausdorff_is_symmetric() {
        let a = vec![v(0.0, 0.0), v(1.0, 3.0)];
        let b = vec![v(2.0, 2.0), v(5.0, 0.0), v(0.0, 4.0)];
        assert_eq!(hausdorff(&a, &b), hausdorff(&b, &a));
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_eq!(hausdorff(&a, &[]), f64::INFINITY);
    }

    #[test]
    fn marking_detects_overlap() {
        let mut grid = StatusGrid::new(&LowerSet::from_box(tank_box()), 1.0).unwrap();
        assert_eq!(grid.mark_above(&v(29.5, 19.5)).unwrap(), 1);
        assert_eq!(grid.mark_below(&v(10.0, 10.0)).unwrap(), 121);
        assert_eq!(grid.mark_below(&v(10.0, 10.0)).unwrap(), 0);
        assert!(grid.mark_below(&v(30.0, 20.0)).is_err());
    }

    #[test]
    fn outside_cells_are_skipped() {
        let x = LowerSet::new(Antichain::maximal_of([v(10.0, 20.0), v(30.0, 5.0)]), tank_box());
        let mut grid = StatusGrid::new(&x, 1.0).unwrap();
        assert_eq!(grid.count(CellStatus::Outside), 31 * 21 - (11 * 21 + 20 * 6));
        grid.mark_below(&v(30.0, 20.0)).unwrap();
        assert!(grid.all_feasible());
        assert_eq!(grid.gap(), 0.0);
    }
}
