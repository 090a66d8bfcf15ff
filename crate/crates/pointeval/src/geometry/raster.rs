//! Conservative inner rasterization of implicit sets onto grids.
//!
//! A node is marked only when the closed cell centered at it provably lies
//! within (the closure of) the set, so the marked node set is a compact
//! inner stand-in for the target of a capacity test function. The estimate
//! built on it approaches the true capacity from below as the grid refines.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CellClass, ImplicitSet, PointCd};
use crate::grid::Grid;

/// Membership bit per grid node.
#[derive(Clone, Debug)]
pub struct NodeMask {
    grid: Arc<Grid>,
    bits: Vec<bool>,
    count: usize,
}

impl NodeMask {
    pub fn new(grid: Arc<Grid>, bits: Vec<bool>) -> Result<NodeMask> {
        if bits.len() != grid.len() {
            return Err(Error::Grid(format!(
                "mask bit count {} does not match node count {}",
                bits.len(),
                grid.len()
            )));
        }
        let count = bits.iter().filter(|b| **b).count();
        Ok(NodeMask { grid, bits, count })
    }

    pub fn empty(grid: Arc<Grid>) -> NodeMask {
        let n = grid.len();
        NodeMask { grid, bits: vec![false; n], count: 0 }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_marked(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn marked_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn marked_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }

    /// True when every marked node of `self` is marked in `other`.
    pub fn subset_of(&self, other: &NodeMask) -> bool {
        self.bits.len() == other.bits.len()
            && self
                .bits
                .iter()
                .zip(&other.bits)
                .all(|(a, b)| !*a || *b)
    }
}

/// Mark every node whose closed cell `[node - h/2, node + h/2]` lies within
/// the set. Pure and parallel over nodes.
pub fn rasterize(set: &ImplicitSet, grid: &Arc<Grid>) -> Result<NodeMask> {
    if set.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: grid.dim() });
    }
    let (set_lo, set_hi) = set.bbox();
    let grid_hi = grid.hi();
    if set.is_bounded() {
        let covers = set_lo.iter().zip(grid.lo()).all(|(s, g)| g <= s)
            && set_hi.iter().zip(&grid_hi).all(|(s, g)| s <= g);
        if !covers {
            return Err(Error::GridCoverage(format!(
                "set bbox [{set_lo:?}, {set_hi:?}] exceeds grid box [{:?}, {grid_hi:?}]",
                grid.lo()
            )));
        }
    }
    let dim = grid.dim();
    let shape = grid.shape().to_vec();
    let half = 0.5 * grid.spacing();
    let mut bits = vec![false; grid.len()];
    bits.par_chunks_mut(4096).enumerate().for_each(|(b, chunk)| {
        let mut multi = vec![0usize; dim];
        let mut coords = vec![0.0; dim];
        let mut blo = vec![0.0; dim];
        let mut bhi = vec![0.0; dim];
        grid.multi_index(b * 4096, &mut multi);
        for (k, bit) in chunk.iter_mut().enumerate() {
            if k > 0 {
                for a in (0..dim).rev() {
                    multi[a] += 1;
                    if multi[a] < shape[a] {
                        break;
                    }
                    multi[a] = 0;
                }
            }
            grid.node_into(&multi, &mut coords);
            for a in 0..dim {
                blo[a] = coords[a] - half;
                bhi[a] = coords[a] + half;
            }
            *bit = set.classify_cell(&blo, &bhi) == CellClass::Inside;
        }
    });
    NodeMask::new(grid.clone(), bits)
}

/// Best-effort nonemptiness probe: tests primitive anchor points, the bbox
/// center, and a deterministic lattice of samples inside the bounding box.
/// A `false` answer is not a proof of emptiness.
pub fn probably_nonempty(set: &ImplicitSet) -> bool {
    for p in set.anchor_points() {
        if let Ok(point) = PointCd::new(p) {
            if set.contains(&point).unwrap_or(false) {
                return true;
            }
        }
    }
    if !set.is_bounded() {
        return true;
    }
    let (lo, hi) = set.bbox();
    let dim = set.dim();
    if lo.iter().zip(hi).any(|(l, u)| u <= l) {
        return false;
    }
    // 9^dim lattice capped to ~7k probes for dim 4
    let per_axis: usize = if dim <= 2 { 33 } else { 9 };
    let total = per_axis.pow(dim as u32);
    let mut multi = vec![0usize; dim];
    for idx in 0..total {
        let mut rem = idx;
        for a in 0..dim {
            multi[a] = rem % per_axis;
            rem /= per_axis;
        }
        let coords: Vec<f64> = multi
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&i, (l, u))| l + (u - l) * (i as f64 + 0.5) / per_axis as f64)
            .collect();
        if let Ok(point) = PointCd::new(coords) {
            if set.contains(&point).unwrap_or(false) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{annulus_shell, make_swiss_cheese, shell_minus_domain};

    #[test]
    fn empty_set_rasterizes_empty() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 0.25).unwrap());
        let mask = rasterize(&ImplicitSet::empty(2), &grid).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn ball_rasterization_matches_corner_rule() {
        let grid = Arc::new(Grid::new(&[-2.0, -2.0], &[2.0, 2.0], 0.125).unwrap());
        let set = ImplicitSet::ball(&PointCd::origin(1), 1.0).unwrap();
        let mask = rasterize(&set, &grid).unwrap();
        let h = grid.spacing();
        for idx in 0..grid.len() {
            let node = grid.node(idx);
            let corner_dist =
                node.iter().map(|c| (c.abs() + 0.5 * h).powi(2)).sum::<f64>().sqrt();
            assert_eq!(mask.is_marked(idx), corner_dist <= 1.0, "node {node:?}");
        }
        assert!(mask.marked_count() > 0);
    }

    #[test]
    fn rasterization_is_monotone_in_radius() {
        let grid = Arc::new(Grid::new(&[-2.0, -2.0], &[2.0, 2.0], 0.25).unwrap());
        let small = ImplicitSet::ball(&PointCd::origin(1), 0.7).unwrap();
        let large = ImplicitSet::ball(&PointCd::origin(1), 1.3).unwrap();
        let m1 = rasterize(&small, &grid).unwrap();
        let m2 = rasterize(&large, &grid).unwrap();
        assert!(m1.subset_of(&m2));
    }

    #[test]
    fn adjacent_shells_share_no_nodes() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 64.0).unwrap());
        let x = PointCd::origin(1);
        let m1 = rasterize(&annulus_shell(&x, 1).unwrap(), &grid).unwrap();
        let m2 = rasterize(&annulus_shell(&x, 2).unwrap(), &grid).unwrap();
        for idx in 0..grid.len() {
            assert!(!(m1.is_marked(idx) && m2.is_marked(idx)));
        }
        assert!(!m1.is_empty());
        assert!(!m2.is_empty());
    }

    #[test]
    fn coarse_grid_misses_tiny_ball_but_probe_sees_it() {
        let x = PointCd::origin(1);
        let u = make_swiss_cheese(&x, |n| f64::exp2(-8.0 * n as f64), 1..=3).unwrap();
        let s3 = shell_minus_domain(&x, 3, &u).unwrap();
        let grid = Arc::new(Grid::cube(x.coords(), 0.25, 1.0 / 64.0).unwrap());
        let mask = rasterize(&s3, &grid).unwrap();
        assert!(mask.is_empty(), "2^-24 ball is far below resolution");
        assert!(probably_nonempty(&s3), "anchor probing finds the removed ball");
    }
}
