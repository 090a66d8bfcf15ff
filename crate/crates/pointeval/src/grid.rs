//! Uniform Cartesian lattices over boxes in R^{2d} and real-valued node data.
//!
//! A [`Grid`] stores a box, one spacing `h` shared by every axis, and the node
//! counts; a [`ScalarField`] is one `f64` per node. All heavy per-node loops
//! run through the deterministic block-parallel helpers in this module so that
//! results are bit-identical regardless of thread count.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logical block length for deterministic parallel reductions.
const BLOCK: usize = 8192;

/// Sum `f` over `0..len` in fixed blocks: each block is summed sequentially,
/// block sums are combined in block order. Deterministic for any thread count.
pub(crate) fn block_sum(len: usize, f: impl Fn(Range<usize>) -> f64 + Sync) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let nblocks = len.div_ceil(BLOCK);
    let partials: Vec<f64> = (0..nblocks)
        .into_par_iter()
        .map(|b| f(b * BLOCK..((b + 1) * BLOCK).min(len)))
        .collect();
    partials.iter().sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    block_sum(a.len(), |r| {
        a[r.clone()]
            .iter()
            .zip(&b[r])
            .map(|(x, y)| x * y)
            .sum::<f64>()
    })
}

/// Uniform lattice over `[lo, hi]` with spacing `h` on every axis.
///
/// The upper corner is snapped outward so each extent is an exact multiple of
/// `h`; nodes sit at `lo + i*h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
}

impl Grid {
    pub fn new(lo: &[f64], hi: &[f64], h: f64) -> Result<Grid> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Grid("box corners must share a nonzero dimension".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Grid(format!("spacing h = {h} must be positive and finite")));
        }
        let mut shape = Vec::with_capacity(lo.len());
        for (a, (&l, &u)) in lo.iter().zip(hi).enumerate() {
            if !(u > l) {
                return Err(Error::Grid(format!("degenerate box on axis {a}: [{l}, {u}]")));
            }
            // ceil with a small tolerance so that exact multiples stay exact
            let n = ((u - l) / h - 1e-9).ceil() as usize + 1;
            if n < 3 {
                return Err(Error::Grid(format!("axis {a} has {n} nodes; at least 3 required")));
            }
            shape.push(n);
        }
        Ok(Grid { lo: lo.to_vec(), h, shape })
    }

    /// Cube `[center - r, center + r]^n`.
    pub fn cube(center: &[f64], r: f64, h: f64) -> Result<Grid> {
        let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
        Grid::new(&lo, &hi, h)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.shape)
            .map(|(&l, &n)| l + self.h * (n - 1) as f64)
            .collect()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1usize; n];
        for a in (0..n - 1).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        let strides = self.strides();
        multi.iter().zip(&strides).map(|(&i, &s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for (a, s) in self.strides().iter().enumerate() {
            out[a] = idx / s;
            idx %= s;
        }
    }

    /// Coordinates of the node with linear index `idx`.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut multi = vec![0usize; self.dim()];
        self.multi_index(idx, &mut multi);
        multi
            .iter()
            .zip(&self.lo)
            .map(|(&i, &l)| l + i as f64 * self.h)
            .collect()
    }

    pub fn node_into(&self, multi: &[usize], out: &mut [f64]) {
        for (a, (&i, &l)) in multi.iter().zip(&self.lo).enumerate() {
            out[a] = l + i as f64 * self.h;
        }
    }

    /// Number of cells (one per node in each axis except the last node).
    pub fn cell_count(&self) -> usize {
        self.shape.iter().map(|&n| n - 1).product()
    }

    pub fn cell_shape(&self) -> Vec<usize> {
        self.shape.iter().map(|&n| n - 1).collect()
    }

    /// True when the node lies on the outermost layer of the box.
    pub fn on_boundary(&self, multi: &[usize]) -> bool {
        multi
            .iter()
            .zip(&self.shape)
            .any(|(&i, &n)| i == 0 || i == n - 1)
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }
}

/// Real values attached to every node of a grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> ScalarField {
        let n = grid.len();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("field values must be finite".into()));
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample `f(node)` at every node.
    pub fn sample(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64 + Sync) -> ScalarField {
        let dim = grid.dim();
        let shape = grid.shape().to_vec();
        let lo = grid.lo().to_vec();
        let h = grid.spacing();
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(BLOCK)
            .enumerate()
            .for_each(|(b, chunk)| {
                let mut multi = vec![0usize; dim];
                let mut coords = vec![0.0; dim];
                let start = b * BLOCK;
                grid.multi_index(start, &mut multi);
                for (k, v) in chunk.iter_mut().enumerate() {
                    if k > 0 {
                        // odometer increment
                        for a in (0..dim).rev() {
                            multi[a] += 1;
                            if multi[a] < shape[a] {
                                break;
                            }
                            multi[a] = 0;
                        }
                    }
                    for a in 0..dim {
                        coords[a] = lo[a] + multi[a] as f64 * h;
                    }
                    *v = f(&coords);
                }
            });
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_snaps_extent_up() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 0.95], 0.25).unwrap();
        assert_eq!(g.shape(), &[5, 5]);
        assert_eq!(g.hi(), vec![1.0, 1.0]);
    }

    #[test]
    fn node_roundtrip() {
        let g = Grid::new(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0], 0.5).unwrap();
        let idx = g.index(&[2, 1, 3]);
        let mut multi = [0usize; 3];
        g.multi_index(idx, &mut multi);
        assert_eq!(multi, [2, 1, 3]);
        assert_eq!(g.node(idx), vec![0.0, -0.5, 0.5]);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(Grid::new(&[0.0, 0.0], &[1.0, 0.0], 0.25).is_err());
        assert!(Grid::new(&[0.0], &[0.1], 0.25).is_err());
    }

    #[test]
    fn block_sum_matches_sequential() {
        let v: Vec<f64> = (0..100_000).map(|i| (i as f64).sin()).collect();
        let par = block_sum(v.len(), |r| v[r].iter().sum::<f64>());
        let seq: f64 = v
            .chunks(BLOCK)
            .map(|c| c.iter().sum::<f64>())
            .sum();
        assert_eq!(par, seq);
    }

    #[test]
    fn sample_fills_coordinates() {
        let g = Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap());
        let f = ScalarField::sample(g.clone(), |x| x[0] + 10.0 * x[1]);
        assert_eq!(f.values()[g.index(&[1, 2])], 0.5 + 10.0);
    }
}
