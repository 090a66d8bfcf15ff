//! Empirical lower bound on the evaluation-functional norm.
//!
//! For a family of functions analytic on the closure of U, the ratio
//! `|f(x)| / ||f||_{L^p(U)}` is a lower bound for the norm of f -> f(x);
//! the probe reports the best ratio over the family, with the norm taken as
//! a grid sum over the nodes inside U (so the bound holds up to quadrature
//! error).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImplicitSet, PointCd};
use crate::grid::{block_sum, Grid};
use crate::martinelli::TestFunction;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Best ratio over the family.
    pub value: f64,
    pub best_index: usize,
    pub member_ratios: Vec<f64>,
    pub nodes_in_domain: usize,
    pub grid_h: f64,
}

/// Max over the family of `|f(x)| / (sum_{nodes in U} |f|^p h^{2d})^{1/p}`.
///
/// A member with a non-finite value at some domain node is rejected with its
/// index (its singularity lies inside U).
pub fn evaluation_norm_probe(
    domain: &ImplicitSet,
    x: &PointCd,
    p: f64,
    family: &[TestFunction],
    grid: &Arc<Grid>,
) -> Result<ProbeResult> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Config(format!("p = {p} must be at least 1")));
    }
    if family.is_empty() {
        return Err(Error::Config("probe family is empty".into()));
    }
    if grid.dim() != domain.dim() || x.real_dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: grid.dim() });
    }

    // membership once, reused for every member
    let dim = grid.dim();
    let nodes: Vec<usize> = (0..grid.len())
        .into_par_iter()
        .filter(|&idx| {
            let coords = grid.node(idx);
            PointCd::new(coords)
                .ok()
                .map(|pt| domain.contains(&pt).unwrap_or(false))
                .unwrap_or(false)
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::Config(
            "no grid nodes fall inside the domain; refine the probe grid".into(),
        ));
    }
    let hn = grid.spacing().powi(dim as i32);

    let mut member_ratios = Vec::with_capacity(family.len());
    for (index, f) in family.iter().enumerate() {
        let norm_p = block_sum(nodes.len(), |r| {
            let mut acc = 0.0;
            for &idx in &nodes[r] {
                let pt = PointCd::new(grid.node(idx)).expect("grid nodes are finite");
                let v = f.eval(&pt).norm();
                acc += v.powf(p);
            }
            acc
        }) * hn;
        if !norm_p.is_finite() {
            return Err(Error::SingularFamilyMember { index });
        }
        let fx = f.eval(x).norm();
        member_ratios.push(if norm_p > 0.0 { fx / norm_p.powf(1.0 / p) } else { f64::INFINITY });
    }
    let (best_index, value) = member_ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, v)| (i, *v))
        .unwrap();
    Ok(ProbeResult {
        value,
        best_index,
        member_ratios,
        nodes_in_domain: nodes.len(),
        grid_h: grid.spacing(),
    })
}
