//! Parameterized hypersurface patches with product quadrature rules.
//!
//! A chart maps a parameter box in R^{2d-1} to R^{2d}; spheres use
//! hyperspherical angles, box surfaces one affine patch per face. Charts
//! supply analytic Jacobians, so pullback determinants lose no accuracy to
//! differencing. Orientation is never derived from the chart: surfaces are
//! calibrated once by requiring the kernel integral at an interior point to
//! be +1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCd;
use crate::martinelli::gl::scaled_rule;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Chart {
    /// Hyperspherical chart of the sphere `|x - center| = radius` in R^{2d}.
    /// Angles t_1..t_{2d-2} range over [0, pi], the last over [0, 2 pi]; for
    /// d = 1 the single angle covers the full circle.
    Sphere { center: Vec<f64>, radius: f64 },
    /// One face of an axis-aligned box: `x[axis]` pinned to lo or hi, the
    /// remaining coordinates are the parameters.
    CuboidFace { lo: Vec<f64>, hi: Vec<f64>, axis: usize, upper: bool },
}

impl Chart {
    pub fn real_dim(&self) -> usize {
        match self {
            Chart::Sphere { center, .. } => center.len(),
            Chart::CuboidFace { lo, .. } => lo.len(),
        }
    }

    pub fn param_dim(&self) -> usize {
        self.real_dim() - 1
    }

    pub fn param_box(&self) -> Vec<(f64, f64)> {
        match self {
            Chart::Sphere { center, .. } => {
                let m = center.len() - 1;
                (0..m)
                    .map(|a| {
                        if a + 1 == m {
                            (0.0, std::f64::consts::TAU)
                        } else {
                            (0.0, std::f64::consts::PI)
                        }
                    })
                    .collect()
            }
            Chart::CuboidFace { lo, hi, axis, .. } => lo
                .iter()
                .zip(hi)
                .enumerate()
                .filter(|(a, _)| a != axis)
                .map(|(_, (l, u))| (*l, *u))
                .collect(),
        }
    }

    /// Point and Jacobian (row-major `real_dim x param_dim`, entry
    /// `jac[k * param_dim + j] = d x_k / d t_j`).
    pub fn eval(&self, t: &[f64], point: &mut [f64], jac: &mut [f64]) {
        match self {
            Chart::Sphere { center, radius } => {
                let n = center.len();
                let m = n - 1;
                let sin: Vec<f64> = t.iter().map(|a| a.sin()).collect();
                let cos: Vec<f64> = t.iter().map(|a| a.cos()).collect();
                // x_k = r cos t_k prod_{i<k} sin t_i (k < m), x_m = r prod sin
                let mut prefix = *radius;
                for k in 0..m {
                    point[k] = center[k] + prefix * cos[k];
                    prefix *= sin[k];
                }
                point[m] = center[m] + prefix;
                // x_k = r cos t_k prod_{i<k} sin t_i, x_m = r prod_{i<m} sin t_i
                for k in 0..n {
                    let limit = if k == m { m } else { k };
                    for j in 0..m {
                        let v = &mut jac[k * m + j];
                        if j > limit || (k < m && j > k) {
                            *v = 0.0;
                            continue;
                        }
                        // r * prod_{i < limit, i != j} sin t_i (cos t_j inserted for i = j)
                        let mut p = *radius;
                        for (i, s) in sin.iter().enumerate().take(limit) {
                            p *= if i == j { cos[j] } else { *s };
                        }
                        *v = if k == m {
                            p
                        } else if j == k {
                            -p * sin[k]
                        } else {
                            p * cos[k]
                        };
                    }
                }
            }
            Chart::CuboidFace { lo, hi, axis, upper } => {
                let n = lo.len();
                let m = n - 1;
                let mut ti = 0;
                for k in 0..n {
                    if k == *axis {
                        point[k] = if *upper { hi[k] } else { lo[k] };
                    } else {
                        point[k] = t[ti];
                        ti += 1;
                    }
                }
                for v in jac.iter_mut() {
                    *v = 0.0;
                }
                let mut tj = 0;
                for k in 0..n {
                    if k != *axis {
                        jac[k * m + tj] = 1.0;
                        tj += 1;
                    }
                }
            }
        }
    }
}

/// A chart with per-axis quadrature orders and an orientation sign.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub chart: Chart,
    pub orders: Vec<usize>,
    pub orientation: f64,
}

impl SurfacePatch {
    pub fn new(chart: Chart, order: usize) -> SurfacePatch {
        let m = chart.param_dim();
        SurfacePatch { chart, orders: vec![order; m], orientation: 1.0 }
    }

    /// Per-axis (nodes, weights) on the parameter box.
    pub fn rules(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.chart
            .param_box()
            .iter()
            .zip(&self.orders)
            .map(|(&(a, b), &order)| scaled_rule(order, a, b))
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.orders.iter().product()
    }

    /// Crude chart-scale estimate of the quadrature node spacing, from the
    /// Jacobian at the parameter-box midpoint.
    pub fn node_spacing(&self) -> f64 {
        let n = self.chart.real_dim();
        let m = self.chart.param_dim();
        let bx = self.chart.param_box();
        let mid: Vec<f64> = bx.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        let mut point = vec![0.0; n];
        let mut jac = vec![0.0; n * m];
        self.chart.eval(&mid, &mut point, &mut jac);
        let mut spacing = 0.0f64;
        for j in 0..m {
            let col: f64 = (0..n).map(|k| jac[k * m + j].powi(2)).sum::<f64>().sqrt();
            let dt = (bx[j].1 - bx[j].0) / self.orders[j] as f64;
            spacing = spacing.max(col * dt);
        }
        spacing
    }
}

/// Closed sphere surface as a single calibrated patch.
pub fn sphere_surface(center: &PointCd, radius: f64, order: usize) -> Result<Vec<SurfacePatch>> {
    if !(radius > 0.0) {
        return Err(Error::Geometry(format!("sphere radius {radius} must be positive")));
    }
    let chart = Chart::Sphere { center: center.coords().to_vec(), radius };
    let mut patches = vec![SurfacePatch::new(chart, order)];
    calibrate_orientation(&mut patches, center)?;
    Ok(patches)
}

/// Closed axis-aligned box surface (2 * 2d faces), calibrated.
pub fn cuboid_surface(lo: &[f64], hi: &[f64], order: usize) -> Result<Vec<SurfacePatch>> {
    if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, u)| !(l < u)) {
        return Err(Error::Geometry("box surface needs lo < hi on every axis".into()));
    }
    let n = lo.len();
    let mut patches = Vec::with_capacity(2 * n);
    for axis in 0..n {
        for upper in [false, true] {
            patches.push(SurfacePatch::new(
                Chart::CuboidFace { lo: lo.to_vec(), hi: hi.to_vec(), axis, upper },
                order,
            ));
        }
    }
    let center: Vec<f64> = lo.iter().zip(hi).map(|(l, u)| 0.5 * (l + u)).collect();
    calibrate_orientation(&mut patches, &PointCd::new(center)?)?;
    Ok(patches)
}

/// Result of an orientation calibration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    /// Sign applied to every patch so the kernel integral is +1.
    pub sign: f64,
    /// Kernel integral measured before the sign was applied.
    pub kernel_integral: f64,
}

/// Fix the surface orientation by requiring the Bochner-Martinelli kernel
/// integrated against f = 1 at an interior point to equal +1.
///
/// Box faces get a per-face provisional sign from their outward normal first,
/// then the whole surface is flipped if the measured integral is negative.
pub fn calibrate_orientation(
    patches: &mut [SurfacePatch],
    interior: &PointCd,
) -> Result<Calibration> {
    // provisional face orientation: moving axis k in front of the remaining
    // coordinates costs (-1)^k, and lower faces point the other way
    for p in patches.iter_mut() {
        if let Chart::CuboidFace { axis, upper, .. } = &p.chart {
            let mut sign = if *upper { 1.0 } else { -1.0 };
            if axis % 2 == 1 {
                sign = -sign;
            }
            p.orientation = sign;
        }
    }
    let probe_order = 8;
    let reduced: Vec<SurfacePatch> = patches
        .iter()
        .map(|p| SurfacePatch {
            chart: p.chart.clone(),
            orders: p.orders.iter().map(|_| probe_order).collect(),
            orientation: p.orientation,
        })
        .collect();
    let one = crate::martinelli::TestFunction::constant(1.0.into());
    let integral = crate::martinelli::integrate_bm(&one, &reduced, interior)?;
    let measured = integral.value.re;
    if measured.abs() < 0.2 {
        return Err(Error::Geometry(format!(
            "calibration integral {measured:.4} is far from +-1; \
             the surface does not appear to enclose the probe point"
        )));
    }
    let sign = if measured < 0.0 { -1.0 } else { 1.0 };
    if sign < 0.0 {
        for p in patches.iter_mut() {
            p.orientation = -p.orientation;
        }
    }
    Ok(Calibration { sign, kernel_integral: measured })
}
