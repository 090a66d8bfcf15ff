//! The Bochner-Martinelli kernel, its boundary integral by differential-form
//! pullback, and the vanishing-divergence check behind it.
//!
//! For f analytic on the closure of a domain E in C^d with piecewise smooth
//! boundary, integrating f against the kernel
//!
//! ```text
//!   w(zeta, z) = (d-1)!/(2 pi i)^d |zeta - z|^{-2d}
//!                sum_j (conj(zeta_j) - conj(z_j))
//!                d conj(zeta_1) ^ d zeta_1 ^ ... ^ d zeta_d   (d conj(zeta_j) omitted)
//! ```
//!
//! over the boundary reproduces f(z) for z inside E; for d = 1 the kernel is
//! the Cauchy kernel. The integral is evaluated by pulling the form back
//! through each surface chart: the coefficient of the parameter volume form
//! is the determinant of the (2d-1) x (2d-1) complex Jacobian of the wedge
//! coordinates with respect to the chart parameters.

mod gl;
mod surface;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PointCd;
use crate::util::factorial;

pub use gl::{gauss_legendre, scaled_rule};
pub use surface::{
    calibrate_orientation, cuboid_surface, sphere_surface, Calibration, Chart, SurfacePatch,
};

/// An evaluable complex-valued function with a free-text description of
/// where it is analytic.
#[derive(Clone)]
pub struct TestFunction {
    evaluator: Arc<dyn Fn(&PointCd) -> Complex64 + Send + Sync>,
    pub region: String,
    pub poles: Option<String>,
}

impl TestFunction {
    pub fn new(
        region: impl Into<String>,
        f: impl Fn(&PointCd) -> Complex64 + Send + Sync + 'static,
    ) -> TestFunction {
        TestFunction { evaluator: Arc::new(f), region: region.into(), poles: None }
    }

    pub fn with_poles(mut self, poles: impl Into<String>) -> TestFunction {
        self.poles = Some(poles.into());
        self
    }

    pub fn constant(c: Complex64) -> TestFunction {
        TestFunction::new("entire", move |_| c)
    }

    pub fn eval(&self, p: &PointCd) -> Complex64 {
        (self.evaluator)(p)
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("region", &self.region)
            .field("poles", &self.poles)
            .finish()
    }
}

/// Scalar kernel coefficients `F_j = (conj(zeta_j) - conj(z_j)) / |zeta - z|^{2d}`.
/// The combinatorial prefactor `(d-1)!/(2 pi i)^d` belongs to the integrator.
pub fn bm_flux_components(zeta: &PointCd, z: &PointCd) -> Result<Vec<Complex64>> {
    if zeta.real_dim() != z.real_dim() {
        return Err(Error::DimensionMismatch { expected: z.real_dim(), got: zeta.real_dim() });
    }
    let d = zeta.complex_dim();
    let mut r2 = 0.0;
    for (a, b) in zeta.coords().iter().zip(z.coords()) {
        r2 += (a - b) * (a - b);
    }
    if r2 == 0.0 {
        return Err(Error::SingularPoint);
    }
    let denom = r2.powi(d as i32);
    Ok((0..d)
        .map(|j| (zeta.complex(j) - z.complex(j)).conj() / denom)
        .collect())
}

/// Result of a Bochner-Martinelli boundary integral.
#[derive(Clone, Debug)]
pub struct BmIntegral {
    pub value: Complex64,
    /// Smallest distance from z to a quadrature node.
    pub min_node_distance: f64,
    /// Chart-scale node spacing estimate used by the proximity warning.
    pub node_spacing: f64,
    /// z came closer to the surface than one quadrature node spacing; the
    /// rule cannot resolve the kernel there (never regularized, only
    /// reported, with the distances left for the caller to judge).
    pub near_singular: bool,
}

/// Integrate `f(zeta) w(zeta, z)` over a closed, calibrated surface.
///
/// Whether the surface is actually closed cannot be detected here; callers
/// own that. z on or near the surface triggers `near_singular`.
pub fn integrate_bm(
    f: &TestFunction,
    surface: &[SurfacePatch],
    z: &PointCd,
) -> Result<BmIntegral> {
    let n = z.real_dim();
    let d = z.complex_dim();
    if surface.is_empty() {
        return Err(Error::Geometry("empty surface".into()));
    }
    for p in surface {
        if p.chart.real_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.chart.real_dim() });
        }
    }
    let m = n - 1;
    // (d-1)! / (2 pi i)^d
    let two_pi_i = Complex64::new(0.0, std::f64::consts::TAU);
    let prefactor = Complex64::new(factorial(d - 1), 0.0) / two_pi_i.powu(d as u32);

    let mut total = Complex64::new(0.0, 0.0);
    let mut min_dist = f64::INFINITY;
    let mut spacing = 0.0f64;
    for patch in surface {
        let rules = patch.rules();
        let counts: Vec<usize> = rules.iter().map(|(x, _)| x.len()).collect();
        let nodes: usize = counts.iter().product();
        spacing = spacing.max(patch.node_spacing());

        const CHUNK: usize = 1024;
        let nblocks = nodes.div_ceil(CHUNK);
        let partials: Vec<(f64, f64, f64)> = (0..nblocks)
            .into_par_iter()
            .map(|b| {
                let start = b * CHUNK;
                let stop = ((b + 1) * CHUNK).min(nodes);
                let mut multi = vec![0usize; m];
                let mut rem = start;
                for a in (0..m).rev() {
                    multi[a] = rem % counts[a];
                    rem /= counts[a];
                }
                let mut t = vec![0.0; m];
                let mut point = vec![0.0; n];
                let mut jac = vec![0.0; n * m];
                let mut rows = vec![Complex64::new(0.0, 0.0); m * m];
                let mut acc = Complex64::new(0.0, 0.0);
                let mut local_min = f64::INFINITY;
                for step in start..stop {
                    if step > start {
                        for a in (0..m).rev() {
                            multi[a] += 1;
                            if multi[a] < counts[a] {
                                break;
                            }
                            multi[a] = 0;
                        }
                    }
                    let mut weight = 1.0;
                    for a in 0..m {
                        t[a] = rules[a].0[multi[a]];
                        weight *= rules[a].1[multi[a]];
                    }
                    patch.chart.eval(&t, &mut point, &mut jac);
                    let mut r2 = 0.0;
                    for (p, zc) in point.iter().zip(z.coords()) {
                        r2 += (p - zc) * (p - zc);
                    }
                    let dist = r2.sqrt();
                    local_min = local_min.min(dist);
                    if r2 == 0.0 {
                        continue; // exactly singular node: skip, flagged via min distance
                    }
                    let zeta = PointCd::new(point.clone()).expect("chart points are finite");
                    let fv = f.eval(&zeta);
                    let denom = r2.powi(d as i32);
                    // complex chart derivative rows d zeta_k / d t, d conj / d t
                    let mut kernel_sum = Complex64::new(0.0, 0.0);
                    for j in 0..d {
                        // wedge coordinate order: conj(zeta_1), zeta_1, ...,
                        // conj(zeta_j) omitted, ..., conj(zeta_d), zeta_d
                        let mut row = 0usize;
                        for k in 0..d {
                            if k != j {
                                for c in 0..m {
                                    rows[row * m + c] = Complex64::new(
                                        jac[2 * k * m + c],
                                        -jac[(2 * k + 1) * m + c],
                                    );
                                }
                                row += 1;
                            }
                            for c in 0..m {
                                rows[row * m + c] = Complex64::new(
                                    jac[2 * k * m + c],
                                    jac[(2 * k + 1) * m + c],
                                );
                            }
                            row += 1;
                        }
                        let det = cdet(&mut rows, m);
                        let fj = (zeta.complex(j) - z.complex(j)).conj() / denom;
                        kernel_sum += fj * det;
                    }
                    acc += fv * kernel_sum * weight;
                }
                (acc.re, acc.im, local_min)
            })
            .collect();
        let mut patch_sum = Complex64::new(0.0, 0.0);
        for (re, im, lm) in partials {
            patch_sum += Complex64::new(re, im);
            min_dist = min_dist.min(lm);
        }
        total += patch_sum * patch.orientation;
    }
    let near = min_dist < spacing;
    Ok(BmIntegral {
        value: total * prefactor,
        min_node_distance: min_dist,
        node_spacing: spacing,
        near_singular: near,
    })
}

/// In-place complex determinant by Gaussian elimination with partial
/// pivoting; `mat` is row-major n x n and is destroyed.
fn cdet(mat: &mut [Complex64], n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = mat[col * n + col].norm_sqr();
        for r in col + 1..n {
            let v = mat[r * n + col].norm_sqr();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for c in 0..n {
                mat.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        let diag = mat[col * n + col];
        det *= diag;
        for r in col + 1..n {
            let factor = mat[r * n + col] / diag;
            for c in col..n {
                let sub = factor * mat[col * n + c];
                mat[r * n + c] -= sub;
            }
        }
    }
    det
}

/// Modulus of `sum_j d/d conj(zeta_j) [ conj(zeta_j) / |zeta|^{2d} ]`,
/// evaluated with central differences through the Wirtinger derivative
/// `d/d conj(zeta_j) = (d/dx_j + i d/dy_j) / 2`. The sum vanishes
/// identically away from the origin, so the return value is pure
/// finite-difference truncation of order h^2.
pub fn divergence_residual(zeta: &PointCd, h: f64) -> Result<f64> {
    let norm = zeta.norm();
    if !(norm > 10.0 * h) {
        return Err(Error::StepTooLarge { h, norm });
    }
    let d = zeta.complex_dim();
    let g = |coords: &[f64], j: usize| -> Complex64 {
        let r2: f64 = coords.iter().map(|c| c * c).sum();
        Complex64::new(coords[2 * j], -coords[2 * j + 1]) / r2.powi(d as i32)
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut coords = zeta.coords().to_vec();
    for j in 0..d {
        for (axis, phase) in [(2 * j, Complex64::new(1.0, 0.0)), (2 * j + 1, Complex64::new(0.0, 1.0))]
        {
            let orig = coords[axis];
            coords[axis] = orig + h;
            let plus = g(&coords, j);
            coords[axis] = orig - h;
            let minus = g(&coords, j);
            coords[axis] = orig;
            total += 0.5 * phase * (plus - minus) / (2.0 * h);
        }
    }
    Ok(total.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flux_examples() {
        // d = 1, zeta = 1, z = 0: F_1 = 1
        let f = bm_flux_components(
            &PointCd::new(vec![1.0, 0.0]).unwrap(),
            &PointCd::origin(1),
        )
        .unwrap();
        assert_eq!(f, vec![c(1.0, 0.0)]);
        // d = 2, zeta = (1, 0), z = 0
        let f = bm_flux_components(
            &PointCd::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
            &PointCd::origin(2),
        )
        .unwrap();
        assert_eq!(f, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        // coincident points are singular
        assert!(matches!(
            bm_flux_components(&PointCd::origin(2), &PointCd::origin(2)),
            Err(Error::SingularPoint)
        ));
    }

    #[test]
    fn flux_homogeneity_degree_1_minus_2d() {
        let zeta = PointCd::new(vec![0.3, -0.7, 1.1, 0.2]).unwrap();
        let z = PointCd::origin(2);
        let f1 = bm_flux_components(&zeta, &z).unwrap();
        let lambda = 1.7;
        let scaled = PointCd::new(zeta.coords().iter().map(|v| lambda * v).collect()).unwrap();
        let f2 = bm_flux_components(&scaled, &z).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            let expect = a * lambda.powi(1 - 4);
            assert!((b - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn cauchy_reduction_on_the_circle() {
        // d = 1: the BM integral is the Cauchy integral; f = zeta^2 at z = 0.5
        let f = TestFunction::new("entire", |p: &PointCd| p.complex(0) * p.complex(0));
        let surface = sphere_surface(&PointCd::origin(1), 1.0, 64).unwrap();
        let z = PointCd::new(vec![0.5, 0.0]).unwrap();
        let out = integrate_bm(&f, &surface, &z).unwrap();
        assert!((out.value - c(0.25, 0.0)).norm() < 1e-12, "{}", out.value);
    }

    #[test]
    fn cauchy_agreement_with_independent_oracle() {
        // independent route: plain trapezoid Cauchy quadrature on the circle
        let f = |z: Complex64| z * z * z - c(2.0, 1.0) * z + c(0.0, 0.5);
        let z0 = c(0.3, -0.2);
        let n = 512;
        let mut acc = c(0.0, 0.0);
        for k in 0..n {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let zeta = c(th.cos(), th.sin());
            let dz = c(-th.sin(), th.cos()) * (std::f64::consts::TAU / n as f64);
            acc += f(zeta) / (zeta - z0) * dz;
        }
        let oracle = acc / c(0.0, std::f64::consts::TAU);
        let tf = TestFunction::new("entire", move |p: &PointCd| f(p.complex(0)));
        let surface = sphere_surface(&PointCd::origin(1), 1.0, 64).unwrap();
        let out = integrate_bm(&tf, &surface, &PointCd::from_complex(&[z0])).unwrap();
        assert!((out.value - oracle).norm() < 1e-10, "{} vs {oracle}", out.value);
    }

    #[test]
    fn sphere_reproduction_d2_moderate_order() {
        let f = TestFunction::new("entire", |p: &PointCd| {
            p.complex(0) * p.complex(0) + 3.0 * p.complex(1)
        });
        let surface = sphere_surface(&PointCd::origin(2), 1.0, 16).unwrap();
        let z = PointCd::new(vec![0.3, 0.0, 0.2, 0.0]).unwrap();
        let out = integrate_bm(&f, &surface, &z).unwrap();
        assert!((out.value - c(0.69, 0.0)).norm() < 1e-6, "{}", out.value);
        assert!(!out.near_singular);
    }

    #[test]
    fn exterior_point_integrates_to_zero() {
        let f = TestFunction::new("entire", |p: &PointCd| {
            p.complex(0) * p.complex(0) + 3.0 * p.complex(1)
        });
        let surface = sphere_surface(&PointCd::origin(2), 1.0, 16).unwrap();
        let z = PointCd::new(vec![1.5, 0.0, 0.0, 0.0]).unwrap();
        let out = integrate_bm(&f, &surface, &z).unwrap();
        assert!(out.value.norm() < 1e-6, "{}", out.value);
    }

    #[test]
    fn orientation_calibration_invariant_across_radii_and_centers() {
        let one = TestFunction::constant(c(1.0, 0.0));
        for (center, radius) in [
            (PointCd::origin(2), 0.5),
            (PointCd::new(vec![0.3, -1.0, 2.0, 0.1]).unwrap(), 1.7),
        ] {
            let surface = sphere_surface(&center, radius, 12).unwrap();
            let out = integrate_bm(&one, &surface, &center).unwrap();
            assert!((out.value - c(1.0, 0.0)).norm() < 1e-6, "{}", out.value);
        }
    }

    #[test]
    fn cuboid_surface_reproduces_inside_and_vanishes_outside() {
        let f = TestFunction::new("entire", |p: &PointCd| p.complex(0) + c(0.5, 0.0));
        let surface = cuboid_surface(&[-1.0, -1.0], &[1.0, 1.0], 48).unwrap();
        let z = PointCd::new(vec![0.2, 0.1]).unwrap();
        let out = integrate_bm(&f, &surface, &z).unwrap();
        assert!((out.value - c(0.7, 0.1)).norm() < 1e-10, "{}", out.value);
        let far = PointCd::new(vec![3.0, 0.0]).unwrap();
        let out = integrate_bm(&f, &surface, &far).unwrap();
        assert!(out.value.norm() < 1e-10);
    }

    #[test]
    fn near_singular_is_flagged() {
        let one = TestFunction::constant(c(1.0, 0.0));
        let surface = sphere_surface(&PointCd::origin(1), 1.0, 32).unwrap();
        let z = PointCd::new(vec![0.999, 0.0]).unwrap();
        let out = integrate_bm(&one, &surface, &z).unwrap();
        assert!(out.near_singular);
        assert!(out.min_node_distance < 0.05);
    }

    #[test]
    fn divergence_residual_examples() {
        // truncation is h^2 / |zeta|^4 for d = 1: comfortably under 1e-6 at 2+i
        let r = divergence_residual(&PointCd::new(vec![2.0, 1.0]).unwrap(), 1e-3).unwrap();
        assert!(r <= 1e-6, "{r}");
        // d = 2 at zeta = (1, 0): measured truncation constant is 8.0 h^2
        let r = divergence_residual(
            &PointCd::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
            1e-3,
        )
        .unwrap();
        assert!(r > 6e-6 && r < 1e-5, "{r}");
        assert!(matches!(
            divergence_residual(&PointCd::new(vec![0.01, 0.0]).unwrap(), 1e-2),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn divergence_residual_is_second_order() {
        let zeta = PointCd::new(vec![0.7, -0.4, 0.3, 0.9]).unwrap();
        let r1 = divergence_residual(&zeta, 1e-3).unwrap();
        let r2 = divergence_residual(&zeta, 5e-4).unwrap();
        let ratio = r1 / r2;
        assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
    }
}
