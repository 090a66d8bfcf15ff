//! Closed-form condenser capacity for concentric spheres.
//!
//! The radial reduction of the q-energy infimum between the spheres `|x| = r`
//! (where u = 1) and `|x| = R` (where u = 0) in R^n has extremal profile
//! `u(s) proportional to s^{-beta} - R^{-beta}` with `beta = (n - q)/(q - 1)`,
//! giving
//!
//! ```text
//!   cap = omega_{n-1} * beta^{q-1} * (r^{-beta} - R^{-beta})^{1-q}
//! ```
//!
//! and the whole-space limit `omega_{n-1} beta^{q-1} r^{n-q}` as R -> inf.

use crate::error::{Error, Result};

/// Surface area of the unit sphere in R^n.
pub fn unit_sphere_area(n: u32) -> f64 {
    // S_n = 2 pi^{n/2} / Gamma(n/2), via the recurrence S_{n+2} = 2 pi S_n / n
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU / (n - 2) as f64 * unit_sphere_area(n - 2),
    }
}

/// Condenser capacity between concentric spheres of radii `r < outer` in R^n.
/// `outer` may be infinite.
pub fn radial_capacity_oracle(r: f64, outer: f64, q: f64, n: u32) -> Result<f64> {
    if !(q > 1.0 && q < n as f64) {
        return Err(Error::ExponentRange { q, lo: 1.0, hi: n as f64 });
    }
    if !(r > 0.0) || !r.is_finite() || !(outer > r) {
        return Err(Error::Geometry(format!(
            "radii must satisfy 0 < r < R (got r = {r}, R = {outer})"
        )));
    }
    let beta = (n as f64 - q) / (q - 1.0);
    let outer_term = if outer.is_finite() { outer.powf(-beta) } else { 0.0 };
    Ok(unit_sphere_area(n) * beta.powf(q - 1.0) * (r.powf(-beta) - outer_term).powf(1.0 - q))
}

/// The radial extremal profile realizing the oracle value (1 at r, 0 at R).
pub fn radial_extremal(s: f64, r: f64, outer: f64, q: f64, n: u32) -> f64 {
    let beta = (n as f64 - q) / (q - 1.0);
    let outer_term = if outer.is_finite() { outer.powf(-beta) } else { 0.0 };
    let s = s.clamp(r, outer);
    (s.powf(-beta) - outer_term) / (r.powf(-beta) - outer_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn whole_space_ball_r4() {
        // r=1, R=inf, q=2, n=4: 2 * omega_3 = 4 pi^2
        let v = radial_capacity_oracle(1.0, f64::INFINITY, 2.0, 4).unwrap();
        assert!((v - 4.0 * PI * PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn truncated_ball_r4() {
        // r=1, R=2, q=2, n=4: 16 pi^2 / 3
        let v = radial_capacity_oracle(1.0, 2.0, 2.0, 4).unwrap();
        assert!((v - 16.0 * PI * PI / 3.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn planar_disk_q15() {
        // r=1, R=8, q=1.5, n=2: beta = 1, 2 pi (1 - 1/8)^{-1/2}
        let v = radial_capacity_oracle(1.0, 8.0, 1.5, 2).unwrap();
        let expect = 2.0 * PI * (1.0 - 0.125f64).powf(-0.5);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 6.7167).abs() < 5e-4, "{v}");
    }

    #[test]
    fn oracle_agrees_with_profile_quadrature() {
        // independent route: integrate |u'|^q omega s^{n-1} ds for the stated
        // extremal profile with composite Simpson
        for &(r, outer, q, n) in &[
            (1.0f64, 8.0f64, 1.5f64, 2u32),
            (1.0, 2.0, 2.0, 4u32),
            (0.5, 4.0, 1.7, 4u32),
        ] {
            let beta = (n as f64 - q) / (q - 1.0);
            let norm = r.powf(-beta) - outer.powf(-beta);
            let deriv = |s: f64| beta * s.powf(-beta - 1.0) / norm;
            let integrand =
                |s: f64| deriv(s).powf(q) * unit_sphere_area(n) * s.powf(n as f64 - 1.0);
            let m = 40_000;
            let h = (outer - r) / m as f64;
            let mut acc = integrand(r) + integrand(outer);
            for k in 1..m {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * integrand(r + k as f64 * h);
            }
            let quad = acc * h / 3.0;
            let closed = radial_capacity_oracle(r, outer, q, n).unwrap();
            assert!(
                (quad - closed).abs() < 1e-6 * closed,
                "quad {quad} vs closed {closed} for ({r},{outer},{q},{n})"
            );
        }
    }

    #[test]
    fn parameter_range_violations() {
        assert!(radial_capacity_oracle(1.0, 2.0, 1.0, 4).is_err());
        assert!(radial_capacity_oracle(1.0, 2.0, 4.0, 4).is_err());
        assert!(radial_capacity_oracle(2.0, 1.0, 2.0, 4).is_err());
        assert!(radial_capacity_oracle(0.0, 1.0, 1.5, 2).is_err());
    }
}
