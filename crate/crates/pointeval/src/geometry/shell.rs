//! Dyadic annular shells and the swiss-cheese scenario builder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImplicitSet, PointCd, SetExpr};

/// The open shell `{ 2^{-(n+1)} < |z - center| < 2^{-n} }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusShell {
    pub center: PointCd,
    pub n: u32,
}

impl AnnulusShell {
    pub fn new(center: PointCd, n: u32) -> Result<AnnulusShell> {
        if n < 1 {
            return Err(Error::Geometry("shell index n must be >= 1".into()));
        }
        Ok(AnnulusShell { center, n })
    }

    pub fn inner_radius(&self) -> f64 {
        f64::exp2(-(self.n as f64) - 1.0)
    }

    pub fn outer_radius(&self) -> f64 {
        f64::exp2(-(self.n as f64))
    }

    pub fn to_set(&self) -> ImplicitSet {
        let outer = SetExpr::Ball {
            center: self.center.coords().to_vec(),
            radius: self.outer_radius(),
            open: true,
        };
        let inner = SetExpr::Ball {
            center: self.center.coords().to_vec(),
            radius: self.inner_radius(),
            open: false,
        };
        ImplicitSet::from_expr(
            SetExpr::Difference { minuend: Box::new(outer), subtrahend: Box::new(inner) },
            self.center.real_dim(),
        )
        .expect("shell expression is always valid")
    }
}

/// The shell `A_n(x)`; for d = 1 this is the planar annulus.
pub fn annulus_shell(x: &PointCd, n: u32) -> Result<ImplicitSet> {
    Ok(AnnulusShell::new(x.clone(), n)?.to_set())
}

/// The set difference `A_n(x) \ U`, with the shell's bounding box.
pub fn shell_minus_domain(x: &PointCd, n: u32, domain: &ImplicitSet) -> Result<ImplicitSet> {
    if !domain.is_bounded() {
        return Err(Error::Unbounded);
    }
    if domain.dim() != x.real_dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: x.real_dim() });
    }
    ImplicitSet::difference(annulus_shell(x, n)?, domain.clone())
}

/// Unit ball centered at `x` minus one closed ball per shell index.
///
/// The ball removed from shell n is centered at distance `1.5 * 2^{-(n+1)}`
/// from `x` along the first real axis (strictly inside the shell) with the
/// given radius, which must stay below `2^{-(n+2)}`.
pub fn make_swiss_cheese(
    x: &PointCd,
    radii: impl Fn(u32) -> f64,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<ImplicitSet> {
    let dim = x.real_dim();
    let mut removed = Vec::new();
    for n in n_range {
        let r = radii(n);
        let limit = f64::exp2(-(n as f64) - 2.0);
        if r < 0.0 || !r.is_finite() || r >= limit {
            return Err(Error::SwissCheeseRadius { index: n, radius: r, limit });
        }
        if r == 0.0 {
            continue;
        }
        let mut center = x.coords().to_vec();
        center[0] += 1.5 * f64::exp2(-(n as f64) - 1.0);
        removed.push(SetExpr::Ball { center, radius: r, open: false });
    }
    let ball = SetExpr::Ball { center: x.coords().to_vec(), radius: 1.0, open: true };
    let expr = if removed.is_empty() {
        ball
    } else {
        SetExpr::Difference {
            minuend: Box::new(ball),
            subtrahend: Box::new(SetExpr::Union(removed)),
        }
    };
    ImplicitSet::from_expr(expr, dim)
}

/// Centers of the balls that `make_swiss_cheese` removes.
pub fn swiss_cheese_centers(x: &PointCd, n_range: std::ops::RangeInclusive<u32>) -> Vec<PointCd> {
    n_range
        .map(|n| {
            let mut c = x.coords().to_vec();
            c[0] += 1.5 * f64::exp2(-(n as f64) - 1.0);
            PointCd::new(c).expect("finite center")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_radii_are_exact_binary_powers() {
        let s = AnnulusShell::new(PointCd::origin(1), 1).unwrap();
        assert_eq!(s.inner_radius(), 0.25);
        assert_eq!(s.outer_radius(), 0.5);
        let s3 = AnnulusShell::new(PointCd::origin(2), 3).unwrap();
        assert_eq!(s3.inner_radius(), 0.0625);
        assert_eq!(s3.outer_radius(), 0.125);
        assert_eq!(s3.inner_radius(), f64::exp2(-4.0));
    }

    #[test]
    fn planar_annulus_membership() {
        let a = annulus_shell(&PointCd::origin(1), 1).unwrap();
        assert!(a.contains(&PointCd::new(vec![0.3, 0.0]).unwrap()).unwrap());
        assert!(!a.contains(&PointCd::new(vec![0.25, 0.0]).unwrap()).unwrap());
        assert!(!a.contains(&PointCd::new(vec![0.5, 0.0]).unwrap()).unwrap());
        assert!(!a.contains(&PointCd::new(vec![0.1, 0.0]).unwrap()).unwrap());
    }

    #[test]
    fn shell_inside_domain_is_empty() {
        let u = ImplicitSet::ball(&PointCd::origin(1), 1.0).unwrap();
        let s = shell_minus_domain(&PointCd::origin(1), 1, &u).unwrap();
        // every shell point is inside the unit ball, so the difference is empty
        for k in 0..64 {
            let t = k as f64 / 64.0 * std::f64::consts::TAU;
            let p = PointCd::new(vec![0.3 * t.cos(), 0.3 * t.sin()]).unwrap();
            assert!(!s.contains(&p).unwrap());
        }
    }

    #[test]
    fn boundary_point_shell_is_nonempty() {
        let u = ImplicitSet::ball(&PointCd::new(vec![1.0, 0.0]).unwrap(), 1.0).unwrap();
        let s = shell_minus_domain(&PointCd::origin(1), 1, &u).unwrap();
        assert!(s.contains(&PointCd::new(vec![-0.3, 0.0]).unwrap()).unwrap());
        assert!(!s.contains(&PointCd::new(vec![0.3, 0.0]).unwrap()).unwrap());
    }

    #[test]
    fn swiss_cheese_placement_and_exclusions() {
        let x = PointCd::origin(1);
        let u = make_swiss_cheese(&x, |n| f64::exp2(-8.0 * n as f64), 1..=6).unwrap();
        let centers = swiss_cheese_centers(&x, 1..=6);
        assert!((centers[0].coords()[0] - 0.375).abs() < 1e-15);
        assert!((centers[1].coords()[0] - 0.1875).abs() < 1e-15);
        for c in &centers {
            assert!(!u.contains(c).unwrap(), "removed centers are excluded");
        }
        // x itself is in the set (finitely many removed balls, none containing x)
        assert!(u.contains(&x).unwrap());
    }

    #[test]
    fn swiss_cheese_zero_radii_is_the_ball() {
        let x = PointCd::origin(1);
        let u = make_swiss_cheese(&x, |_| 0.0, 1..=4).unwrap();
        assert_eq!(u, ImplicitSet::open_ball(&x, 1.0).unwrap());
    }

    #[test]
    fn swiss_cheese_rejects_fat_radii() {
        let x = PointCd::origin(1);
        let err = make_swiss_cheese(&x, |n| if n == 3 { 0.5 } else { 0.0 }, 1..=4);
        assert!(matches!(err, Err(Error::SwissCheeseRadius { index: 3, .. })));
    }

    #[test]
    fn removed_ball_is_exactly_the_shell_difference() {
        // by construction K_n sits strictly inside A_n, so A_n \ U == K_n
        let x = PointCd::origin(1);
        let u = make_swiss_cheese(&x, |n| f64::exp2(-4.0 * n as f64), 1..=4).unwrap();
        let s2 = shell_minus_domain(&x, 2, &u).unwrap();
        let c2 = &swiss_cheese_centers(&x, 2..=2)[0];
        assert!(s2.contains(c2).unwrap());
        let near = c2.offset(&[f64::exp2(-8.0) * 0.9, 0.0]);
        assert!(s2.contains(&near).unwrap());
        let outside = c2.offset(&[f64::exp2(-8.0) * 1.1, 0.0]);
        assert!(!s2.contains(&outside).unwrap());
    }
}
