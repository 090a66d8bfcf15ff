//! Radial bump functions on dyadic shells, their products with capacity
//! minimizers, and the pointwise envelope.
//!
//! The bump psi_n is a piecewise linear function of |z - x|: zero up to
//! 2^{-(n+2)}, ramping to 1 at 2^{-(n+1)}, flat 1 across the middle shell,
//! ramping back to zero between 2^{-n} and 2^{-(n-1)}. Its radial slope is
//! 2^{n+2} on the inner ramp (the extreme value) and 2^n on the outer one, so
//! |grad psi_n| <= 2^{n+2} holds with equality inside. The support is the
//! triple shell A_{n-1} u A_n u A_{n+1}.

use std::sync::Arc;

use crate::capacity::{q_energy, raw_energy};
use crate::error::{Error, Result};
use crate::geometry::PointCd;
use crate::grid::{block_sum, Grid, ScalarField};

/// The four break radii and the piecewise-linear radial profile.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialBump {
    pub center: PointCd,
    pub n: u32,
}

impl RadialBump {
    pub fn new(center: PointCd, n: u32) -> Result<RadialBump> {
        if n < 1 {
            return Err(Error::Geometry("bump index n must be >= 1".into()));
        }
        Ok(RadialBump { center, n })
    }

    /// `[2^{-(n+2)}, 2^{-(n+1)}, 2^{-n}, 2^{-(n-1)}]`.
    pub fn radii(&self) -> [f64; 4] {
        let n = self.n as f64;
        [
            f64::exp2(-n - 2.0),
            f64::exp2(-n - 1.0),
            f64::exp2(-n),
            f64::exp2(-n + 1.0),
        ]
    }

    /// Largest slope magnitude of the profile, attained on the inner ramp.
    pub fn max_slope(&self) -> f64 {
        f64::exp2(self.n as f64 + 2.0)
    }

    /// Profile value and signed radial derivative at radius `rho`. At the
    /// kinks the one-sided derivative of larger magnitude is returned.
    pub fn profile(&self, rho: f64) -> (f64, f64) {
        let [r0, r1, r2, r3] = self.radii();
        let up = self.max_slope(); // 1 / (r1 - r0)
        let down = f64::exp2(self.n as f64); // 1 / (r3 - r2)
        if rho < r0 || rho > r3 {
            (0.0, 0.0)
        } else if rho < r1 {
            ((rho - r0) * up, up)
        } else if rho == r1 {
            (1.0, up)
        } else if rho < r2 {
            (1.0, 0.0)
        } else if rho == r2 && r1 != r2 {
            (1.0, -down)
        } else {
            (((r3 - rho) * down).clamp(0.0, 1.0), -down)
        }
    }

    /// Value and signed radial slope at a point.
    pub fn eval(&self, z: &PointCd) -> Result<(f64, f64)> {
        if z.real_dim() != self.center.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.center.real_dim(),
                got: z.real_dim(),
            });
        }
        Ok(self.profile(self.center.dist(z)))
    }

    /// Sample the bump on grid nodes.
    pub fn sample(&self, grid: Arc<Grid>) -> ScalarField {
        let center = self.center.coords().to_vec();
        let bump = self.clone();
        ScalarField::sample(grid, move |x| {
            let rho = x
                .iter()
                .zip(&center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            bump.profile(rho).0
        })
    }
}

/// Value and signed radial slope of psi_n at z.
pub fn psi(n: u32, x: &PointCd, z: &PointCd) -> Result<(f64, f64)> {
    RadialBump::new(x.clone(), n)?.eval(z)
}

/// Nodewise product `phi_n = g * psi_n`; the grid must cover the triple
/// shell so the product's support is fully represented.
pub fn build_phi(g: &ScalarField, n: u32, x: &PointCd) -> Result<ScalarField> {
    let bump = RadialBump::new(x.clone(), n)?;
    let grid = g.grid();
    if grid.dim() != x.real_dim() {
        return Err(Error::DimensionMismatch { expected: x.real_dim(), got: grid.dim() });
    }
    let outer = bump.radii()[3];
    let hi = grid.hi();
    let covered = grid
        .lo()
        .iter()
        .zip(&hi)
        .zip(x.coords())
        .all(|((l, u), c)| *l <= c - outer && c + outer <= *u);
    if !covered {
        return Err(Error::GridCoverage(format!(
            "grid must cover the triple shell of radius {outer} around the bump center"
        )));
    }
    let psi_field = bump.sample(grid.clone());
    let values = g
        .values()
        .iter()
        .zip(psi_field.values())
        .map(|(a, b)| a * b)
        .collect();
    ScalarField::from_values(grid.clone(), values)
}

/// Nodewise supremum of fields sharing one grid.
pub fn sup_combine(fields: &[ScalarField]) -> Result<ScalarField> {
    let first = fields.first().ok_or(Error::GridMismatch)?;
    if fields.iter().any(|f| !f.same_grid(first)) {
        return Err(Error::GridMismatch);
    }
    let mut values = first.values().to_vec();
    for f in &fields[1..] {
        for (v, w) in values.iter_mut().zip(f.values()) {
            *v = v.max(*w);
        }
    }
    ScalarField::from_values(first.grid().clone(), values)
}

/// Sobolev quotient `||g||_{q*}^q / ||grad g||_q^q` with `q* = 2dq/(2d-q)`:
/// the two sides of the Gagliardo-Nirenberg-Sobolev inequality, constant
/// omitted. Bounded over compactly supported fields and invariant under
/// dilation on geometrically matched grids.
pub fn gns_ratio(g: &ScalarField, q: f64) -> Result<f64> {
    let dim = g.grid().dim() as f64;
    if !(q > 1.0 && q < dim) {
        return Err(Error::ExponentRange { q, lo: 1.0, hi: dim });
    }
    let denom = q_energy(g, q)?;
    if denom == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let qstar = dim * q / (dim - q);
    let hn = g.grid().cell_volume();
    let mass = block_sum(g.values().len(), |r| {
        g.values()[r].iter().map(|v| v.abs().powf(qstar)).sum::<f64>()
    }) * hn;
    Ok(mass.powf((dim - q) / dim) / denom)
}

/// Split product-rule energy bound for `phi_n = g * psi_n`:
///
/// ```text
///   lhs = E_q(g psi_n)
///   rhs = 2^{q-1} ( sum g^q |G psi|^q + sum psi^q |G g|^q ) h^{2d}
/// ```
///
/// with cell-mean values of g and psi multiplying the other factor's cell
/// gradient. The convexity factor 2^{q-1} makes the bound hold for q > 1 up
/// to O(h) cross terms.
pub fn product_energy_split(g: &ScalarField, n: u32, x: &PointCd, q: f64) -> Result<(f64, f64)> {
    let phi = build_phi(g, n, x)?;
    let lhs = q_energy(&phi, q)?;
    let psi_field = RadialBump::new(x.clone(), n)?.sample(g.grid().clone());
    let hn = g.grid().cell_volume();
    let mut rhs = 0.0;
    crate::capacity::for_each_cell_pair(g, &psi_field, |gg, g_mean, gp, p_mean| {
        let gg_norm = gg.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gp_norm = gp.iter().map(|v| v * v).sum::<f64>().sqrt();
        rhs += g_mean.abs().powf(q) * gp_norm.powf(q) + p_mean.abs().powf(q) * gg_norm.powf(q);
    });
    rhs *= hn * f64::exp2(q - 1.0);
    Ok((lhs, rhs))
}

/// `sum over cells |G psi_n|^e h^{2d}` for an arbitrary exponent, e.g. the
/// dimension-critical e = 2d. Scale invariance of the profile makes this
/// independent of n on shell-matched grids.
pub fn psi_gradient_energy(n: u32, x: &PointCd, grid: Arc<Grid>, exponent: f64) -> Result<f64> {
    let field = RadialBump::new(x.clone(), n)?.sample(grid);
    Ok(raw_energy(&field, exponent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x0() -> PointCd {
        PointCd::origin(1)
    }

    #[test]
    fn plateau_support_and_slope() {
        let n = 3;
        let b = RadialBump::new(x0(), n).unwrap();
        // mid-plateau: 1.5 * 2^{-(n+1)}
        let (v, s) = b.profile(1.5 * f64::exp2(-(n as f64) - 1.0));
        assert_eq!((v, s), (1.0, 0.0));
        // outside the triple shell
        let (v, _) = b.profile(f64::exp2(-(n as f64) + 1.0) + 1e-9);
        assert_eq!(v, 0.0);
        let (v, _) = b.profile(0.0);
        assert_eq!(v, 0.0);
        // plateau boundaries are exact
        assert_eq!(b.profile(b.radii()[1]).0, 1.0);
        assert_eq!(b.profile(b.radii()[2]).0, 1.0);
    }

    #[test]
    fn inner_ramp_slope_is_2_pow_n_plus_2() {
        let b = RadialBump::new(x0(), 5).unwrap();
        assert_eq!(b.max_slope(), 128.0);
        let mid_ramp = 1.5 * f64::exp2(-7.0);
        let (_, s) = b.profile(mid_ramp);
        assert_eq!(s, 128.0);
        // outer ramp slope magnitude 2^n
        let (_, s) = b.profile(1.5 * f64::exp2(-5.0));
        assert_eq!(s, -32.0);
        // kink takes the larger one-sided value
        assert_eq!(b.profile(b.radii()[0]).1, 128.0);
        assert_eq!(b.profile(b.radii()[1]).1, 128.0);
    }

    #[test]
    fn slope_bound_holds_everywhere() {
        let b = RadialBump::new(PointCd::origin(2), 2).unwrap();
        for k in 0..=4000 {
            let rho = k as f64 * 1e-3;
            let (v, s) = b.profile(rho);
            assert!((0.0..=1.0).contains(&v));
            assert!(s.abs() <= b.max_slope());
        }
    }

    #[test]
    fn phi_is_psi_where_g_is_one() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 32.0).unwrap());
        let ones = ScalarField::sample(grid.clone(), |_| 1.0);
        let phi = build_phi(&ones, 1, &x0()).unwrap();
        let psi_field = RadialBump::new(x0(), 1).unwrap().sample(grid);
        assert_eq!(phi.values(), psi_field.values());
    }

    #[test]
    fn phi_of_zero_is_zero_and_support_is_contained() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 32.0).unwrap());
        let zeros = ScalarField::zeros(grid.clone());
        let phi = build_phi(&zeros, 1, &x0()).unwrap();
        assert!(phi.values().iter().all(|v| *v == 0.0));

        let g = ScalarField::sample(grid.clone(), |_| 2.5);
        let phi = build_phi(&g, 2, &x0()).unwrap();
        let outer = RadialBump::new(x0(), 2).unwrap().radii()[3];
        for idx in 0..grid.len() {
            let node = grid.node(idx);
            let rho = node.iter().map(|c| c * c).sum::<f64>().sqrt();
            if rho <= f64::exp2(-4.0) || rho >= outer {
                assert_eq!(phi.values()[idx], 0.0);
            }
        }
    }

    #[test]
    fn build_phi_requires_coverage() {
        let grid = Arc::new(Grid::new(&[-0.1, -0.1], &[0.1, 0.1], 0.01).unwrap());
        let g = ScalarField::zeros(grid);
        assert!(matches!(build_phi(&g, 1, &x0()), Err(Error::GridCoverage(_))));
    }

    #[test]
    fn sup_combine_of_disjoint_supports_is_their_sum() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 16.0).unwrap());
        let a = ScalarField::sample(grid.clone(), |x| if x[0] < -0.2 { 0.7 } else { 0.0 });
        let b = ScalarField::sample(grid.clone(), |x| if x[0] > 0.2 { 0.4 } else { 0.0 });
        let sup = sup_combine(&[a.clone(), b.clone()]).unwrap();
        for i in 0..grid.len() {
            assert_eq!(sup.values()[i], a.values()[i] + b.values()[i]);
        }
        let single = sup_combine(&[a.clone()]).unwrap();
        assert_eq!(single.values(), a.values());
    }

    #[test]
    fn sup_combine_difference_bound_exact() {
        let grid = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 0.125).unwrap());
        let fields: Vec<ScalarField> = (1..=3)
            .map(|n| RadialBump::new(x0(), n).unwrap().sample(grid.clone()))
            .collect();
        let sup = sup_combine(&fields).unwrap();
        for (a, b) in [(0usize, 5usize), (17, 200), (3, 100), (50, 51)] {
            let lhs = (sup.values()[a] - sup.values()[b]).abs();
            let rhs = fields
                .iter()
                .map(|f| (f.values()[a] - f.values()[b]).abs())
                .fold(0.0f64, f64::max);
            assert!(lhs <= rhs + 1e-15);
        }
    }

    #[test]
    fn gns_ratio_finite_for_hat_and_fails_for_zero() {
        let grid = Arc::new(Grid::new(&[-2.0, -2.0], &[2.0, 2.0], 1.0 / 32.0).unwrap());
        let hat = ScalarField::sample(grid.clone(), |x| {
            (1.0 - x[0].abs()).max(0.0) * (1.0 - x[1].abs()).max(0.0)
        });
        let r = gns_ratio(&hat, 1.5).unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!(matches!(
            gns_ratio(&ScalarField::zeros(grid), 1.5),
            Err(Error::ZeroGradient)
        ));
    }

    #[test]
    fn gns_ratio_dilation_invariance() {
        // g and g(2x) on geometrically matched grids: both sides scale alike
        let q = 1.5;
        let coarse = Arc::new(Grid::new(&[-2.0, -2.0], &[2.0, 2.0], 1.0 / 64.0).unwrap());
        let fine = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 128.0).unwrap());
        let f = |x: &[f64]| (1.0 - x[0].hypot(x[1])).max(0.0);
        let g1 = ScalarField::sample(coarse, f);
        let g2 = ScalarField::sample(fine, |x| f(&[2.0 * x[0], 2.0 * x[1]]));
        let r1 = gns_ratio(&g1, q).unwrap();
        let r2 = gns_ratio(&g2, q).unwrap();
        assert!((r1 - r2).abs() <= 0.05 * r1, "{r1} vs {r2}");
    }

    #[test]
    fn psi_gradient_energy_scale_invariant_in_n() {
        // shell-matched grids: box and spacing halve with the shell
        let x = x0();
        let e: Vec<f64> = (2..=3)
            .map(|n| {
                let r = f64::exp2(-(n as f64) + 1.0);
                let grid = Arc::new(Grid::cube(x.coords(), r, r / 64.0).unwrap());
                psi_gradient_energy(n, &x, grid, 2.0).unwrap()
            })
            .collect();
        assert!((e[0] - e[1]).abs() <= 0.10 * e[0], "{e:?}");
    }
}
