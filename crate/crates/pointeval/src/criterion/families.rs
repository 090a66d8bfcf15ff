//! Deterministic probe families: polynomials, reciprocal poles for planar
//! swiss-cheese domains, and affine reciprocals for d >= 2.

use num_complex::Complex64;

use crate::geometry::PointCd;
use crate::martinelli::TestFunction;

/// Monomials ordered by total degree, capped at `cap` members.
pub fn polynomial_family(d: usize, max_total_degree: u32, cap: usize) -> Vec<TestFunction> {
    fn compositions(total: u32, parts: usize, head: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            head.push(total);
            out.push(head.clone());
            head.pop();
            return;
        }
        for first in (0..=total).rev() {
            head.push(first);
            compositions(total - first, parts - 1, head, out);
            head.pop();
        }
    }
    let mut exponents = Vec::new();
    for total in 0..=max_total_degree {
        compositions(total, d, &mut Vec::new(), &mut exponents);
        if exponents.len() >= cap {
            break;
        }
    }
    exponents.truncate(cap);
    exponents
        .into_iter()
        .map(|e| {
            let total: u32 = e.iter().sum();
            TestFunction::new(format!("monomial degree {total}"), move |p: &PointCd| {
                let mut v = Complex64::new(1.0, 0.0);
                for (j, &k) in e.iter().enumerate() {
                    v *= p.complex(j).powu(k);
                }
                v
            })
        })
        .collect()
}

/// Planar rational family `1/(zeta - c)^k`, poles cycling through `poles`
/// with the power increasing every cycle; ordered so small powers come first.
pub fn reciprocal_pole_family(poles: &[PointCd], max_power: u32, cap: usize) -> Vec<TestFunction> {
    let mut out = Vec::new();
    'outer: for k in 1..=max_power {
        for c in poles {
            let pole = c.complex(0);
            out.push(
                TestFunction::new(
                    format!("reciprocal pole power {k}"),
                    move |p: &PointCd| (p.complex(0) - pole).powi(-(k as i32)),
                )
                .with_poles(format!("pole of order {k} at {pole}")),
            );
            if out.len() >= cap {
                break 'outer;
            }
        }
    }
    out
}

/// `1/(eps + dir . (x - zeta))^k` style boundary family for a point x on the
/// domain boundary: the pole sits at distance eps from x along `-dir`,
/// outside the closure of the domain for suitable geometry.
/// Planar version: pole at `x - eps * dir` in C.
pub fn boundary_pole_family(
    x: &PointCd,
    dir: Complex64,
    epsilons: &[f64],
    max_power: u32,
) -> Vec<TestFunction> {
    let x0 = x.complex(0);
    let mut out = Vec::new();
    for &eps in epsilons {
        for k in 1..=max_power {
            let pole = x0 - eps * dir;
            out.push(
                TestFunction::new(
                    format!("boundary pole eps {eps} power {k}"),
                    move |p: &PointCd| (p.complex(0) - pole).powi(-(k as i32)),
                )
                .with_poles(format!("pole of order {k} at {pole}")),
            );
        }
    }
    out
}

/// Reciprocals of affine functions `1/(<a, zeta> - b)^k` whose zero
/// hyperplane misses the closure of the domain.
pub fn affine_reciprocal_family(
    planes: &[(Vec<Complex64>, Complex64)],
    max_power: u32,
    cap: usize,
) -> Vec<TestFunction> {
    let mut out = Vec::new();
    'outer: for k in 1..=max_power {
        for (a, b) in planes {
            let a = a.clone();
            let b = *b;
            out.push(
                TestFunction::new(
                    format!("affine reciprocal power {k}"),
                    move |p: &PointCd| {
                        let mut s = -b;
                        for (j, aj) in a.iter().enumerate() {
                            s += aj * p.complex(j);
                        }
                        s.powi(-(k as i32))
                    },
                )
                .with_poles(format!("zero hyperplane of <a, z> - b, order {k}")),
            );
            if out.len() >= cap {
                break 'outer;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_family_starts_with_constant() {
        let fam = polynomial_family(2, 3, 16);
        let p = PointCd::new(vec![0.3, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(fam[0].eval(&p), Complex64::new(1.0, 0.0));
        assert!(fam.len() <= 16);
        // degree-1 members follow: zeta_1 and zeta_2 in some order
        let vals: Vec<Complex64> = fam[1..3].iter().map(|f| f.eval(&p)).collect();
        assert!(vals.contains(&Complex64::new(0.3, 0.0)));
        assert!(vals.contains(&Complex64::new(0.5, 0.0)));
    }

    #[test]
    fn reciprocal_family_cycles_poles_before_powers() {
        let poles = vec![
            PointCd::new(vec![0.375, 0.0]).unwrap(),
            PointCd::new(vec![0.1875, 0.0]).unwrap(),
        ];
        let fam = reciprocal_pole_family(&poles, 3, 6);
        assert_eq!(fam.len(), 6);
        let z = PointCd::new(vec![0.0, 0.0]).unwrap();
        let v0 = fam[0].eval(&z);
        assert!((v0 - Complex64::new(-1.0 / 0.375, 0.0)).norm() < 1e-12);
        // third member restarts the pole cycle at power 2
        let v2 = fam[2].eval(&z);
        assert!((v2 - Complex64::new(1.0 / (0.375 * 0.375), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn affine_reciprocal_evaluates() {
        let planes = vec![(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            Complex64::new(2.0, 0.0),
        )];
        let fam = affine_reciprocal_family(&planes, 2, 10);
        assert_eq!(fam.len(), 2);
        let p = PointCd::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((fam[0].eval(&p) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((fam[1].eval(&p) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
