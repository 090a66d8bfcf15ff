//! Series arithmetic: Holder conjugation, dyadic weights, geometric fits.

use crate::error::{Error, Result};

/// `q = p / (p - 1)`; involutive.
pub fn holder_conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Config(format!("p = {p} must exceed 1")));
    }
    Ok(p / (p - 1.0))
}

/// `2^{n (2d-1) q} * gamma`, computed in log space so the weight stays finite
/// and overflow-free for every n <= 40, q < 2d, gamma <= 1.
pub fn weighted_term(n: u32, gamma: f64, q: f64, d: usize) -> f64 {
    if gamma == 0.0 {
        return 0.0;
    }
    let exponent = n as f64 * (2.0 * d as f64 - 1.0) * q + gamma.log2();
    f64::exp2(exponent)
}

/// Base-2 logarithm of the weight alone.
pub fn weight_log2(n: u32, q: f64, d: usize) -> f64 {
    n as f64 * (2.0 * d as f64 - 1.0) * q
}

/// Least-squares geometric ratio of a positive tail; zeros collapse the fit.
///
/// Returns `None` when fewer than two terms are available or when zeros are
/// interleaved with positive terms in a way that admits no geometric reading
/// (a zero followed by a positive term).
pub fn fit_geometric_ratio(terms: &[f64]) -> Option<f64> {
    if terms.len() < 2 {
        return None;
    }
    if terms.iter().all(|t| *t == 0.0) {
        return Some(0.0);
    }
    if let Some(first_zero) = terms.iter().position(|t| *t == 0.0) {
        return if terms[first_zero..].iter().all(|t| *t == 0.0) {
            // decayed to exact zero inside the window
            Some(0.0)
        } else {
            None
        };
    }
    // log-linear least squares: slope of log2(t_i) against i
    let m = terms.len() as f64;
    let mean_x = (m - 1.0) / 2.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mean_y = terms.iter().map(|t| t.log2()).sum::<f64>() / m;
    for (i, t) in terms.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxx += dx * dx;
        sxy += dx * (t.log2() - mean_y);
    }
    Some(f64::exp2(sxy / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_examples() {
        assert_eq!(holder_conjugate(2.0).unwrap(), 2.0);
        assert!((holder_conjugate(4.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(holder_conjugate(1.0).is_err());
        assert!(holder_conjugate(0.5).is_err());
    }

    #[test]
    fn holder_is_involutive() {
        for p in [1.5, 2.0, 3.0, 7.5] {
            let q = holder_conjugate(p).unwrap();
            assert!((holder_conjugate(q).unwrap() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_term_examples() {
        assert_eq!(weighted_term(7, 0.0, 1.9, 2), 0.0);
        // n = 3, d = 2, q = 2: 2^18 * 1e-6
        let v = weighted_term(3, 1e-6, 2.0, 2);
        assert!((v - 0.262144).abs() < 1e-12, "{v}");
        // d = 1 weight is 2^{nq}: n = 10, q = 2, gamma = 1 -> 2^20
        assert_eq!(weighted_term(10, 1.0, 2.0, 1), 2f64.powi(20));
    }

    #[test]
    fn log_space_never_overflows_in_range() {
        for n in 1..=40u32 {
            for &(q, d) in &[(1.999, 1usize), (3.999, 2usize)] {
                let v = weighted_term(n, 1.0, q, d);
                assert!(v.is_finite() && v > 0.0);
                let tiny = weighted_term(n, 1e-280, q, d);
                assert!(tiny.is_finite());
            }
        }
    }

    #[test]
    fn geometric_fit_recovers_ratio() {
        let terms: Vec<f64> = (0..5).map(|i| 3.0 * 0.4f64.powi(i)).collect();
        let rho = fit_geometric_ratio(&terms).unwrap();
        assert!((rho - 0.4).abs() < 1e-12);
        let growing: Vec<f64> = (0..5).map(|i| 0.1 * 2.0f64.powi(i)).collect();
        assert!((fit_geometric_ratio(&growing).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_fit_zero_handling() {
        assert_eq!(fit_geometric_ratio(&[0.0, 0.0, 0.0]), Some(0.0));
        assert_eq!(fit_geometric_ratio(&[1.0, 0.5, 0.0, 0.0]), Some(0.0));
        assert_eq!(fit_geometric_ratio(&[1.0, 0.0, 1.0]), None);
        assert_eq!(fit_geometric_ratio(&[1.0]), None);
    }
}
