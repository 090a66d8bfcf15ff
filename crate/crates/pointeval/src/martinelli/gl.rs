//! Gauss-Legendre nodes and weights by Newton iteration on the Legendre
//! recurrence; exact for polynomials of degree 2n - 1.

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Map nodes/weights to an interval [a, b].
pub fn scaled_rule(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        t.iter().map(|x| mid + half * x).collect(),
        w.iter().map(|x| half * x).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_five_matches_reference_table() {
        let (x, w) = gauss_legendre(5);
        let xr = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        let wr = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        for i in 0..5 {
            assert!((x[i] - xr[i]).abs() < 1e-13, "node {i}");
            assert!((w[i] - wr[i]).abs() < 1e-13, "weight {i}");
        }
    }

    #[test]
    fn integrates_high_degree_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        // degree 23 is exact for order 12
        let val: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(22)).sum();
        assert!((val - 2.0 / 23.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(23)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn scaled_rule_integrates_on_interval() {
        let (x, w) = scaled_rule(8, 0.0, 3.0);
        let val: f64 = x.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((val - 9.0).abs() < 1e-12);
    }

    #[test]
    fn order_48_weights_sum_to_two() {
        let (_, w) = gauss_legendre(48);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }
}
