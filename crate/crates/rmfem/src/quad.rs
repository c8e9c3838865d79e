//! Gauss-Legendre quadrature rules on [-1, 1].

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Legendre rule, computed by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the ith root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and its derivative by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.push((-x, w));
    }
    // mirror to the other half
    for i in (0..n - m).rev() {
        let (x, w) = rule[i];
        rule.push((-x, w));
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn four_point_rule_matches_tabulated_values() {
        let r = gauss_legendre(4);
        assert_relative_eq!(r[0].0, -0.8611363115940526, epsilon = 1e-14);
        assert_relative_eq!(r[1].0, -0.3399810435848563, epsilon = 1e-14);
        assert_relative_eq!(r[0].1, 0.3478548451374538, epsilon = 1e-14);
        assert_relative_eq!(r[1].1, 0.6521451548625461, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 3, 4, 8, 16, 20] {
            let s: f64 = gauss_legendre(n).iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let n = 4;
        let r = gauss_legendre(n);
        for d in 0..2 * n {
            let got: f64 = r.iter().map(|&(x, w)| w * x.powi(d as i32)).sum();
            let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
            assert_relative_eq!(got, exact, epsilon = 1e-13);
        }
    }
}
