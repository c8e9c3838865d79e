//! Log-normal diffusion coefficient, forcing term and the ground-truth
//! parameter vector.
//!
//! The diffusion field is parametrized by four coefficients acting on the
//! eigenpairs of the 1D Laplacian on (0, 1):
//! `kappa(x) = exp( sum_k xi_k / (k pi) * sqrt(2) sin(k pi x) )`.
//! In 2D only the horizontal coordinate enters, so the field is constant in y.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of eigenmodes in the diffusion parametrization.
pub const NUM_MODES: usize = 4;

/// Coefficient vector driving the log-diffusion field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    xi: [f64; NUM_MODES],
}

impl ParamVector {
    pub fn new(xi: [f64; NUM_MODES]) -> Self {
        assert!(xi.iter().all(|v| v.is_finite()), "non-finite parameter");
        Self { xi }
    }

    pub fn zeros() -> Self {
        Self { xi: [0.0; NUM_MODES] }
    }

    pub fn xi(&self) -> &[f64; NUM_MODES] {
        &self.xi
    }
}

impl From<[f64; NUM_MODES]> for ParamVector {
    fn from(xi: [f64; NUM_MODES]) -> Self {
        Self::new(xi)
    }
}

/// Ground-truth parameters used to generate the synthetic observations.
pub fn reference_params() -> ParamVector {
    ParamVector::new([1.0, 1.0, 0.25, 0.25])
}

/// `log kappa`, linear in the parameters.
pub fn log_kappa(params: &ParamVector, x: f64) -> f64 {
    assert!(x.is_finite(), "non-finite evaluation point");
    let mut sum = 0.0;
    for (k, xi_k) in params.xi.iter().enumerate() {
        let k = (k + 1) as f64;
        // eigenpair: lambda_k = (k pi)^2, phi_k = sqrt(2) sin(k pi x)
        sum += xi_k / (k * PI) * std::f64::consts::SQRT_2 * (k * PI * x).sin();
    }
    sum
}

/// Diffusion coefficient at horizontal coordinate `x`; strictly positive.
pub fn kappa(params: &ParamVector, x: f64) -> f64 {
    log_kappa(params, x).exp()
}

/// Forcing term `f(x) = sin(2 pi x)`; uses the horizontal coordinate in 2D.
pub fn forcing(x: f64) -> f64 {
    (2.0 * PI * x).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_is_one_for_zero_params() {
        assert_eq!(kappa(&ParamVector::zeros(), 0.3), 1.0);
    }

    #[test]
    fn kappa_single_mode_closed_form() {
        // xi = [1,0,0,0] at x = 0.5: exp(sqrt(2)/pi)
        let p = ParamVector::new([1.0, 0.0, 0.0, 0.0]);
        let expected = (std::f64::consts::SQRT_2 / PI).exp();
        assert_relative_eq!(kappa(&p, 0.5), expected, max_relative = 1e-14);
    }

    #[test]
    fn kappa_at_boundary_is_one() {
        assert_eq!(kappa(&reference_params(), 0.0), 1.0);
        assert_relative_eq!(kappa(&reference_params(), 1.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reference_kappa_term_by_term() {
        // independent summation of the four modes at x = 0.5
        let p = reference_params();
        let x = 0.5;
        let mut s = 0.0;
        for k in 1..=4usize {
            let kf = k as f64;
            s += p.xi()[k - 1] / (kf * PI) * (2.0f64).sqrt() * (kf * PI * x).sin();
        }
        assert_relative_eq!(kappa(&p, x), s.exp(), max_relative = 1e-15);
    }

    #[test]
    fn reference_params_value() {
        assert_eq!(*reference_params().xi(), [1.0, 1.0, 0.25, 0.25]);
    }

    #[test]
    fn forcing_closed_forms() {
        assert_eq!(forcing(0.0), 0.0);
        assert_relative_eq!(forcing(0.25), 1.0, epsilon = 1e-15);
        assert_relative_eq!(forcing(0.375), (0.75 * PI).sin(), epsilon = 1e-15);
    }

    #[test]
    fn log_kappa_linear_in_params() {
        let a = 0.7;
        let b = -1.3;
        let p1 = ParamVector::new([1.0, -0.5, 0.25, 2.0]);
        let p2 = ParamVector::new([0.1, 0.2, -0.3, 0.4]);
        let mut combo = [0.0; NUM_MODES];
        for (c, (x1, x2)) in combo.iter_mut().zip(p1.xi().iter().zip(p2.xi())) {
            *c = a * x1 + b * x2;
        }
        let x = 0.37;
        assert_relative_eq!(
            log_kappa(&ParamVector::new(combo), x),
            a * log_kappa(&p1, x) + b * log_kappa(&p2, x),
            epsilon = 1e-13
        );
    }

    #[test]
    fn kappa_positive() {
        let p = ParamVector::new([3.0, -3.0, 2.0, -2.0]);
        for i in 0..=100 {
            assert!(kappa(&p, i as f64 / 100.0) > 0.0);
        }
    }
}
