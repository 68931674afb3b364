//! Dynamic (Aitken) relaxation.

use nalgebra::DVector;

pub const OMEGA_MIN: f64 = 0.01;
pub const OMEGA_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitkenOmega {
    pub omega: f64,
    /// `R^k == R^{k-1}`: the previous factor was kept.
    pub stagnated: bool,
}

/// Secant relaxation factor
/// `ω_k = −ω_{k−1} ⟨R^{k−1}, R^k − R^{k−1}⟩ / ‖R^k − R^{k−1}‖²`,
/// clamped to `[OMEGA_MIN, OMEGA_MAX]`.
pub fn aitken_omega(r_k: &DVector<f64>, r_km1: &DVector<f64>, omega_km1: f64) -> AitkenOmega {
    let dr = r_k - r_km1;
    let denom = dr.norm_squared();
    if denom == 0.0 || !denom.is_finite() {
        return AitkenOmega { omega: omega_km1, stagnated: true };
    }
    let omega = -omega_km1 * r_km1.dot(&dr) / denom;
    AitkenOmega { omega: omega.clamp(OMEGA_MIN, OMEGA_MAX), stagnated: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn hand_evaluated_factors() {
        let w = aitken_omega(&s(0.5), &s(1.0), 0.5);
        assert!((w.omega - 1.0).abs() < 1e-15);
        assert!(!w.stagnated);
        let w = aitken_omega(&s(-1.0), &s(1.0), 1.0);
        assert!((w.omega - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stagnation_keeps_previous_factor() {
        let r = DVector::from_column_slice(&[0.3, -0.2]);
        let w = aitken_omega(&r, &r, 0.37);
        assert_eq!(w, AitkenOmega { omega: 0.37, stagnated: true });
    }

    #[test]
    fn factor_is_clamped() {
        // growing residual in the same direction gives a negative raw factor
        assert_eq!(aitken_omega(&s(2.0), &s(1.0), 1.0).omega, OMEGA_MIN);
        // tiny decrease gives a huge raw factor
        assert_eq!(aitken_omega(&s(0.999), &s(1.0), 1.0).omega, OMEGA_MAX);
    }
}
