//! Asymptotic exponents: θ, the rank-ℓ generalization θ(ℓ), its large-ℓ form,
//! the all-real rate φ(α) and the log n coefficients of the MGF and of det(I − αH_n).

use std::f64::consts::{LN_2, PI};

use crate::error::{domain, Result};
use crate::quad::{exp_sinh, tanh_sinh, Estimate};
use crate::specfun::riemann_zeta_3_2;

/// Which formula produced an [`ExponentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaId {
    Theta,
    ThetaEll,
    ThetaLargeEll,
    Phi,
    MgfCoeff,
    AlphaDetCoeff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub value: f64,
    pub quadrature_error: f64,
    pub formula_id: FormulaId,
}

const QUAD_TOL: f64 = 1e-14;
/// Where the integration range is split; the log singularity lives left of it.
const SPLIT: f64 = 0.5;

/// −(1/2π)∫₀^∞ g, with g evaluated as a function of (x, x) on [0, SPLIT] so the
/// singular end sees the exact distance to 0.
fn minus_half_over_pi_integral<F: Fn(f64) -> f64>(g: F) -> (f64, f64) {
    let near: Estimate = tanh_sinh(|x, da, _| g(if x < SPLIT / 2.0 { da } else { x }), 0.0, SPLIT, QUAD_TOL);
    let far = exp_sinh(|u| g(SPLIT + u), QUAD_TOL);
    let value = -(near.value + far.value) / (2.0 * PI);
    (value, (near.error + far.error) / (2.0 * PI))
}

/// ln(1 − sech y) = 2 ln(1 − e^{−y}) − ln(1 + e^{−2y}), free of cancellation.
fn ln_one_minus_sech(y: f64) -> f64 {
    2.0 * (-(-y).exp_m1()).ln() - (-2.0 * y).exp().ln_1p()
}

/// θ = −(1/2π)∫₀^∞ ln(1 − sech πu) du = 3/16.
pub fn theta() -> ExponentReport {
    let (value, err) = minus_half_over_pi_integral(|u| ln_one_minus_sech(PI * u));
    ExponentReport { value, quadrature_error: err, formula_id: FormulaId::Theta }
}

/// ln(sinh y / y), with a series near 0.
fn ln_sinhc(y: f64) -> f64 {
    if y < 0.1 {
        let y2 = y * y;
        y2 * (1.0 / 6.0 + y2 * (-1.0 / 180.0 + y2 * (1.0 / 2835.0 - y2 / 37800.0)))
    } else {
        // sinh y / y = (1 − e^{−2y}) e^{y} / (2y)
        y + (-(-2.0 * y).exp_m1()).ln() - (2.0 * y).ln()
    }
}

/// ln cosh y = y + ln(1 + e^{−2y}) − ln 2, with ½ln(1 + sinh²y) near 0.
fn ln_cosh(y: f64) -> f64 {
    if y < 1.0 {
        0.5 * y.sinh().powi(2).ln_1p()
    } else {
        y + (-2.0 * y).exp().ln_1p() - LN_2
    }
}

/// ln(|Γ(ℓ/2 + ix)|² / Γ(ℓ/2)²) for integer ℓ ≥ 1, by ascending from the
/// ℓ = 1 or ℓ = 2 closed forms.
pub fn log_gamma_modulus_ratio(ell: usize, x: f64) -> f64 {
    let y = PI * x;
    let (base, mut a) = if ell % 2 == 1 { (-ln_cosh(y), 0.5) } else { (-ln_sinhc(y), 1.0) };
    let target = ell as f64 / 2.0;
    let mut acc = base;
    // R_{a+1} = R_a (1 + x²/a²)
    while a < target {
        acc += (x / a).powi(2).ln_1p();
        a += 1.0;
    }
    acc
}

/// ln(1 − e^{t}) for t ≤ 0.
fn ln_one_minus_exp(t: f64) -> f64 {
    if t < -LN_2 {
        (-t.exp()).ln_1p()
    } else {
        (-t.exp_m1()).ln()
    }
}

/// θ(ℓ) = −(1/2π)∫₀^∞ ln(1 − |Γ(ℓ/2+ix)|²/Γ(ℓ/2)²) dx.
pub fn theta_ell(ell: usize) -> Result<ExponentReport> {
    if ell == 0 || ell > 10_000 {
        return domain(format!("theta_ell supports 1 <= ell <= 10000, got {ell}"));
    }
    let (value, err) = minus_half_over_pi_integral(|x| {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        }
        ln_one_minus_exp(log_gamma_modulus_ratio(ell, x))
    });
    Ok(ExponentReport { value, quadrature_error: err, formula_id: FormulaId::ThetaEll })
}

/// Conjectured large-ℓ form ¼√(ℓ/2π) ζ(3/2).
pub fn theta_large_ell(ell: usize) -> f64 {
    theta_large_ell_real(ell as f64)
}

pub(crate) fn theta_large_ell_real(ell: f64) -> f64 {
    0.25 * (ell / (2.0 * PI)).sqrt() * riemann_zeta_3_2()
}

/// Rate φ(α) in ln P(all real) ≈ n² φ(α) for ℓ = αn.
pub fn phi(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("phi needs finite alpha > 0, got {alpha}"));
    }
    let a = alpha;
    if a <= 1.0 {
        Ok(-LN_2 - a * (1.0 + 0.75 * a) * a.ln() - a / 2.0 + (1.0 + a).powi(2) * a.ln_1p()
            - (1.0 + a / 2.0).powi(2) * (2.0 + a).ln())
    } else {
        // the ln α terms cancel identically; what remains is well conditioned
        Ok(-LN_2 - a / 2.0 + (1.0 + a).powi(2) * (1.0 / a).ln_1p()
            - (1.0 + a / 2.0).powi(2) * (2.0 / a).ln_1p())
    }
}

/// Coefficient of ln n in ln E[e^{s N_real}]: 1/8 − (2/π²) arccos²(e^s/√2).
pub fn mgf_log_coefficient(s: f64) -> Result<f64> {
    let arg = s.exp() / 2f64.sqrt();
    if s.is_nan() || arg > 1.0 + 1e-15 {
        return domain(format!("mgf_log_coefficient needs s <= ln(2)/2, got {s}"));
    }
    let ac = arg.min(1.0).acos();
    Ok(0.125 - 2.0 / (PI * PI) * ac * ac)
}

/// Coefficient of ln n in ln det(I − αH_n): −(arcsin²α + π arcsin α)/(2π²).
pub fn alpha_det_coefficient(alpha: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&alpha) {
        return domain(format!("alpha_det_coefficient needs |alpha| <= 1, got {alpha}"));
    }
    let a = alpha.asin();
    Ok(-(a * a + PI * a) / (2.0 * PI * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::log_gamma_complex;
    use num_complex::Complex64;

    #[test]
    fn theta_is_three_sixteenths() {
        let t = theta();
        assert!((t.value - 0.1875).abs() < 1e-10, "{t:?}");
        assert!(t.quadrature_error < 1e-10);
        for &u in &[1e-8, 0.01, 0.3, 1.0, 5.0, 20.0] {
            assert!(ln_one_minus_sech(PI * u) < 0.0);
        }
    }

    #[test]
    fn theta_ell_examples() {
        let t1 = theta_ell(1).unwrap();
        assert!((t1.value - theta().value).abs() < 1e-10);
        let vals: Vec<f64> = (1..=8).map(|l| theta_ell(l).unwrap().value).collect();
        assert!(vals[1] > 0.0);
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
        assert!(theta_ell(0).is_err() && theta_ell(10_001).is_err());
    }

    #[test]
    fn modulus_recurrence_matches_complex_log_gamma() {
        for ell in [1usize, 2, 3, 4, 7] {
            for &x in &[0.5, 1.0, 2.0] {
                let a = ell as f64 / 2.0;
                let direct = 2.0 * log_gamma_complex(Complex64::new(a, x)).unwrap().re
                    - 2.0 * log_gamma_complex(Complex64::new(a, 0.0)).unwrap().re;
                assert!((log_gamma_modulus_ratio(ell, x) - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn large_ell_examples() {
        assert!((theta_large_ell_real(2.0 * PI) - riemann_zeta_3_2() / 4.0).abs() < 1e-15);
        assert!(theta_large_ell(5) > theta_large_ell(4));
    }

    #[test]
    fn phi_examples() {
        assert!((phi(1e-6).unwrap() + 2.0 * LN_2).abs() < 1e-4);
        assert!((phi(1e6).unwrap() + LN_2).abs() < 1e-4);
        let expect = 3.0 * LN_2 - 0.5 - 2.25 * 3f64.ln();
        assert!((phi(1.0).unwrap() - expect).abs() < 1e-15);
        assert!((expect + 0.892_436_1).abs() < 1e-6);
        // both branches agree near the switch
        let a = 1.0 + 1e-9;
        let lhs = phi(a).unwrap();
        let rhs = -LN_2 - a * (1.0 + 0.75 * a) * a.ln() - a / 2.0 + (1.0 + a).powi(2) * a.ln_1p()
            - (1.0 + a / 2.0).powi(2) * (2.0 + a).ln();
        assert!((lhs - rhs).abs() < 1e-13);
        assert!(phi(0.0).is_err());
    }

    #[test]
    fn coefficient_examples() {
        assert!(mgf_log_coefficient(0.0).unwrap().abs() < 1e-15);
        assert!((mgf_log_coefficient(-50.0).unwrap() + 0.375).abs() < 1e-12);
        assert!((mgf_log_coefficient(LN_2 / 2.0).unwrap() - 0.125).abs() < 1e-7);
        assert!(mgf_log_coefficient(0.5).is_err());
        assert_eq!(alpha_det_coefficient(0.0).unwrap(), 0.0);
        assert!((alpha_det_coefficient(1.0).unwrap() + 0.375).abs() < 1e-15);
        assert!((alpha_det_coefficient(-1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(alpha_det_coefficient(1.5).is_err());
    }
}
