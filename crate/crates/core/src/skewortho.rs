//! Skew-orthogonal polynomials for the truncated orthogonal weight: closed-form
//! skew products, an independent quadrature evaluation, and the Pfaffian-ratio
//! formula for the persistence probability.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::ensemble::EnsembleParams;
use crate::error::{domain, Error, Result};
use crate::pfaffian::{checkerboard_pfaffian_tol, pfaffian, SkewMatrix};
use crate::quad::QuadratureRule;
use crate::specfun::{inc_beta, log_beta, log_gamma};

/// Default number of Gauss–Legendre nodes per axis.
pub const DEFAULT_DENSITY: usize = 200;

/// The monic skew-orthogonal polynomial π_index for truncation rank ell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkewPoly {
    pub index: usize,
    pub ell: usize,
}

impl SkewPoly {
    pub fn is_even(&self) -> bool {
        self.index.is_multiple_of(2)
    }

    /// Nonzero coefficients as (power, coefficient); at most two terms.
    pub fn terms(&self) -> Vec<(usize, f64)> {
        let k = self.index;
        if k.is_multiple_of(2) || k == 1 {
            vec![(k, 1.0)]
        } else {
            let m = (k - 1) as f64;
            vec![(k, 1.0), (k - 2, -m / (m + self.ell as f64))]
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms().iter().map(|&(p, c)| c * z.powu(p as u32)).sum()
    }
}

/// π_k(z): z^k for even k, z^{2m+1} − (2m/(2m+ℓ)) z^{2m−1} for k = 2m+1.
pub fn pi_eval(k: usize, ell: usize, z: Complex64) -> Complex64 {
    SkewPoly { index: k, ell }.eval(z)
}

fn real_pi(k: usize, ell: usize, x: f64) -> f64 {
    SkewPoly { index: k, ell }.terms().iter().map(|&(p, c)| c * x.powi(p as i32)).sum()
}

/// ln(ℓ! / (2^ℓ Γ(ℓ/2)²)); the weight on the real axis is w² = e^{this}(1−x²)^{ℓ−2}.
fn log_real_weight_const(ell: usize) -> f64 {
    let l = ell as f64;
    log_gamma(l + 1.0).unwrap() - l * std::f64::consts::LN_2 - 2.0 * log_gamma(l / 2.0).unwrap()
}

/// w_ℓ(z)² for the complex eigenvalue density; zero outside the unit disk.
///
/// Returns +∞ at z = ±1 for ℓ = 1.
pub fn weight_sq(ell: usize, z: Complex64) -> f64 {
    let (x, y) = (z.re, z.im);
    let r2 = x * x + y * y;
    if r2 > 1.0 {
        return 0.0;
    }
    let one_minus_z2 = (Complex64::new(1.0, 0.0) - z * z).norm();
    if y == 0.0 {
        return log_real_weight_const(ell).exp() * one_minus_z2.powi(ell as i32 - 2);
    }
    if ell == 1 {
        return 1.0 / (2.0 * PI * one_minus_z2);
    }
    let l = ell as f64;
    // ∫_c^1 (1−u²)^{(ℓ−3)/2} du with c = 2|y|/|1−z²|, written through 1 − c² to
    // stay accurate near the unit circle
    let one_minus_c2 = ((1.0 - r2) / one_minus_z2).powi(2).min(1.0);
    let inner = 0.5 * inc_beta(one_minus_c2, (l - 1.0) / 2.0, 0.5).unwrap();
    l * (l - 1.0) / (2.0 * PI) * one_minus_z2.powi(ell as i32 - 2) * inner
}

/// 1/binom(2k+ℓ, ℓ) = ℓ!(2k)!/(2k+ℓ)!.
fn inv_binomial(k: usize, ell: usize) -> f64 {
    (1..=ell).map(|m| m as f64 / (2 * k + m) as f64).product()
}

/// Full skew product (π_i, π_j): only the (2k, 2k+1) pairs and their transposes survive.
pub fn skew_product_closed(i: usize, j: usize, ell: usize) -> f64 {
    if i > j {
        return -skew_product_closed(j, i, ell);
    }
    if i.is_multiple_of(2) && j == i + 1 {
        inv_binomial(i / 2, ell)
    } else {
        0.0
    }
}

/// Real-axis part of (π_i, π_j); nonzero only for opposite parities.
pub fn skew_product_real_closed(i: usize, j: usize, ell: usize) -> f64 {
    if (i + j).is_multiple_of(2) {
        return 0.0;
    }
    if i % 2 == 1 {
        return -skew_product_real_closed(j, i, ell);
    }
    let (p, q) = ((i / 2) as f64, ((j - 1) / 2) as f64);
    let l = ell as f64;
    let log = log_gamma(l + 1.0).unwrap() - (l - 1.0) * std::f64::consts::LN_2
        - 2.0 * log_gamma(l / 2.0).unwrap()
        - (2.0 * q + l).ln()
        + log_beta(p + q + 0.5, l).unwrap();
    log.exp()
}

/// Node sets for the real-axis and complex-plane parts at one (ℓ, density).
#[derive(Debug, Clone)]
pub struct SkewQuadrature {
    ell: usize,
    density: usize,
    /// (x, weight) with weight including w(x)·dx/dφ.
    real_nodes: Vec<(f64, f64)>,
    /// (z, weight) over the upper half-disk with w²(z)·Jacobian folded in.
    complex_nodes: Vec<(Complex64, f64)>,
}

impl SkewQuadrature {
    pub fn new(ell: usize, density: usize) -> Result<Self> {
        if ell == 0 || ell > 4 {
            return domain(format!("skew-product quadrature supports 1 <= ell <= 4, got {ell}"));
        }
        if density < 8 {
            return domain(format!("rule density must be at least 8, got {density}"));
        }
        let c = (0.5 * log_real_weight_const(ell)).exp();
        // x = sin φ absorbs the (1−x²)^{ℓ/2−1} endpoint behaviour
        let phi_rule = QuadratureRule::gauss_legendre(density, -FRAC_PI_2, FRAC_PI_2);
        let real_nodes = phi_rule
            .nodes
            .iter()
            .zip(&phi_rule.weights)
            .map(|(&phi, &wt)| (phi.sin(), wt * c * phi.cos().powi(ell as i32 - 1)))
            .collect();
        Ok(SkewQuadrature { ell, density, real_nodes, complex_nodes: complex_grid(ell, density) })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn density(&self) -> usize {
        self.density
    }

    /// ε[w π_i](x) = ½∫ sgn(t−x) w(t) π_i(t) dt in closed form.
    fn eps(&self, i: usize, x: f64) -> f64 {
        let l = self.ell as f64;
        let c = (0.5 * log_real_weight_const(self.ell)).exp();
        let k = i / 2;
        if i.is_multiple_of(2) {
            let b = inc_beta(x * x, k as f64 + 0.5, l / 2.0).unwrap();
            -0.5 * c * x.signum() * b
        } else {
            c / (2.0 * k as f64 + l) * x.powi(2 * k as i32) * (1.0 - x * x).max(0.0).powf(l / 2.0)
        }
    }

    /// Real-axis part −2∫ w π_j ε[w π_i] dx.
    pub fn real_part(&self, i: usize, j: usize) -> f64 {
        -2.0 * self
            .real_nodes
            .iter()
            .map(|&(x, wt)| wt * real_pi(j, self.ell, x) * self.eps(i, x))
            .sum::<f64>()
    }

    /// Complex-plane part −4∫_{Im z>0} Im(π_i(z) π_j(z̄)) w²(z) d²z.
    pub fn complex_part(&self, i: usize, j: usize) -> f64 {
        -4.0 * self
            .complex_nodes
            .iter()
            .map(|&(z, wt)| wt * (pi_eval(i, self.ell, z) * pi_eval(j, self.ell, z.conj())).im)
            .sum::<f64>()
    }
}

/// Upper half-disk split into quarters; each quarter is integrated in polar
/// coordinates about its singular corner z = ±1, with the angular range cut
/// where the outer boundary switches from the unit circle to the imaginary axis.
fn complex_grid(ell: usize, density: usize) -> Vec<(Complex64, f64)> {
    let radial = QuadratureRule::gauss_legendre(density, 0.0, 1.0);
    let mut out = Vec::with_capacity(4 * density * density);
    // (centre, angular pieces, outer radius as a function of ψ)
    let pieces: [(f64, f64, f64, fn(f64) -> f64); 4] = [
        (1.0, FRAC_PI_2, 3.0 * FRAC_PI_4, |psi| -2.0 * psi.cos()),
        (1.0, 3.0 * FRAC_PI_4, PI, |psi| -1.0 / psi.cos()),
        (-1.0, 0.0, FRAC_PI_4, |psi| 1.0 / psi.cos()),
        (-1.0, FRAC_PI_4, FRAC_PI_2, |psi| 2.0 * psi.cos()),
    ];
    for (centre, a, b, outer) in pieces {
        let angular = QuadratureRule::gauss_legendre(density, a, b);
        for (&psi, &wpsi) in angular.nodes.iter().zip(&angular.weights) {
            let big_r = outer(psi);
            let dir = Complex64::from_polar(1.0, psi);
            for (&u, &wu) in radial.nodes.iter().zip(&radial.weights) {
                let r = u * big_r;
                let z = Complex64::new(centre, 0.0) + r * dir;
                let w2 = weight_sq(ell, z);
                out.push((z, wpsi * wu * big_r * r * w2));
            }
        }
    }
    out
}

/// Quadrature evaluation of the (real, complex) parts of (π_i, π_j).
///
/// Errors with `AccuracyBudget` when the result moves by more than 1e−6
/// between `rule_density` and half of it.
pub fn skew_product_quadrature(
    i: usize,
    j: usize,
    ell: usize,
    rule_density: usize,
) -> Result<(f64, f64)> {
    if i + j > 16 {
        return domain(format!("quadrature accuracy budget covers i + j <= 16, got {}", i + j));
    }
    let fine = SkewQuadrature::new(ell, rule_density)?;
    let coarse = SkewQuadrature::new(ell, rule_density / 2)?;
    let value = (fine.real_part(i, j), fine.complex_part(i, j));
    let estimate = (value.0 - coarse.real_part(i, j))
        .abs()
        .max((value.1 - coarse.complex_part(i, j)).abs());
    if estimate > 1e-6 {
        return Err(Error::AccuracyBudget { estimate, budget: 1e-6 });
    }
    Ok(value)
}

/// P(no real eigenvalues) as Pf{(π_i,π_j)_ℂ} / Pf{(π_i,π_j)}.
pub fn pfaffian_ratio_p(params: EnsembleParams) -> Result<f64> {
    pfaffian_ratio_p_with_density(params, DEFAULT_DENSITY)
}

pub fn pfaffian_ratio_p_with_density(params: EnsembleParams, density: usize) -> Result<f64> {
    let EnsembleParams { n, ell } = EnsembleParams::new(params.n, params.ell)?;
    if n > 4 {
        return domain(format!("Pfaffian ratio is limited to n <= 4, got {n}"));
    }
    let dim = 2 * n;
    let fine = SkewQuadrature::new(ell, density)?;
    let coarse = SkewQuadrature::new(ell, density / 2)?;
    let mut estimate = 0.0f64;
    let numer = SkewMatrix::from_fn(dim, |i, j| {
        let v = fine.complex_part(i, j);
        estimate = estimate.max((v - coarse.complex_part(i, j)).abs());
        v
    });
    if estimate > 1e-6 {
        return Err(Error::AccuracyBudget { estimate, budget: 1e-6 });
    }
    let denom = SkewMatrix::from_fn(dim, |i, j| skew_product_closed(i, j, ell));
    Ok(checkerboard_pfaffian_tol(&numer, 1e-9)? / pfaffian(&denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::p_no_real;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn polynomial_examples() {
        let z = c(0.3, -1.2);
        assert_eq!(pi_eval(0, 3, z), c(1.0, 0.0));
        assert_eq!(pi_eval(1, 4, z), z);
        let expect = z * z * z - (2.0 / 3.0) * z;
        assert!((pi_eval(3, 1, z) - expect).norm() < 1e-15);
        assert_eq!(SkewPoly { index: 5, ell: 2 }.terms(), vec![(5, 1.0), (3, -4.0 / 6.0)]);
    }

    #[test]
    fn weight_examples() {
        for ell in 1..=4usize {
            let x: f64 = 0.37;
            let l = ell as f64;
            let expect = (log_gamma(l + 1.0).unwrap() - l * 2f64.ln()
                - 2.0 * log_gamma(l / 2.0).unwrap())
            .exp()
                * (1.0 - x * x).powi(ell as i32 - 2);
            assert!((weight_sq(ell, c(x, 0.0)) - expect).abs() < 1e-14);
            assert_eq!(weight_sq(ell, c(0.8, 0.7)), 0.0);
        }
        assert!((weight_sq(3, c(0.0, 0.5)) - 3.0 / (4.0 * PI)).abs() < 1e-14);
        // approaching the real axis from inside the disk
        for ell in 2..=4 {
            let near = weight_sq(ell, c(0.4, 1e-9));
            let on = weight_sq(ell, c(0.4, 0.0));
            assert!((near - on).abs() < 1e-6 * on);
        }
    }

    #[test]
    fn closed_form_examples() {
        for ell in 1..=5 {
            assert_eq!(skew_product_closed(0, 1, ell), 1.0);
            assert_eq!(skew_product_closed(1, 0, ell), -1.0);
            assert_eq!(skew_product_closed(0, 2, ell), 0.0);
            assert_eq!(skew_product_closed(0, 3, ell), 0.0);
        }
        assert!((skew_product_closed(2, 3, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((skew_product_real_closed(0, 1, 1) - 2.0 / PI).abs() < 1e-14);
        assert!((skew_product_real_closed(2, 1, 1) - 2.0 / (3.0 * PI)).abs() < 1e-14);
        let p = p_no_real(EnsembleParams::new(1, 1).unwrap()).unwrap();
        let r = 1.0 - skew_product_real_closed(0, 1, 1) / skew_product_closed(0, 1, 1);
        assert!((r - p).abs() < 1e-14);
    }

    #[test]
    fn quadrature_examples() {
        let (re, co) = skew_product_quadrature(0, 1, 1, DEFAULT_DENSITY).unwrap();
        assert!((re - 2.0 / PI).abs() < 1e-7 && (re + co - 1.0).abs() < 1e-7);
        let (re, co) = skew_product_quadrature(0, 2, 2, DEFAULT_DENSITY).unwrap();
        assert!(re.abs() < 1e-8 && co.abs() < 1e-8);
        let (re, co) = skew_product_quadrature(2, 3, 2, DEFAULT_DENSITY).unwrap();
        assert!((re + co - 1.0 / 6.0).abs() < 1e-7);
        assert!(skew_product_quadrature(9, 9, 1, DEFAULT_DENSITY).is_err());
        assert!(SkewQuadrature::new(5, 100).is_err());
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for ell in 1..=3 {
            let q = SkewQuadrature::new(ell, DEFAULT_DENSITY).unwrap();
            for i in 0..=7 {
                for j in 0..=7 {
                    let (re, co) = (q.real_part(i, j), q.complex_part(i, j));
                    let closed = skew_product_closed(i, j, ell);
                    assert!((re + co - closed).abs() < 1e-6, "({i},{j}) ell={ell}");
                    assert!((re - skew_product_real_closed(i, j, ell)).abs() < 1e-6);
                    if (i + j) % 2 == 0 {
                        assert!(re.abs() < 1e-8 && co.abs() < 1e-8);
                    }
                    assert!((re + q.real_part(j, i)).abs() < 1e-8);
                    assert!((co + q.complex_part(j, i)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn complex_part_complements_real_part() {
        let q = SkewQuadrature::new(2, DEFAULT_DENSITY).unwrap();
        for p in 0..4 {
            for qq in 0..4 {
                let delta = if p == qq { inv_binomial(qq, 2) } else { 0.0 };
                let expect = delta - skew_product_real_closed(2 * p, 2 * qq + 1, 2);
                assert!((q.complex_part(2 * p, 2 * qq + 1) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pfaffian_ratio_matches_determinant() {
        for &(n, ell) in &[(1, 1), (2, 1), (1, 2), (2, 2)] {
            let p = EnsembleParams::new(n, ell).unwrap();
            let ratio = pfaffian_ratio_p(p).unwrap();
            assert!((ratio - p_no_real(p).unwrap()).abs() < 1e-5, "n={n} ell={ell}: {ratio}");
        }
        let denom = SkewMatrix::from_fn(6, |i, j| skew_product_closed(i, j, 3));
        let expect: f64 = (0..3).map(|k| inv_binomial(k, 3)).product();
        assert!((pfaffian(&denom) - expect).abs() < 1e-15);
    }
}
