//! Gamma-family special functions, carried in log space where the values
//! leave the range of a double.

use std::f64::consts::PI;
use std::ops::{Div, Mul};

use num_complex::Complex64;

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series is used at and above this argument; smaller arguments are shifted up.
const STIRLING_MIN: f64 = 15.0;

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, log_abs: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, log_abs: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, log_abs: x.abs().ln() }
        }
    }

    /// Positive value with the given logarithm.
    pub fn from_ln(log_abs: f64) -> Self {
        LogValue { sign: 1, log_abs }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_abs.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            return LogValue::ZERO;
        }
        LogValue { sign: self.sign * rhs.sign, log_abs: self.log_abs + rhs.log_abs }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(rhs.sign != 0, "division of LogValue by zero");
        if self.sign == 0 {
            return LogValue::ZERO;
        }
        LogValue { sign: self.sign * rhs.sign, log_abs: self.log_abs - rhs.log_abs }
    }
}

fn stirling_tail(z: f64) -> f64 {
    let zinv = 1.0 / z;
    let z2inv = zinv * zinv;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * z2inv + c;
    }
    acc * zinv
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires x > 0, got {x}"));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut prod = 1.0;
    while z < STIRLING_MIN {
        prod *= z;
        z += 1.0;
    }
    let lg = (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_tail(z);
    lg - prod.ln()
}

/// ln B(a, b).
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("log_beta requires a, b > 0, got ({a}, {b})"));
    }
    Ok(log_gamma_unchecked(a) + log_gamma_unchecked(b) - log_gamma_unchecked(a + b))
}

/// Continued fraction for the regularized incomplete Beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete Beta I_x(a, b).
pub fn inc_beta_regularized(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("incomplete beta requires x in [0,1], got {x}"));
    }
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("incomplete beta requires a, b > 0, got ({a}, {b})"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let lbeta = log_gamma_unchecked(a) + log_gamma_unchecked(b) - log_gamma_unchecked(a + b);
    let ln_front = a * x.ln() + b * (-x).ln_1p() - lbeta;
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(x, a, b) / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b)
    }
}

/// Non-regularized incomplete Beta B(x; a, b) = ∫₀ˣ t^{a−1}(1−t)^{b−1} dt.
pub fn inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    let reg = inc_beta_regularized(x, a, b)?;
    Ok(reg * log_beta(a, b)?.exp())
}

/// Σ_{j<n} ln Γ(j + a), i.e. ln(G(n+a)/G(a)) for the Barnes G-function.
pub fn log_gamma_sum(n: usize, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return domain(format!("log_gamma_sum requires a > 0, got {a}"));
    }
    // Neumaier-compensated summation
    let mut sum = 0.0;
    let mut comp = 0.0;
    for j in 0..n {
        let term = log_gamma_unchecked(j as f64 + a);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    Ok(sum + comp)
}

/// ζ(3/2) by Euler–Maclaurin summation.
pub fn riemann_zeta_3_2() -> f64 {
    const S: f64 = 1.5;
    const N: usize = 20;
    // B_2, B_4, ..., B_12
    const BERNOULLI: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let head: f64 = (1..N).map(|k| (k as f64).powf(-S)).sum();
    let n = N as f64;
    let mut total = head + n.powf(1.0 - S) / (S - 1.0) + 0.5 * n.powf(-S);
    // rising factorial s(s+1)...(s+2j-2) / (2j)!
    let mut rising = S;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j + 1;
        total += b / fact * rising * n.powf(-S - (2 * j) as f64 + 1.0);
        let k = (2 * j) as f64;
        rising *= (S + k - 1.0) * (S + k);
        fact *= (k + 1.0) * (k + 2.0);
    }
    total
}

/// ln of the volume Π_{j=1}^{N} π^{j/2}/Γ(j/2) of the orthogonal group O(N).
pub fn log_volume_orthogonal(dim: usize) -> Result<f64> {
    if dim < 1 {
        return domain("log_volume_orthogonal requires N >= 1");
    }
    Ok((1..=dim)
        .map(|j| {
            let h = j as f64 / 2.0;
            h * PI.ln() - log_gamma_unchecked(h)
        })
        .sum())
}

/// Principal-branch-continuous ln Γ(z) for Re z > 0.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return domain(format!("log_gamma_complex requires Re z > 0, got {z}"));
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < STIRLING_MIN {
        shift += w.ln();
        w += 1.0;
    }
    let winv = w.inv();
    let w2inv = winv * winv;
    let mut tail = Complex64::new(0.0, 0.0);
    for c in STIRLING_COEFFS.iter().rev() {
        tail = tail * w2inv + c;
    }
    tail *= winv;
    Ok((w - 0.5) * w.ln() - w + LN_SQRT_2PI + tail - shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_gamma_examples() {
        assert!(close(log_gamma(1.0).unwrap(), 0.0, 1e-14));
        assert!(close(log_gamma(0.5).unwrap(), PI.sqrt().ln(), 1e-14));
        let fact9: f64 = (1..=9).map(|k| k as f64).product();
        assert!(close(log_gamma(10.0).unwrap(), fact9.ln(), 1e-13));
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut lf = 0.0;
        for n in 1..150 {
            assert!((log_gamma(n as f64).unwrap() - lf).abs() <= 1e-14 * lf.abs().max(1.0));
            lf += (n as f64).ln();
        }
    }

    #[test]
    fn duplication_identity() {
        let mut z = 0.5;
        while z <= 50.0 {
            let lhs = log_gamma(2.0 * z).unwrap();
            let rhs = log_gamma(z).unwrap() + log_gamma(z + 0.5).unwrap()
                + (2.0 * z - 1.0) * 2f64.ln()
                - 0.5 * PI.ln();
            assert!(close(lhs, rhs, 1e-12), "z={z}: {lhs} vs {rhs}");
            z += 0.37;
        }
    }

    #[test]
    fn log_beta_examples() {
        assert!(close(log_beta(0.5, 1.0).unwrap(), 2f64.ln(), 1e-14));
        assert!(close(log_beta(0.5, 2.0).unwrap(), (4.0f64 / 3.0).ln(), 1e-14));
        assert_eq!(log_beta(2.5, 7.25).unwrap(), log_beta(7.25, 2.5).unwrap());
        assert!(log_beta(0.0, 1.0).is_err());
    }

    #[test]
    fn inc_beta_examples() {
        let full = log_beta(2.5, 3.5).unwrap().exp();
        assert!(close(inc_beta(1.0, 2.5, 3.5).unwrap(), full, 1e-13));
        assert_eq!(inc_beta(0.0, 2.5, 3.5).unwrap(), 0.0);
        assert!(close(inc_beta(0.25, 0.5, 1.0).unwrap(), 1.0, 1e-13));
        assert!(inc_beta(1.5, 1.0, 1.0).is_err());
        assert!(inc_beta(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn inc_beta_against_polynomial_antiderivative() {
        // a = 2, b = 3: ∫ t (1-t)^2 = x^2/2 - 2x^3/3 + x^4/4
        for &x in &[0.05f64, 0.3, 0.5, 0.77, 0.99] {
            let exact = x * x / 2.0 - 2.0 * x * x * x / 3.0 + x.powi(4) / 4.0;
            assert!(close(inc_beta(x, 2.0, 3.0).unwrap(), exact, 1e-15));
        }
    }

    #[test]
    fn log_gamma_sum_examples() {
        assert_eq!(log_gamma_sum(0, 1.7).unwrap(), 0.0);
        assert!(close(log_gamma_sum(3, 1.0).unwrap(), 2f64.ln(), 1e-14));
        assert!(close(log_gamma_sum(2, 0.5).unwrap(), (PI / 2.0).ln(), 1e-14));
        assert!(log_gamma_sum(3, 0.0).is_err());
    }

    #[test]
    fn zeta_examples() {
        let z = riemann_zeta_3_2();
        assert!(close(z, 2.612_375_348_685_488, 1e-12));
        // partial sums with the integral tail bound 2/sqrt(K)
        let k = 1_000_000usize;
        let partial: f64 = (1..=k).map(|j| (j as f64).powf(-1.5)).sum();
        assert!(z - partial > 0.0 && z - partial < 2e-3);
    }

    #[test]
    fn volume_examples() {
        assert!(close(log_volume_orthogonal(1).unwrap(), 0.0, 1e-14));
        assert!(close(log_volume_orthogonal(2).unwrap(), PI.ln(), 1e-14));
        assert!(close(log_volume_orthogonal(3).unwrap(), (2.0 * PI * PI).ln(), 1e-14));
        assert!(log_volume_orthogonal(0).is_err());
    }

    #[test]
    fn complex_log_gamma_modulus_closed_forms() {
        for &x in &[0.1, 0.5, 1.0, 3.0] {
            let lg = log_gamma_complex(Complex64::new(0.5, x)).unwrap();
            let expect = (PI / (PI * x).cosh()).ln();
            assert!(close(2.0 * lg.re, expect, 1e-12));
            let lg1 = log_gamma_complex(Complex64::new(1.0, x)).unwrap();
            assert!(close(2.0 * lg1.re, (PI * x / (PI * x).sinh()).ln(), 1e-12));
        }
        let real = log_gamma_complex(Complex64::new(3.3, 0.0)).unwrap();
        assert!(close(real.re, log_gamma(3.3).unwrap(), 1e-13) && real.im.abs() < 1e-15);
    }

    #[test]
    fn log_value_round_trip() {
        for &x in &[-3.5, 0.0, 1e-200, 42.0] {
            let v = LogValue::from_f64(x);
            assert!(close(v.to_f64(), x, 1e-12 * x.abs()));
        }
        let p = LogValue::from_f64(-2.0) * LogValue::from_f64(3.0);
        assert!(close(p.to_f64(), -6.0, 1e-14));
        assert!((LogValue::ZERO * LogValue::ONE).is_zero());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_symmetric(a in 0.01f64..60.0, b in 0.01f64..60.0) {
                let d = log_beta(a, b).unwrap() - log_beta(b, a).unwrap();
                prop_assert!(d.abs() <= 1e-14 * log_beta(a, b).unwrap().abs().max(1.0));
            }

            #[test]
            fn inc_beta_reflection(x in 0.0f64..=1.0, a in 0.2f64..20.0, b in 0.2f64..20.0) {
                let full = log_beta(a, b).unwrap().exp();
                let s = inc_beta(x, a, b).unwrap() + inc_beta(1.0 - x, b, a).unwrap();
                prop_assert!((s - full).abs() <= 1e-12 * full.max(1.0));
            }

            #[test]
            fn gamma_sum_increment(n in 1usize..200, a in 0.05f64..30.0) {
                let d = log_gamma_sum(n, a).unwrap() - log_gamma_sum(n - 1, a).unwrap();
                let lg = log_gamma(n as f64 - 1.0 + a).unwrap();
                prop_assert!((d - lg).abs() <= 1e-11 * lg.abs().max(1.0));
            }
        }
    }
}
