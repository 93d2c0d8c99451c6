//! Diagonalization of the infinite Hilbert matrix H_pq = 1/(π(p+q+1/2)):
//! eigenfunctions P̂_l, spectral moments and large-l asymptotics.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::densela::{jacobi_eigenvalues, DenseMatrix};
use crate::error::{domain, Error, Result};
use crate::quad::exp_sinh;
use crate::specfun::log_gamma_complex;

/// The spectral measure underflows to zero well before this point.
const X_CUTOFF: f64 = 240.0;

/// Wilson recurrence coefficients for parameters (0, 1/4, 1/2, 3/4) in y² = x²/4.
fn wilson_a(n: f64) -> f64 {
    (n + 0.5) * (n + 0.25) * (n + 0.5) * (n + 0.75) / ((2.0 * n + 0.5) * (2.0 * n + 1.5))
}

fn wilson_c(n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    n * (n - 0.25) * n * (n + 0.25) / ((2.0 * n - 0.5) * (2.0 * n + 0.5))
}

/// Ratio of consecutive normalizations 4^l (1/4)_l (1/2)_l (3/4)_l / (l! (1/2)_{2l}).
fn norm_ratio(l: f64) -> f64 {
    4.0 * (l + 0.25) * (l + 0.5) * (l + 0.75) / ((l + 1.0) * (2.0 * l + 0.5) * (2.0 * l + 1.5))
}

/// The l-th eigenfunction P̂_l together with its normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatP {
    pub l: usize,
    /// ln(4^l (1/4)_l (1/2)_l (3/4)_l / (l! (1/2)_{2l})).
    pub log_prefactor: f64,
}

impl HatP {
    pub fn new(l: usize) -> Self {
        let log_prefactor = (0..l).map(|k| norm_ratio(k as f64).ln()).sum();
        HatP { l, log_prefactor }
    }

    /// P̂_l(x²) via the three-term recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        *hatp_sequence(self.l + 1, x).last().expect("nonempty")
    }

    /// P̂_l(x²) from the terminating 4F3 series.
    ///
    /// The terms grow roughly like e^{1.7 l} and cancel, so this is only useful
    /// as an independent check at small l. Fails with `Overflow` once a term
    /// leaves the double range.
    pub fn eval_series(&self, x: f64) -> Result<f64> {
        let l = self.l as f64;
        let y2 = x * x / 4.0;
        let mut log_term = 0.0f64;
        let mut sign = 1.0;
        let mut terms = Vec::with_capacity(self.l + 1);
        terms.push(1.0);
        for j in 0..self.l {
            let jf = j as f64;
            let num = (jf - l) * (jf + l + 0.5) * (jf * jf + y2);
            if num == 0.0 {
                break;
            }
            let den = (jf + 0.25) * (jf + 0.5) * (jf + 0.75) * (jf + 1.0);
            log_term += (num / den).abs().ln();
            if num < 0.0 {
                sign = -sign;
            }
            if log_term > 700.0 {
                return Err(Error::Overflow(log_term));
            }
            terms.push(sign * log_term.exp());
        }
        Ok(self.log_prefactor.exp() * pairwise_sum(&terms))
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// P̂_0(x²), …, P̂_{count−1}(x²).
pub fn hatp_sequence(count: usize, x: f64) -> Vec<f64> {
    let y2 = x * x / 4.0;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(1.0);
    let mut prev_ratio = 1.0;
    for n in 0..count - 1 {
        let nf = n as f64;
        let (a, c) = (wilson_a(nf), wilson_c(nf));
        let ratio = norm_ratio(nf);
        let cur = out[n];
        let back = if n == 0 { 0.0 } else { c * prev_ratio * out[n - 1] };
        out.push(ratio * ((a + c - y2) * cur - back) / a);
        prev_ratio = ratio;
    }
    out
}

fn check_hatp_domain(l: usize, x: f64) -> Result<()> {
    if l > 5000 {
        return domain(format!("hatP_eval supports l <= 5000, got {l}"));
    }
    if !(0.0..=50.0).contains(&x) {
        return domain(format!("hatP_eval supports 0 <= x <= 50, got {x}"));
    }
    Ok(())
}

/// P̂_l(x²).
pub fn hatp_eval(l: usize, x: f64) -> Result<f64> {
    check_hatp_domain(l, x)?;
    Ok(HatP::new(l).eval(x))
}

/// Spectral density 2 sech(πx).
pub fn rho(x: f64) -> f64 {
    let e = (-PI * x.abs()).exp();
    4.0 * e / (1.0 + e * e)
}

fn sech_pi(x: f64) -> f64 {
    0.5 * rho(x)
}

/// μ_m = (1/π)∫₀^∞ sech^m(πu) du.
pub fn moment_mu(m: usize) -> Result<f64> {
    if m == 0 {
        return domain("moment order must be >= 1");
    }
    let e = exp_sinh(|u| sech_pi(u).powi(m as i32), 1e-15);
    Ok(e.value / PI)
}

/// Tr(H_n^m) for the n×n section of the Hilbert matrix.
pub fn trace_power(n: usize, m: usize) -> Result<f64> {
    if n == 0 || n > 4096 {
        return domain(format!("trace_power supports 1 <= n <= 4096, got {n}"));
    }
    if m == 0 || m > 8 {
        return domain(format!("trace_power supports 1 <= m <= 8, got {m}"));
    }
    let h = DenseMatrix::from_fn(n, n, |p, q| 1.0 / (PI * (p as f64 + q as f64 + 0.5)));
    if m == 1 {
        return Ok(h.trace());
    }
    if n <= 512 {
        let vals = jacobi_eigenvalues(n, h.data().to_vec());
        return Ok(vals.iter().map(|v| v.powi(m as i32)).sum());
    }
    // Tr(H^m) = ⟨H^a, H^b⟩_F with a = ⌊m/2⌋, b = ⌈m/2⌉, H symmetric
    let a = m / 2;
    let mut lo = h.clone();
    for _ in 1..a {
        lo = lo.matmul(&h);
    }
    let hi = if m.is_multiple_of(2) { lo.clone() } else { lo.matmul(&h) };
    Ok(lo.data().iter().zip(hi.data()).map(|(x, y)| x * y).sum())
}

/// Leading large-l behaviour √(cosh(πx)/(πl))·cos(x ln l + arg A(ix/2)).
///
/// arg A(ix/2) = 2x ln 2 − arg Γ(1/2 + ix).
pub fn hatp_asymptotic(l: usize, x: f64) -> Result<f64> {
    if l < 2 {
        return domain(format!("asymptotic form needs l >= 2, got {l}"));
    }
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("asymptotic form needs finite x > 0, got {x}"));
    }
    let lf = l as f64;
    let arg_gamma = log_gamma_complex(Complex64::new(0.5, x))?.im;
    let phase = x * lf.ln() + 2.0 * x * LN_2 - arg_gamma;
    Ok(((PI * x).cosh() / (PI * lf)).sqrt() * phase.cos())
}

/// |∫₀^∞ P̂_l P̂_m ρ dx − δ_lm|.
pub fn unitarity_defect(l: usize, m: usize) -> Result<f64> {
    if l > 12 || m > 12 {
        return domain(format!("unitarity check supports l, m <= 12, got ({l}, {m})"));
    }
    let top = l.max(m) + 1;
    let e = exp_sinh(
        |x| {
            // the polynomial factor has degree 2(l+m), so cutting where sech is
            // merely small loses mass for l, m near 12
            if x > X_CUTOFF {
                return 0.0;
            }
            let seq = hatp_sequence(top, x);
            seq[l] * seq[m] * rho(x)
        },
        1e-15,
    );
    let delta = if l == m { 1.0 } else { 0.0 };
    Ok((e.value - delta).abs())
}

/// |Σ_{k<K} H_lk P̂_k(x²) − sech(πx) P̂_l(x²)|.
pub fn multiplication_defect(l: usize, x: f64, k_max: usize) -> Result<f64> {
    if k_max < l + 10 {
        return domain(format!("need K >= l + 10, got K={k_max}, l={l}"));
    }
    check_hatp_domain(0, x)?;
    let seq = hatp_sequence(k_max, x);
    let sum: f64 =
        seq.iter().enumerate().map(|(k, p)| p / (PI * ((l + k) as f64 + 0.5))).sum();
    Ok((sum - sech_pi(x) * seq[l]).abs())
}
