//! Exact finite-n formulas for the truncated orthogonal ensemble: persistence
//! probability, moment generating function and the real-count distribution.

use twofloat::TwoFloat;

use crate::densela::{
    elementary_symmetric, jacobi_eigenvalues, sym_logdet_cholesky, DenseMatrix, Real,
};
use crate::error::{domain, Error, Result};
use crate::specfun::{log_beta, log_gamma, log_gamma_sum};

/// Matrix size 2n taken from a Haar orthogonal matrix of size 2n + ell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleParams {
    pub n: usize,
    pub ell: usize,
}

impl EnsembleParams {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if n == 0 || ell == 0 {
            return domain(format!("need n >= 1 and ell >= 1, got n={n}, ell={ell}"));
        }
        Ok(EnsembleParams { n, ell })
    }

    fn check(&self) -> Result<()> {
        Self::new(self.n, self.ell).map(|_| ())
    }
}

/// P(2k real eigenvalues) for k = 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCountDistribution {
    pub params: EnsembleParams,
    pub probs: Vec<f64>,
}

impl RealCountDistribution {
    /// Expected number of real eigenvalues.
    pub fn mean_real(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| 2.0 * k as f64 * p).sum()
    }
}

fn log_hankel_scale(ell: usize) -> f64 {
    let l = ell as f64;
    (l - 1.0) * std::f64::consts::LN_2 + 2.0 * log_gamma(l / 2.0).expect("ell >= 1")
}

/// H_pq = B(p+q+1/2, ell) / (2^{ell-1} Γ(ell/2)²), p, q < n.
pub fn hankel_matrix(params: EnsembleParams) -> Result<DenseMatrix> {
    params.check()?;
    let scale = log_hankel_scale(params.ell);
    let l = params.ell as f64;
    let anti: Vec<f64> = (0..2 * params.n - 1)
        .map(|s| (log_beta(s as f64 + 0.5, l).expect("positive args") - scale).exp())
        .collect();
    Ok(DenseMatrix::from_fn(params.n, params.n, |p, q| anti[p + q]))
}

/// D_pp = sqrt(Γ(2p+ell)/Γ(2p+1)).
pub fn weight_diag(params: EnsembleParams) -> Result<Vec<f64>> {
    params.check()?;
    let l = params.ell as f64;
    Ok((0..params.n)
        .map(|p| {
            let x = 2.0 * p as f64;
            (0.5 * (log_gamma(x + l).unwrap() - log_gamma(x + 1.0).unwrap())).exp()
        })
        .collect())
}

/// The symmetric kernel D H D, symmetrized after assembly.
pub fn dhd_matrix(params: EnsembleParams) -> Result<DenseMatrix> {
    let h = hankel_matrix(params)?;
    let d = weight_diag(params)?;
    let mut m = DenseMatrix::from_fn(params.n, params.n, |p, q| d[p] * h[(p, q)] * d[q]);
    m.symmetrize();
    Ok(m)
}

/// Probability that the 2n×2n truncation has no real eigenvalues, det(I − DHD).
pub fn p_no_real(params: EnsembleParams) -> Result<f64> {
    let k = dhd_matrix(params)?;
    let n = params.n;
    let m = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - k[(i, j)]);
    Ok(sym_logdet_cholesky(&m)?.exp())
}

/// E[e^{s·N_real}] = Π_j (1 − (1 − e^{2s}) λ_j) over the spectrum of DHD.
pub fn mgf(params: EnsembleParams, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return domain(format!("s must be finite, got {s}"));
    }
    let k = dhd_matrix(params)?;
    let lambdas = jacobi_eigenvalues(params.n, k.data().to_vec());
    let c = -(2.0 * s).exp_m1();
    Ok(lambdas.iter().map(|&l| 1.0 - c * l).product())
}

/// D H D assembled in double-double precision from its rational structure.
///
/// For integer ell every factor is an integer, a half-integer or π, so the
/// only rounding happens in double-double arithmetic. Returns `None` when an
/// intermediate product leaves the double range.
fn dhd_double_double(params: EnsembleParams) -> Option<Vec<TwoFloat>> {
    let (n, ell) = (params.n, params.ell);
    let one = TwoFloat::from(1.0);
    let int = |k: usize| TwoFloat::from(k as f64);
    let factorial = |m: usize| (1..=m).fold(one, |acc, k| acc * int(k));
    // Γ(ell/2)²
    let gamma_sq = if ell % 2 == 0 {
        let g = factorial(ell / 2 - 1);
        g * g
    } else {
        let m = (ell - 1) / 2;
        // Γ(m + 1/2) = √π (2m)! / (4^m m!)
        let r = factorial(2 * m).quot(factorial(m) * TwoFloat::from(4f64.powi(m as i32)));
        twofloat::consts::PI * r * r
    };
    let pow2 = TwoFloat::from(2f64.powi(ell as i32 - 1));
    let numer = factorial(ell - 1).quot(pow2 * gamma_sq);
    // D_p² = Π_{k=1}^{ell-1} (2p + k)
    let d: Vec<TwoFloat> =
        (0..n).map(|p| (1..ell).fold(one, |acc, k| acc * int(2 * p + k)).sqrt()).collect();
    // B(s, ell) (ell−1)! / Π_{k<ell} (s + k) with s = p + q + 1/2
    let half = TwoFloat::from(0.5);
    let anti: Vec<TwoFloat> = (0..2 * n - 1)
        .map(|s| {
            let den = (0..ell).fold(one, |acc, k| acc * (int(s + k) + half));
            numer.quot(den)
        })
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            out.push(d[p] * anti[p + q] * d[q]);
        }
    }
    if out.iter().all(|x| x.hi().is_finite() && x.lo().is_finite()) {
        Some(out)
    } else {
        None
    }
}

/// Eigenvalues of D H D, ascending, as (λ, 1 − λ) pairs.
///
/// The double-double route keeps the small eigenvalues relatively accurate,
/// which the top of the distribution (all eigenvalues real) depends on.
fn dhd_spectrum(params: EnsembleParams) -> Result<Vec<(TwoFloat, TwoFloat)>> {
    let n = params.n;
    let vals: Vec<TwoFloat> = match dhd_double_double(params) {
        Some(m) => jacobi_eigenvalues(n, m),
        None => {
            let m = dhd_matrix(params)?;
            jacobi_eigenvalues(n, m.data().to_vec()).into_iter().map(TwoFloat::from).collect()
        }
    };
    let one = TwoFloat::from(1.0);
    let zero = TwoFloat::from(0.0);
    vals.into_iter()
        .enumerate()
        .map(|(i, l)| {
            if l >= one {
                return Err(Error::SpectralRadiusExceeded { index: i, lambda: f64::from(l) });
            }
            // DHD is a Gram matrix; negative values are rounding residue
            let l = if l < zero { zero } else { l };
            Ok((l, one - l))
        })
        .collect()
}

/// Distribution of the number of real eigenvalue pairs.
pub fn real_count_distribution(params: EnsembleParams) -> Result<RealCountDistribution> {
    params.check()?;
    let spec = dhd_spectrum(params)?;
    let base = spec.iter().fold(TwoFloat::from(1.0), |acc, &(_, c)| acc * c);
    let ratios: Vec<TwoFloat> = spec.iter().map(|&(l, c)| l.quot(c)).collect();
    let e = elementary_symmetric(&ratios);
    let probs = e.into_iter().map(|ek| f64::from(base * ek)).collect();
    Ok(RealCountDistribution { params, probs })
}

/// ln P(all 2n eigenvalues real), from Barnes-G ratios.
pub fn log_p_all_real(params: EnsembleParams) -> Result<f64> {
    params.check()?;
    let (n, l) = (params.n, params.ell as f64);
    Ok(log_gamma_sum(n, l / 2.0)? + log_gamma_sum(n, (l + 1.0) / 2.0)? + log_gamma_sum(n, l)?
        - log_gamma_sum(n, n as f64 + l - 0.5)?
        - 2.0 * n as f64 * log_gamma(l / 2.0)?)
}
