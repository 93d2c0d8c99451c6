//! Monte Carlo: Haar orthogonal sampling, real-eigenvalue statistics of
//! truncations, Kac polynomial real roots and the sech^ℓ random walk.
//!
//! Work is split into fixed chunks, each driven by its own jump-separated
//! xoshiro256++ stream, so results depend only on the seed and never on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::densela::{real_eigen_schur, DenseMatrix};
use crate::ensemble::EnsembleParams;
use crate::error::{domain, Error, Result};
use crate::specfun::log_beta;

/// Samples handled by one RNG stream.
const CHUNK: usize = 2048;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    /// Generator seeded from `seed` through splitmix64, advanced by
    /// `stream_index` jumps of 2^128 steps.
    pub fn rng(&self) -> Xoshiro256PlusPlus {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(self.seed);
        for _ in 0..self.stream_index {
            r.jump();
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Proportion `hits/samples` with the one-sigma Wilson half-width as stderr.
    pub fn proportion(hits: usize, samples: usize, seed: u64) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        let half = (p * (1.0 - p) / n + 0.25 / (n * n)).sqrt() / (1.0 + 1.0 / n);
        MCEstimate { mean: p, stderr: half, samples, seed }
    }

    /// Sample mean with standard error sd/√n.
    pub fn from_moments(sum: f64, sum_sq: f64, samples: usize, seed: u64) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        MCEstimate { mean, stderr: (var / n).sqrt(), samples, seed }
    }

    /// |mean − target| in units of stderr.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.stderr
    }
}

/// Runs `f(stream, count)` over fixed chunks in parallel; results come back in
/// stream order.
fn chunked<T, F>(samples: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Xoshiro256PlusPlus, usize) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut rng = RngStream::new(seed, c as u64).rng();
            f(&mut rng, count)
        })
        .collect()
}

/// Haar-distributed orthogonal matrix: Householder QR of a Gaussian matrix,
/// columns of Q multiplied by sgn(R_ii).
pub fn haar_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    let n = dim;
    let mut a: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let mut vs: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut signs = vec![1.0; n];
    for k in 0..n {
        let norm: f64 = (k..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        let x0 = a[k * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        // R_kk = alpha
        signs[k] = if alpha >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..n).map(|i| a[i * n + k]).collect();
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|x| x * x).sum();
        let beta = if vn2 > 0.0 { 2.0 / vn2 } else { 0.0 };
        for j in k..n {
            let dot: f64 = (k..n).map(|i| v[i - k] * a[i * n + j]).sum();
            for i in k..n {
                a[i * n + j] -= beta * dot * v[i - k];
            }
        }
        vs.push((v, beta));
    }
    // Q = H_0 H_1 ... H_{n−1} applied to I, right to left
    let mut q = DenseMatrix::identity(n);
    for (k, (v, beta)) in vs.iter().enumerate().rev() {
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i - k] * q[(i, j)]).sum();
            for i in k..n {
                q[(i, j)] -= beta * dot * v[i - k];
            }
        }
    }
    for j in 0..n {
        if signs[j] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn truncation<R: Rng + ?Sized>(params: EnsembleParams, rng: &mut R) -> DenseMatrix {
    let dim = 2 * params.n + params.ell;
    let o = haar_orthogonal(dim, rng);
    let m = 2 * params.n;
    DenseMatrix::from_fn(m, m, |i, j| o[(i, j)])
}

/// Number of real eigenvalues of a random 2n×2n truncation.
pub fn sample_real_count<R: Rng + ?Sized>(params: EnsembleParams, rng: &mut R) -> Result<usize> {
    let params = EnsembleParams::new(params.n, params.ell)?;
    match real_eigen_schur(&truncation(params, rng)) {
        Ok(e) => Ok(e.real_count),
        Err(Error::NoConvergence { .. }) => Ok(real_eigen_schur(&truncation(params, rng))?.real_count),
        Err(e) => Err(e),
    }
}

fn check_samples(samples: usize, min: usize) -> Result<()> {
    if samples < min {
        return domain(format!("need at least {min} samples, got {samples}"));
    }
    Ok(())
}

fn real_count_histogram(params: EnsembleParams, samples: usize, seed: u64) -> Result<Vec<usize>> {
    let params = EnsembleParams::new(params.n, params.ell)?;
    let parts = chunked(samples, seed, |rng, count| -> Result<Vec<usize>> {
        let mut h = vec![0usize; params.n + 1];
        for _ in 0..count {
            h[sample_real_count(params, rng)? / 2] += 1;
        }
        Ok(h)
    });
    let mut hist = vec![0usize; params.n + 1];
    for part in parts {
        for (t, x) in hist.iter_mut().zip(part?) {
            *t += x;
        }
    }
    Ok(hist)
}

/// Fraction of truncations with no real eigenvalue.
pub fn estimate_p_no_real(params: EnsembleParams, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_samples(samples, 1000)?;
    let hist = real_count_histogram(params, samples, seed)?;
    Ok(MCEstimate::proportion(hist[0], samples, seed))
}

/// Estimated P(2k real eigenvalues), k = 0..=n.
pub fn estimate_distribution(
    params: EnsembleParams,
    samples: usize,
    seed: u64,
) -> Result<Vec<MCEstimate>> {
    check_samples(samples, 1000)?;
    let hist = real_count_histogram(params, samples, seed)?;
    Ok(hist.into_iter().map(|h| MCEstimate::proportion(h, samples, seed)).collect())
}

fn kac_coefficients<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Vec<f64> {
    (0..=degree).map(|_| rng.sample(StandardNormal)).collect()
}

/// Real roots of Σ a_k z^k from the eigenvalues of its companion matrix.
pub fn kac_real_roots_of(coeffs: &[f64]) -> Result<usize> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if lead.abs() < 1e-300 {
        return Err(Error::DegenerateLeadingCoefficient(lead));
    }
    if degree == 1 {
        return Ok(1);
    }
    // upper Hessenberg companion: first row −a_{N−1}/a_N, …, −a_0/a_N
    let c = DenseMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -coeffs[degree - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(real_eigen_schur(&c)?.real_count)
}

fn check_degree(degree: usize) -> Result<()> {
    if !(1..=2000).contains(&degree) {
        return domain(format!("Kac degree must be in 1..=2000, got {degree}"));
    }
    Ok(())
}

/// Number of real roots of a degree-N polynomial with i.i.d. standard Gaussian coefficients.
pub fn kac_real_roots<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Result<usize> {
    check_degree(degree)?;
    kac_real_roots_of(&kac_coefficients(degree, rng))
}

/// Mean number of real roots over `samples` Kac polynomials of the given degree.
pub fn estimate_kac_mean_roots(degree: usize, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_degree(degree)?;
    check_samples(samples, 2)?;
    let parts = chunked(samples, seed, |rng, count| -> Result<(f64, f64)> {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let coeffs = resample_nondegenerate(degree, rng);
            let r = kac_real_roots_of(&coeffs)? as f64;
            s += r;
            s2 += r * r;
        }
        Ok((s, s2))
    });
    let (mut s, mut s2) = (0.0, 0.0);
    for p in parts {
        let (a, b) = p?;
        s += a;
        s2 += b;
    }
    Ok(MCEstimate::from_moments(s, s2, samples, seed))
}

fn resample_nondegenerate<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let c = kac_coefficients(degree, rng);
        if c[degree].abs() >= 1e-300 {
            return c;
        }
    }
}

/// Sign of p(x) when Horner's rounding error bound cannot flip it, else 0.
fn certified_sign(coeffs: &[f64], x: f64) -> i8 {
    let mut v = 0.0f64;
    let mut mag = 0.0f64;
    for &a in coeffs.iter().rev() {
        v = v * x + a;
        mag = mag * x.abs() + a.abs();
    }
    let bound = 2.0 * coeffs.len() as f64 * f64::EPSILON * mag;
    if v > bound {
        1
    } else if v < -bound {
        -1
    } else {
        0
    }
}

/// True if a sign change proves a real root; false means "not proven".
fn sign_change_detected(coeffs: &[f64]) -> bool {
    let degree = coeffs.len() - 1;
    let reversed: Vec<f64> = coeffs.iter().rev().copied().collect();
    // points along the real line, left to right; |x| > 1 via the reversed polynomial
    let levels = (4 * degree).max(4).ilog2() as i32 + 1;
    let mut ts: Vec<f64> = (0..=levels).map(|j| 1.0 - 0.5f64.powi(j)).collect();
    ts.push(1.0);
    let mut signs: Vec<i8> = Vec::with_capacity(4 * ts.len() + 2);
    let inf_sign = |neg: bool| {
        let s = coeffs[degree].signum() as i8;
        if neg && degree % 2 == 1 { -s } else { s }
    };
    // x^N p(1/x) has the sign of p(1/x) times sgn(x)^N
    let outer = |y: f64| {
        let s = certified_sign(&reversed, y);
        if y < 0.0 && degree % 2 == 1 { -s } else { s }
    };
    signs.push(inf_sign(true));
    for &t in ts.iter() {
        if t > 0.0 {
            signs.push(outer(-t));
        }
    }
    for &t in ts.iter().rev() {
        signs.push(certified_sign(coeffs, -t));
    }
    for &t in ts.iter().skip(1) {
        signs.push(certified_sign(coeffs, t));
    }
    for &t in ts.iter().rev() {
        if t > 0.0 {
            signs.push(outer(t));
        }
    }
    signs.push(inf_sign(false));
    let nonzero: Vec<i8> = signs.into_iter().filter(|&s| s != 0).collect();
    nonzero.windows(2).any(|w| w[0] != w[1])
}

/// Fraction of degree-N Kac polynomials without real roots.
///
/// A certified sign change settles most draws; the rest are counted exactly
/// through the companion matrix.
pub fn estimate_kac_persistence(degree: usize, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_degree(degree)?;
    if degree % 2 == 1 {
        return domain(format!("persistence needs even degree, got {degree}"));
    }
    check_samples(samples, 10_000)?;
    let parts = chunked(samples, seed, |rng, count| -> Result<usize> {
        let mut hits = 0;
        for _ in 0..count {
            let coeffs = resample_nondegenerate(degree, rng);
            if !sign_change_detected(&coeffs) && kac_real_roots_of(&coeffs)? == 0 {
                hits += 1;
            }
        }
        Ok(hits)
    });
    let mut hits = 0;
    for p in parts {
        hits += p?;
    }
    Ok(MCEstimate::proportion(hits, samples, seed))
}

/// Random-walk θ estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub ell: usize,
    pub samples: usize,
    pub bandwidth: f64,
    /// Walks still positive after this many steps are not followed further;
    /// their share of the density at 0 is added analytically.
    pub max_steps: usize,
}

impl WalkConfig {
    pub fn new(ell: usize, samples: usize, bandwidth: f64) -> Result<Self> {
        let c = WalkConfig { ell, samples, bandwidth, max_steps: 100_000 };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return domain("walk needs ell >= 1");
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return domain(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if self.samples < 10_000 {
            return domain(format!("walk needs at least 10000 samples, got {}", self.samples));
        }
        if self.max_steps == 0 {
            return domain("max_steps must be positive");
        }
        Ok(())
    }
}

/// One step with density sech^ℓ(x/2) / (2B(ℓ/2, 1/2)).
///
/// ℓ = 1 inverts the CDF (2/π)arctan(e^{x/2}); larger ℓ accepts an ℓ = 1
/// proposal with probability sech^{ℓ−1}(x/2).
pub fn sech_step<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let x = 2.0 * (std::f64::consts::FRAC_PI_2 * u).tan().ln();
        if ell == 1 {
            return x;
        }
        let accept = (1.0 / (0.5 * x).cosh()).powi(ell as i32 - 1);
        if rng.random::<f64>() < accept {
            return x;
        }
    }
}

/// Step variance 2ψ'(ℓ/2).
pub fn sech_step_variance(ell: usize) -> f64 {
    let pi2 = std::f64::consts::PI.powi(2);
    let (mut a, mut trig) = if ell % 2 == 1 { (0.5, pi2 / 2.0) } else { (1.0, pi2 / 6.0) };
    let target = ell as f64 / 2.0;
    while a < target {
        trig -= 1.0 / (a * a);
        a += 1.0;
    }
    2.0 * trig
}

/// Step density at 0, 1/(2B(ℓ/2, 1/2)).
pub fn sech_step_density_at_zero(ell: usize) -> f64 {
    0.5 * (-log_beta(ell as f64 / 2.0, 0.5).unwrap()).exp()
}

#[derive(Debug, Clone, Copy, Default)]
struct WalkTally {
    kernel_sum: f64,
    in_window: usize,
    survivors: usize,
}

/// θ(ℓ) from the density at 0⁻ of the first non-positive position S_τ of the
/// walk started at 0: θ = ½ f_{S_τ}(0⁻).
pub fn walk_theta(config: WalkConfig, seed: u64) -> Result<MCEstimate> {
    config.validate()?;
    let h = config.bandwidth;
    let parts = chunked(config.samples, seed, |rng, count| {
        let mut t = WalkTally::default();
        let mut per_walk = Vec::with_capacity(count);
        for _ in 0..count {
            let mut s = 0.0;
            let mut landed = None;
            for _ in 0..config.max_steps {
                s += sech_step(config.ell, rng);
                if s <= 0.0 {
                    landed = Some(s);
                    break;
                }
            }
            let contrib = match landed {
                Some(s) if -s < h => {
                    t.in_window += 1;
                    // Epanechnikov kernel reflected at the support boundary
                    let u = s / h;
                    2.0 * 0.75 * (1.0 - u * u) / h
                }
                Some(_) => 0.0,
                None => {
                    t.survivors += 1;
                    0.0
                }
            };
            t.kernel_sum += contrib;
            per_walk.push(contrib);
        }
        let sq: f64 = per_walk.iter().map(|c| c * c).sum();
        (t, sq)
    });
    let mut total = WalkTally::default();
    let mut sum_sq = 0.0;
    for (t, sq) in parts {
        total.kernel_sum += t.kernel_sum;
        total.in_window += t.in_window;
        total.survivors += t.survivors;
        sum_sq += sq;
    }
    if total.in_window < 100 {
        return Err(Error::BandwidthTooSmall { count: total.in_window });
    }
    let n = config.samples as f64;
    let est = MCEstimate::from_moments(total.kernel_sum, sum_sq, config.samples, seed);
    // walks alive at the cap cross later with the renewal undershoot density √2/σ at 0
    let tail = total.survivors as f64 / n * 2f64.sqrt() / sech_step_variance(config.ell).sqrt();
    Ok(MCEstimate { mean: 0.5 * (est.mean + tail), stderr: 0.5 * est.stderr, ..est })
}
