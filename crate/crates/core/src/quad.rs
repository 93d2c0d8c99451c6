//! Quadrature rules: Gauss–Legendre for smooth integrands, double-exponential
//! rules for endpoint singularities and semi-infinite ranges.

use std::f64::consts::{FRAC_PI_2, PI};

/// Integration domain a rule is mapped onto.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    SemiInfinite,
}

/// Fixed nodes and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: Domain,
}

impl QuadratureRule {
    /// n-point Gauss–Legendre rule on [a, b].
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = mid - half * x;
            nodes[n - 1 - i] = mid + half * x;
            weights[i] = w * half;
            weights[n - 1 - i] = w * half;
        }
        QuadratureRule { nodes, weights, domain: Domain::Interval(a, b) }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Value and error estimate (difference between the last two levels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const MAX_LEVELS: usize = 12;

/// Tanh-sinh quadrature on a finite interval; tolerates integrable endpoint singularities.
///
/// The integrand receives `(x, distance_to_a, distance_to_b)` so it can be
/// evaluated without cancellation next to the endpoints.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Estimate
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = (b - a) / 2.0;
    // t range where 1 - |x| stays representable
    let t_max = 4.0;
    let eval = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        // distance of x from the nearer endpoint on [-1, 1]: 1 - tanh|s| = 2 / (exp(2|s|) + 1)
        let delta = 2.0 / ((2.0 * s.abs()).exp() + 1.0);
        if delta == 0.0 {
            return 0.0;
        }
        let (da, db) = if s < 0.0 {
            (half * delta, half * (2.0 - delta))
        } else {
            (half * (2.0 - delta), half * delta)
        };
        let x = if s < 0.0 { a + da } else { b - db };
        let v = f(x, da, db);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut value = sum * h * half;
    let mut error = f64::INFINITY;
    for _ in 0..MAX_LEVELS {
        h /= 2.0;
        let mut extra = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            extra += eval(t) + eval(-t);
            k += 2;
        }
        sum += extra;
        let next = sum * h * half;
        error = (next - value).abs();
        value = next;
        if error <= tol * value.abs().max(1.0) {
            break;
        }
    }
    Estimate { value, error }
}

/// Exp-sinh quadrature of ∫_0^∞ f; the integrand must decay at least exponentially.
/// Also tolerates an integrable singularity at 0.
pub fn exp_sinh<F>(f: F, tol: f64) -> Estimate
where
    F: Fn(f64) -> f64,
{
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let off = u.exp();
        if off == 0.0 || !off.is_finite() {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() * off;
        let v = f(off);
        let r = w * v;
        if r.is_finite() {
            r
        } else {
            0.0
        }
    };
    let t_lo: f64 = -4.5;
    let t_hi: f64 = 4.5;
    let mut h: f64 = 0.5;
    let mut sum = 0.0;
    let mut k: i64 = (t_lo / h).ceil() as i64;
    while (k as f64) * h <= t_hi {
        sum += eval(k as f64 * h);
        k += 1;
    }
    let mut value = sum * h;
    let mut error = f64::INFINITY;
    for _ in 0..MAX_LEVELS {
        h /= 2.0;
        let mut extra = 0.0;
        let mut k: i64 = (t_lo / h).ceil() as i64;
        if k % 2 == 0 {
            k += 1;
        }
        while (k as f64) * h <= t_hi {
            extra += eval(k as f64 * h);
            k += 2;
        }
        sum += extra;
        let next = sum * h;
        error = (next - value).abs();
        value = next;
        if error <= tol * value.abs().max(1.0) {
            break;
        }
    }
    Estimate { value, error }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = QuadratureRule::gauss_legendre(10, -1.0, 2.0);
        let v = rule.integrate(|x| x.powi(19) - 3.0 * x.powi(4));
        let exact = (2f64.powi(20) - 1.0) / 20.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!((rule.weights.iter().sum::<f64>() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        // ∫_0^1 ln x dx = -1, ∫_0^1 x^{-1/2} = 2
        let e = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-14);
        assert!((e.value + 1.0).abs() < 1e-12, "{e:?}");
        let e = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-14);
        assert!((e.value - 2.0).abs() < 1e-10, "{e:?}");
    }

    #[test]
    fn exp_sinh_semi_infinite() {
        // ∫_0^∞ sech(πx) dx = 1/2
        let e = exp_sinh(|x| 1.0 / (PI * x).cosh(), 1e-14);
        assert!((e.value - 0.5).abs() < 1e-13, "{e:?}");
        let e = exp_sinh(|x| (-x).exp() * x.ln(), 1e-14);
        assert!((e.value + 0.577_215_664_901_532_9).abs() < 1e-12, "{e:?}");
    }
}
