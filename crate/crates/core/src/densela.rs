//! Dense real linear algebra: Cholesky log-determinants, Jacobi and Francis
//! eigenvalue solvers, LU determinants, elementary symmetric polynomials.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|row| {
            assert_eq!(row.len(), c, "ragged rows");
            row.iter().copied()
        }).collect();
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product; rows are computed in parallel.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let (n, m) = (self.rows, rhs.cols);
        let mut out = vec![0.0; n * m];
        out.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, orow)| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        });
        DenseMatrix { rows: n, cols: m, data: out }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Replaces the matrix by (M + Mᵀ)/2.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

/// Eigenvalues of a general real matrix as (re, im) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenList {
    pub pairs: Vec<(f64, f64)>,
    pub real_count: usize,
}

impl EigenList {
    pub fn max_modulus(&self) -> f64 {
        self.pairs.iter().fold(0.0f64, |m, &(re, im)| m.max(re.hypot(im)))
    }

    pub fn real_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().filter(|p| p.1 == 0.0).map(|p| p.0)
    }
}

/// ln det A from the Cholesky factor of a symmetric positive definite matrix.
pub fn sym_logdet_cholesky(a: &DenseMatrix) -> Result<f64> {
    let n = a.require_square()?;
    // lower factor, row-major; row i holds L[i][0..=i]
    let mut l = vec![0.0; n * n];
    let mut logdet = 0.0;
    for i in 0..n {
        let (done, rest) = l.split_at_mut(i * n);
        let li = &mut rest[..n];
        for j in 0..=i {
            let lj: &[f64] = if j < i { &done[j * n..j * n + j] } else { &li[..j] };
            let dot: f64 = if j < i {
                li[..j].iter().zip(lj).map(|(x, y)| x * y).sum()
            } else {
                li[..j].iter().map(|x| x * x).sum()
            };
            let s = a[(i, j)] - dot;
            if j == i {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                }
                let d = s.sqrt();
                li[i] = d;
                logdet += d.ln();
            } else {
                li[j] = s / done[j * n + j];
            }
        }
    }
    Ok(2.0 * logdet)
}

/// Scalar arithmetic shared by the double and double-double Jacobi paths.
pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    /// Unit roundoff of the representation.
    const EPS: f64;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Correctly rounded (to the working precision) quotient.
    fn quot(self, rhs: Self) -> Self;
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Real for TwoFloat {
    const EPS: f64 = 1e-31;
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn abs(self) -> Self {
        TwoFloat::abs(&self)
    }
    // twofloat's own TwoFloat/TwoFloat division is only double accurate, so
    // use long division with three partial quotients instead
    fn quot(self, rhs: Self) -> Self {
        let q1 = self.hi() / rhs.hi();
        let r = self - rhs * q1;
        let q2 = r.hi() / rhs.hi();
        let r = r - rhs * q2;
        let q3 = r.hi() / rhs.hi();
        TwoFloat::new_add(q1, q2) + q3
    }
}

/// Cyclic Jacobi on a dense symmetric matrix (row-major, n×n); eigenvalues ascending.
///
/// An off-diagonal entry is annihilated unless it is below
/// `EPS·sqrt(|a_pp a_qq|)` or negligible against the matrix norm, which keeps
/// small eigenvalues of positive definite matrices relatively accurate.
pub fn jacobi_eigenvalues<T: Real>(n: usize, mut a: Vec<T>) -> Vec<T> {
    assert_eq!(a.len(), n * n);
    let zero = T::from_f64(0.0);
    let one = T::from_f64(1.0);
    let half = T::from_f64(0.5);
    let eps = T::from_f64(T::EPS);
    let norm = a.iter().fold(0.0f64, |m, x| m + x.to_f64() * x.to_f64()).sqrt();
    let floor = T::from_f64(1e-14 * T::EPS / f64::EPSILON * norm * 1e-2);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let scale = (app * aqq).abs().sqrt();
                if apq.abs() <= eps * scale || apq.abs() <= floor {
                    a[p * n + q] = zero;
                    a[q * n + p] = zero;
                    continue;
                }
                rotated = true;
                let theta = ((aqq - app) * half).quot(apq);
                let tf = theta.to_f64();
                let t = if tf.abs() > 1e150 {
                    half.quot(theta)
                } else {
                    let r = (theta * theta + one).sqrt();
                    if tf >= 0.0 {
                        one.quot(theta + r)
                    } else {
                        -one.quot(-theta + r)
                    }
                };
                let c = one.quot((t * t + one).sqrt());
                let s = t * c;
                let tau = s.quot(one + c);
                let h = t * apq;
                a[p * n + p] = app - h;
                a[q * n + q] = aqq + h;
                a[p * n + q] = zero;
                a[q * n + p] = zero;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let hh = a[r * n + q];
                    let gp = g - s * (hh + g * tau);
                    let hq = hh + s * (g - hh * tau);
                    a[r * n + p] = gp;
                    a[p * n + r] = gp;
                    a[r * n + q] = hq;
                    a[q * n + r] = hq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut vals: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));
    vals
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi.
pub fn sym_eigen_jacobi(a: &DenseMatrix) -> Result<Spectrum> {
    let n = a.require_square()?;
    Ok(Spectrum { values: jacobi_eigenvalues(n, a.data.clone()) })
}

/// e_0..e_n of the inputs via e_k ← e_k + x·e_{k−1}.
pub fn elementary_symmetric<T: Real>(values: &[T]) -> Vec<T> {
    let mut e = vec![T::from_f64(0.0); values.len() + 1];
    e[0] = T::from_f64(1.0);
    for (j, &x) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e
}

/// Determinant by LU with partial pivoting.
pub fn lu_det(a: &DenseMatrix) -> Result<f64> {
    let n = a.require_square()?;
    let mut m = a.data.clone();
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))
            .unwrap_or(k);
        let pv = m[piv * n + k];
        if pv == 0.0 {
            return Ok(0.0);
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        det *= pv;
        for i in k + 1..n {
            let f = m[i * n + k] / pv;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                m[i * n + j] -= f * m[k * n + j];
            }
        }
    }
    Ok(det)
}

/// Radix-2 balancing (row/column scaling) in place.
fn balance(n: usize, a: &mut [f64]) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i * n + j] *= g;
                    }
                    for j in 0..n {
                        a[j * n + i] *= f;
                    }
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form in place.
fn hessenberg(n: usize, a: &mut [f64]) {
    if n < 3 {
        return;
    }
    let already = (2..n).all(|i| a[i * n..i * n + i - 1].iter().all(|&x| x == 0.0));
    if already {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha: f64 = (k + 1..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] += sign * alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A ← (I − βvvᵀ) A
        for j in k..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[i * n + j]).sum();
            let f = beta * dot;
            for i in k + 1..n {
                a[i * n + j] -= f * v[i];
            }
        }
        // A ← A (I − βvvᵀ)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[i * n + j] * v[j]).sum();
            let f = beta * dot;
            for j in k + 1..n {
                a[i * n + j] -= f * v[j];
            }
        }
        for i in k + 2..n {
            a[i * n + k] = 0.0;
        }
    }
}

/// Eigenvalues of a general real matrix via balancing, Hessenberg reduction and
/// Francis double-shift QR. Real eigenvalues are those from 1×1 blocks and from
/// 2×2 blocks with nonnegative discriminant.
pub fn real_eigen_schur(a: &DenseMatrix) -> Result<EigenList> {
    let n = a.require_square()?;
    let mut h = a.data.clone();
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    balance(n, &mut h);
    hessenberg(n, &mut h);
    francis_qr_eigenvalues(n, h)
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn francis_qr_eigenvalues(n: usize, mut a: Vec<f64>) -> Result<EigenList> {
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut real_count = 0usize;
    let idx = |i: usize, j: usize| i * n + j;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let max_total = 30 * n.max(1);
    let mut total_its = 0usize;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let nu = nn as usize;
        let mut its = 0usize;
        loop {
            // look for a single small subdiagonal element
            let mut l = 0usize;
            for ll in (1..=nu).rev() {
                let mut s = a[idx(ll - 1, ll - 1)].abs() + a[idx(ll, ll)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(ll, ll - 1)].abs() <= eps * s {
                    a[idx(ll, ll - 1)] = 0.0;
                    l = ll;
                    break;
                }
            }
            let mut x = a[idx(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                real_count += 1;
                nn -= 1;
                break;
            }
            let mut y = a[idx(nu - 1, nu - 1)];
            let mut w = a[idx(nu, nu - 1)] * a[idx(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                    real_count += 2;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                break;
            }
            if total_its >= max_total {
                return Err(Error::NoConvergence { index: nu });
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nu, nu - 1)].abs() + a[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_its += 1;
            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[idx(i + 2, i)] = 0.0;
                if i != m {
                    a[idx(i + 2, i - 1)] = 0.0;
                }
            }
            // double QR step on rows l..nu and columns m..nu
            for k in m..nu {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k + 1 != nu { a[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                        }
                    } else {
                        a[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                        if k + 1 != nu {
                            pp += r * a[idx(k + 2, j)];
                            a[idx(k + 2, j)] -= pp * z;
                        }
                        a[idx(k + 1, j)] -= pp * y;
                        a[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                        if k + 1 != nu {
                            pp += z * a[idx(i, k + 2)];
                            a[idx(i, k + 2)] -= pp * r;
                        }
                        a[idx(i, k + 1)] -= pp * q;
                        a[idx(i, k)] -= pp;
                    }
                }
            }
        }
    }
    let pairs = wr.into_iter().zip(wi).collect();
    Ok(EigenList { pairs, real_count })
}
