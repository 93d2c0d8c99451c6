//! Pfaffians of real skew-symmetric matrices.

use crate::densela::{lu_det, DenseMatrix};
use crate::error::{Error, Result};

/// Skew-symmetric matrix stored as its strict upper triangle, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    upper: Vec<f64>,
}

fn upper_len(dim: usize) -> usize {
    dim * dim.saturating_sub(1) / 2
}

impl SkewMatrix {
    /// Panics if `upper` does not hold exactly dim(dim−1)/2 entries.
    pub fn new(dim: usize, upper: Vec<f64>) -> Self {
        assert_eq!(upper.len(), upper_len(dim), "strict upper triangle has wrong length");
        SkewMatrix { dim, upper }
    }

    /// Builds from `f(i, j)` evaluated for i < j.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut upper = Vec::with_capacity(upper_len(dim));
        for i in 0..dim {
            for j in i + 1..dim {
                upper.push(f(i, j));
            }
        }
        SkewMatrix { dim, upper }
    }

    /// Takes the strict upper triangle of a square matrix; the lower part is ignored.
    pub fn from_upper(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare { rows: m.rows(), cols: m.cols() });
        }
        Ok(Self::from_fn(m.rows(), |i, j| m[(i, j)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        // rows 0..i contribute (dim−1) + (dim−2) + ... entries
        i * self.dim - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[self.offset(i, j)],
            Greater => -self.upper[self.offset(j, i)],
            Equal => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}

/// Pf A by Parlett–Reid elimination with partial pivoting. Odd dimension gives 0.
pub fn pfaffian(a: &SkewMatrix) -> f64 {
    let n = a.dim();
    if n % 2 == 1 {
        return 0.0;
    }
    let mut m: Vec<f64> = a.to_dense().data().to_vec();
    let at = |i: usize, j: usize| i * n + j;
    let mut pf = 1.0;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let kp = (k + 1..n)
            .max_by(|&i, &j| m[at(i, k)].abs().total_cmp(&m[at(j, k)].abs()))
            .expect("nonempty pivot range");
        if kp != k + 1 {
            for c in 0..n {
                m.swap(at(k + 1, c), at(kp, c));
            }
            for r in 0..n {
                m.swap(at(r, k + 1), at(r, kp));
            }
            pf = -pf;
        }
        let piv = m[at(k, k + 1)];
        if piv == 0.0 {
            return 0.0;
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| m[at(k, j)] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| m[at(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    m[at(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    pf
}

/// Pf A = det{a_{2i,2j+1}} for a matrix vanishing on same-parity positions.
pub fn checkerboard_pfaffian(a: &SkewMatrix) -> Result<f64> {
    checkerboard_pfaffian_tol(a, 0.0)
}

/// As [`checkerboard_pfaffian`], accepting same-parity entries up to `tol` in magnitude.
pub fn checkerboard_pfaffian_tol(a: &SkewMatrix, tol: f64) -> Result<f64> {
    let n = a.dim();
    if n % 2 == 1 {
        return Err(Error::Domain(format!("checkerboard reduction needs even dimension, got {n}")));
    }
    for i in 0..n {
        for j in (i + 2..n).step_by(2) {
            let v = a.get(i, j);
            if v.abs() > tol {
                return Err(Error::PatternViolation { row: i, col: j, value: v });
            }
        }
    }
    let half = n / 2;
    let b = DenseMatrix::from_fn(half, half, |i, j| a.get(2 * i, 2 * j + 1));
    lu_det(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn example(a: f64, b: f64, c: f64, d: f64) -> SkewMatrix {
        SkewMatrix::from_fn(4, |i, j| match (i, j) {
            (0, 1) => a,
            (0, 3) => b,
            (1, 2) => -c,
            (2, 3) => d,
            _ => 0.0,
        })
    }

    fn random_skew(rng: &mut impl Rng, dim: usize) -> SkewMatrix {
        SkewMatrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn storage_round_trip() {
        let s = SkewMatrix::from_fn(5, |i, j| (10 * i + j) as f64);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(s.get(i, j), -s.get(j, i));
            }
        }
        assert_eq!(s.get(2, 4), 24.0);
        assert_eq!(SkewMatrix::from_upper(&s.to_dense()).unwrap(), s);
    }

    #[test]
    fn small_examples() {
        assert_eq!(pfaffian(&SkewMatrix::new(2, vec![1.7])), 1.7);
        assert_eq!(pfaffian(&SkewMatrix::new(3, vec![1.0, 2.0, 3.0])), 0.0);
        assert_eq!(pfaffian(&SkewMatrix::new(0, vec![])), 1.0);
        let (a, b, c, d) = (1.3, -0.4, 2.2, 0.7);
        let m = example(a, b, c, d);
        assert!((pfaffian(&m) - (a * d - b * c)).abs() < 1e-15);
        assert!((checkerboard_pfaffian(&m).unwrap() - (a * d - b * c)).abs() < 1e-15);
        assert_eq!(checkerboard_pfaffian(&SkewMatrix::new(2, vec![-2.5])).unwrap(), -2.5);
    }

    #[test]
    fn checkerboard_rejects_pattern_violation() {
        let mut m = example(1.0, 2.0, 3.0, 4.0).to_dense();
        m[(0, 2)] = 1e-3;
        let s = SkewMatrix::from_upper(&m).unwrap();
        assert!(matches!(
            checkerboard_pfaffian(&s),
            Err(Error::PatternViolation { row: 0, col: 2, .. })
        ));
        assert!(checkerboard_pfaffian_tol(&s, 1e-2).is_ok());
    }

    #[test]
    fn squares_to_determinant() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        for k in 0..100 {
            let dim = 2 + k % 11;
            let s = random_skew(&mut rng, dim);
            let pf = pfaffian(&s);
            let det = lu_det(&s.to_dense()).unwrap();
            if dim % 2 == 1 {
                // exact determinant is zero; LU leaves rounding residue
                assert!(pf == 0.0 && det.abs() < 1e-12, "dim {dim}");
            } else {
                assert!((pf * pf - det).abs() <= 1e-10 * det.abs(), "dim {dim}");
            }
        }
    }

    #[test]
    fn checkerboard_matches_full() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..50 {
            let s = SkewMatrix::from_fn(8, |i, j| {
                if (i + j) % 2 == 1 { rng.random_range(-1.0..1.0) } else { 0.0 }
            });
            let full = pfaffian(&s);
            let cb = checkerboard_pfaffian(&s).unwrap();
            assert!((full - cb).abs() <= 1e-11 * full.abs());
        }
    }

    proptest! {
        #[test]
        fn congruence(seed in any::<u64>()) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let a = random_skew(&mut rng, 4);
            let b = DenseMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let c = b.transpose().matmul(&a.to_dense()).matmul(&b);
            let lhs = pfaffian(&SkewMatrix::from_upper(&c).unwrap());
            let rhs = lu_det(&b).unwrap() * pfaffian(&a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
