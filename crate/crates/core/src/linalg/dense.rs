use super::Scalar;
use crate::{Error, Result};
use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out.row_mut(i).iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A X = B` by LU with partial pivoting. `B` holds one right-hand side per column.
pub fn dense_solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.cols();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if !(pmax >= 1e-300) {
            return Err(Error::Singular {
                step: k,
                pivot: pmax.max(0.0),
            });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            for j in 0..nrhs {
                x.data.swap(k * nrhs + j, p * nrhs + j);
            }
        }
        let (lhead, ltail) = lu.data.split_at_mut((k + 1) * n);
        let krow = &lhead[k * n + k..(k + 1) * n];
        let piv = krow[0];
        let (xhead, xtail) = x.data.split_at_mut((k + 1) * nrhs);
        let xk = &xhead[k * nrhs..];
        for i in k + 1..n {
            let row = &mut ltail[(i - k - 1) * n + k..(i - k) * n];
            let l = row[0] / piv;
            row[0] = l;
            if l == T::zero() {
                continue;
            }
            for (a, &u) in row[1..].iter_mut().zip(&krow[1..]) {
                *a -= l * u;
            }
            for (a, &u) in xtail[(i - k - 1) * nrhs..(i - k) * nrhs].iter_mut().zip(xk) {
                *a -= l * u;
            }
        }
    }
    for i in (0..n).rev() {
        let (xhead, xtail) = x.data.split_at_mut((i + 1) * nrhs);
        let xi = &mut xhead[i * nrhs..];
        for k in i + 1..n {
            let u = lu.data[i * n + k];
            if u == T::zero() {
                continue;
            }
            for (a, &v) in xi.iter_mut().zip(&xtail[(k - i - 1) * nrhs..(k - i) * nrhs]) {
                *a -= u * v;
            }
        }
        let d = lu.data[i * n + i];
        for a in xi.iter_mut() {
            *a = *a / d;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve_returns_rhs() {
        let a = DenseMatrix::<f64>::identity(4);
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 - 1.5);
        assert_eq!(dense_solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn hilbert_5x5_recovers_ones() {
        let a = DenseMatrix::from_fn(5, 5, |i, j| 1.0 / (i + j + 1) as f64);
        let b = DenseMatrix::from_row_major(5, 1, a.matvec(&[1.0; 5])).unwrap();
        let x = dense_solve(&a, &b).unwrap();
        for i in 0..5 {
            assert!((x[(i, 0)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn random_complex_30_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let a = DenseMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let xs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let b = DenseMatrix::from_row_major(n, 1, a.matvec(&xs)).unwrap();
        let x = dense_solve(&a, &b).unwrap();
        let r = a.matvec(x.as_slice());
        let res = r
            .iter()
            .zip(b.as_slice())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let xn = x.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-11 * a.max_abs() * n as f64 * xn);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let b = DenseMatrix::zeros(2, 1);
        assert!(matches!(dense_solve(&a, &b), Err(Error::Singular { .. })));
    }
}
