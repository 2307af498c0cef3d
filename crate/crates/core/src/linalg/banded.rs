use super::{DenseMatrix, Scalar};
use crate::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores the columns `i - kl ..= i + kl + ku`; the extra `kl` columns
/// on the right absorb the fill produced by row interchanges during LU.
#[derive(Clone, Debug)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                rows: self.n,
                cols: self.n,
            });
        }
        if !self.in_band(i, j) {
            return Err(Error::BandOverflow {
                row: i,
                col: j,
                kl: self.kl,
                ku: self.ku,
            });
        }
        let o = self.offset(i, j);
        self.data[o] += v;
        Ok(())
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        if !self.in_band(i, j) {
            return Err(Error::BandOverflow {
                row: i,
                col: j,
                kl: self.kl,
                ku: self.ku,
            });
        }
        let o = self.offset(i, j);
        self.data[o] = v;
        Ok(())
    }

    /// Band of row `i` as `(first column, values)` covering columns `i - kl ..= i + ku`.
    pub fn row_band(&self, i: usize) -> (usize, &[T]) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku + 1).min(self.n);
        let base = self.offset(i, lo);
        (lo, &self.data[base..base + (hi - lo)])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (lo, r) = self.row_band(i);
                r.iter().zip(&x[lo..]).map(|(&a, &b)| a * b).sum()
            })
            .collect()
    }

    /// Largest `|i - j|` over nonzero entries below and above the diagonal.
    pub fn realized_bandwidths(&self) -> (usize, usize) {
        let (mut l, mut u) = (0, 0);
        for i in 0..self.n {
            let (lo, r) = self.row_band(i);
            for (k, v) in r.iter().enumerate() {
                if *v != T::zero() {
                    let j = lo + k;
                    if j < i {
                        l = l.max(i - j);
                    } else {
                        u = u.max(j - i);
                    }
                }
            }
        }
        (l, u)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn from_dense(a: &DenseMatrix<T>, kl: usize, ku: usize) -> Result<Self> {
        let n = a.rows();
        let mut b = Self::zeros(n, kl, ku);
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v != T::zero() {
                    b.set(i, j, v)?;
                }
            }
        }
        Ok(b)
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    pub fn factor(mut self) -> Result<LuFactorization<T>> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let mut piv = Vec::with_capacity(n);
        let mut lower = vec![T::zero(); n * kl];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = -1.0;
            for i in k..=last {
                let a = self.data[i * w + (k + kl - i)].abs();
                if a > pmax {
                    pmax = a;
                    p = i;
                }
            }
            if !(pmax >= 1e-300) {
                return Err(Error::Singular {
                    step: k,
                    pivot: pmax.max(0.0),
                });
            }
            piv.push(p);
            let jend = (k + kl + ku + 1).min(n);
            if p != k {
                for j in k..jend {
                    self.data.swap(k * w + (j + kl - k), p * w + (j + kl - p));
                }
            }
            if last == k {
                continue;
            }
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let krow = &head[k * w + kl..k * w + kl + (jend - k)];
            let pivot = krow[0];
            for i in k + 1..=last {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let c0 = k + kl - i;
                let l = row[c0] / pivot;
                row[c0] = l;
                lower[k * kl + (i - k - 1)] = l;
                if l == T::zero() {
                    continue;
                }
                for (a, &u) in row[c0 + 1..c0 + (jend - k)].iter_mut().zip(&krow[1..]) {
                    *a -= l * u;
                }
            }
        }
        // Keep only U row-wise; the multipliers live column-wise in `lower`.
        let uw = w - kl;
        let mut upper = self.data;
        for i in 0..n {
            upper.copy_within(i * w + kl..(i + 1) * w, i * uw);
        }
        upper.truncate(n * uw);
        upper.shrink_to_fit();
        Ok(LuFactorization {
            n,
            kl,
            ku,
            upper,
            lower,
            piv,
        })
    }
}

/// Banded LU factors with the row interchanges recorded step by step.
#[derive(Clone, Debug)]
pub struct LuFactorization<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Rows of `U`, columns `i ..= i + kl + ku`.
    upper: Vec<T>,
    /// Multipliers of step `k` at `k * kl ..`.
    lower: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> LuFactorization<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Bytes held by the factors.
    pub fn memory_bytes(&self) -> usize {
        (self.upper.len() + self.lower.len()) * std::mem::size_of::<T>()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x, 1)?;
        Ok(x)
    }

    /// Solves for `nrhs` right-hand sides stored row-major in `x` (`n × nrhs`).
    pub fn solve_in_place(&self, x: &mut [T], nrhs: usize) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let uw = kl + ku + 1;
        if x.len() != n * nrhs {
            return Err(Error::DimensionMismatch {
                expected: n * nrhs,
                got: x.len(),
            });
        }
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for r in 0..nrhs {
                    x.swap(k * nrhs + r, p * nrhs + r);
                }
            }
            let last = (k + kl).min(n.saturating_sub(1));
            let (head, tail) = x.split_at_mut((k + 1) * nrhs);
            let xk = &head[k * nrhs..];
            for (d, &l) in self.lower[k * kl..k * kl + (last - k)].iter().enumerate() {
                if l == T::zero() {
                    continue;
                }
                let xi = &mut tail[d * nrhs..(d + 1) * nrhs];
                for (a, &b) in xi.iter_mut().zip(xk) {
                    *a -= l * b;
                }
            }
        }
        for i in (0..n).rev() {
            let jend = (i + kl + ku + 1).min(n);
            let row = &self.upper[i * uw..i * uw + (jend - i)];
            let (head, tail) = x.split_at_mut((i + 1) * nrhs);
            let xi = &mut head[i * nrhs..];
            for (jj, &u) in row.iter().enumerate().skip(1) {
                if u == T::zero() {
                    continue;
                }
                let xj = &tail[(jj - 1) * nrhs..jj * nrhs];
                for (a, &b) in xi.iter_mut().zip(xj) {
                    *a -= u * b;
                }
            }
            let d = row[0];
            for a in xi.iter_mut() {
                *a = *a / d;
            }
        }
        Ok(())
    }
}
