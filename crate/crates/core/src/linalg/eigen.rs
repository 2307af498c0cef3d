use super::DenseMatrix;
use crate::{Error, Result};

/// Eigenpairs of `K v = λ M v`, eigenvalues ascending, eigenvectors as matrix columns.
#[derive(Clone, Debug)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix<f64>,
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
    let n = m.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `K v = λ M v` for the `count` smallest eigenvalues.
///
/// Each eigenvector is `M`-orthonormal and its largest-magnitude entry is positive.
pub fn generalized_eig_symmetric(
    k: &DenseMatrix<f64>,
    m: &DenseMatrix<f64>,
    count: usize,
) -> Result<GeneralizedEigen> {
    let n = k.rows();
    if k.cols() != n || m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.rows(),
        });
    }
    if count > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: count,
        });
    }
    let l = cholesky(m)?;
    // C = L^{-1} K L^{-T}, formed as L^{-1} (L^{-1} K)^T using symmetry of K.
    let x = forward_columns(&l, k);
    let c = forward_columns(&l, &x.transpose());
    let c = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let (values, y) = symmetric_eig(&c);
    let mut vectors = DenseMatrix::zeros(n, count);
    for col in 0..count {
        let mut v: Vec<f64> = (0..n).map(|i| y[(i, col)]).collect();
        // v = L^{-T} y
        for i in (0..n).rev() {
            let mut s = v[i];
            for r in i + 1..n {
                s -= l[(r, i)] * v[r];
            }
            v[i] = s / l[(i, i)];
        }
        let mut imax = 0;
        for i in 1..n {
            if v[i].abs() > v[imax].abs() * (1.0 + 1e-12) {
                imax = i;
            }
        }
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[i];
        }
    }
    Ok(GeneralizedEigen {
        values: values[..count].to_vec(),
        vectors,
    })
}

/// Solves `L X = B` column by column for lower triangular `L`.
fn forward_columns(l: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let n = l.rows();
    let mut x = b.clone();
    for i in 0..n {
        for r in 0..i {
            let lir = l[(i, r)];
            if lir == 0.0 {
                continue;
            }
            let (head, tail) = x.as_mut_slice().split_at_mut(i * b.cols());
            let xr = &head[r * b.cols()..(r + 1) * b.cols()];
            for (a, &v) in tail[..b.cols()].iter_mut().zip(xr) {
                *a -= lir * v;
            }
        }
        let d = l[(i, i)];
        for a in x.row_mut(i) {
            *a /= d;
        }
    }
    x
}

/// Full eigendecomposition of a real symmetric matrix by Householder
/// tridiagonalization and the implicit QL algorithm.
/// Returns eigenvalues ascending and orthonormal eigenvectors as columns.
pub fn symmetric_eig(a: &DenseMatrix<f64>) -> (Vec<f64>, DenseMatrix<f64>) {
    let n = a.rows();
    if n == 0 {
        return (Vec::new(), DenseMatrix::zeros(0, 0));
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

fn tred2(v: &mut DenseMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut DenseMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    // Rotations act on column pairs; work on the transpose so they touch contiguous rows.
    let mut vt = v.transpose();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = vt.as_mut_slice().split_at_mut((i + 1) * n);
                    let ri = &mut lo[i * n..];
                    let ri1 = &mut hi[..n];
                    for (a, b) in ri.iter_mut().zip(ri1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    *v = vt.transpose();
}
