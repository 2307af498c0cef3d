use crate::{Error, Result};

/// Highest polynomial degree for which rules are provided.
pub const MAX_DEGREE: usize = 22;

/// Quadrature rule on the interval `[0, 1]`.
#[derive(Clone, Debug)]
pub struct IntervalRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Quadrature rule on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials of the given degree.
pub fn interval_rule(degree: usize) -> Result<IntervalRule> {
    if degree > MAX_DEGREE {
        return Err(Error::Unsupported(format!("quadrature degree {degree} > {MAX_DEGREE}")));
    }
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    Ok(IntervalRule {
        points: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
    })
}

/// Collapsed Gauss rule on the reference triangle exact for polynomials of the given degree.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::Unsupported(format!("quadrature degree {degree} > {MAX_DEGREE}")));
    }
    if degree <= 1 {
        return Ok(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
        });
    }
    // ξ = u, η = (1 - u) v with Jacobian (1 - u).
    let nu = (degree + 3) / 2;
    let nv = (degree + 2) / 2;
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (a, wa) in xu.iter().zip(&wu) {
        let u = 0.5 * (a + 1.0);
        for (b, wb) in xv.iter().zip(&wv) {
            let v = 0.5 * (b + 1.0);
            points.push([u, (1.0 - u) * v]);
            weights.push(0.25 * wa * wb * (1.0 - u));
        }
    }
    Ok(TriangleRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn centroid_rule() {
        let r = triangle_rule(1).unwrap();
        assert_eq!(r.points, vec![[1.0 / 3.0, 1.0 / 3.0]]);
        assert_eq!(r.weights, vec![0.5]);
    }

    #[test]
    fn x2y_degree_four() {
        let r = triangle_rule(4).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0] * p[0] * p[1]).sum();
        assert!((s - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn interval_x21() {
        let r = interval_rule(21).unwrap();
        assert_eq!(r.points.len(), 11);
        let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(21)).sum();
        assert!((s - 1.0 / 22.0).abs() < 1e-14);
    }

    #[test]
    fn all_monomials_exact() {
        for d in 0..=MAX_DEGREE {
            let r = triangle_rule(d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let s: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((s - exact).abs() <= 1e-14 * exact.max(1e-3), "d={d} a={a} b={b}");
                }
            }
            let ir = interval_rule(d).unwrap();
            for a in 0..=d as i32 {
                let s: f64 = ir.points.iter().zip(&ir.weights).map(|(x, w)| w * x.powi(a)).sum();
                assert!((s - 1.0 / (a + 1) as f64).abs() < 1e-14);
            }
        }
        assert!(triangle_rule(MAX_DEGREE + 1).is_err());
    }
}
