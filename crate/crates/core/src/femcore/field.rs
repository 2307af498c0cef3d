use super::basis::{interval_basis, ElementTables};
use super::quadrature::{interval_rule, triangle_rule};
use super::HpSpace;
use crate::geometry::Mesh;
use crate::linalg::{dense_solve, DenseMatrix};
use crate::{Error, Result};
use num_complex::Complex64;

/// Uniform bucket grid for locating the triangle containing a point.
#[derive(Debug)]
pub(crate) struct PointLocator {
    origin: [f64; 2],
    cell: [f64; 2],
    n: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub(crate) fn new(mesh: &Mesh) -> Self {
        let bb = mesh.decomp.bounding_box();
        let nt = mesh.num_triangles().max(1);
        let aspect = bb.width() / bb.height();
        let ny = ((nt as f64 / 2.0 / aspect).sqrt().ceil() as usize).max(1);
        let nx = ((ny as f64 * aspect).ceil() as usize).max(1);
        let cell = [bb.width() / nx as f64, bb.height() / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let v = mesh.vertices(t);
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for p in v {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
            let clamp = |x: f64, o: f64, c: f64, n: usize| (((x - o) / c).floor().max(0.0) as usize).min(n - 1);
            for iy in clamp(lo[1], bb.y0, cell[1], ny)..=clamp(hi[1], bb.y0, cell[1], ny) {
                for ix in clamp(lo[0], bb.x0, cell[0], nx)..=clamp(hi[0], bb.x0, cell[0], nx) {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        Self {
            origin: [bb.x0, bb.y0],
            cell,
            n: [nx, ny],
            buckets,
        }
    }

    /// Triangle containing `x` and the reference coordinates of `x` in it.
    pub(crate) fn locate(&self, mesh: &Mesh, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let ix = ((x[0] - self.origin[0]) / self.cell[0]).floor();
        let iy = ((x[1] - self.origin[1]) / self.cell[1]).floor();
        let tol = 1e-12;
        let fix = |i: f64, n: usize, c: f64, o: f64, v: f64| -> Option<usize> {
            if i >= 0.0 && (i as usize) < n {
                Some(i as usize)
            } else if (i < 0.0 && v >= o - tol * c) || (i >= n as f64 && v <= o + n as f64 * c * (1.0 + tol)) {
                Some(if i < 0.0 { 0 } else { n - 1 })
            } else {
                None
            }
        };
        let ix = fix(ix, self.n[0], self.cell[0], self.origin[0], x[0])?;
        let iy = fix(iy, self.n[1], self.cell[1], self.origin[1], x[1])?;
        let mut best: Option<(usize, [f64; 2], f64)> = None;
        for &t in &self.buckets[iy * self.n[0] + ix] {
            let [a, b, c] = mesh.vertices(t);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let xi = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
            let eta = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
            let worst = xi.min(eta).min(1.0 - xi - eta);
            if worst >= -1e-12 {
                return Some((t, [xi, eta]));
            }
            if best.map_or(true, |b| worst > b.2) {
                best = Some((t, [xi, eta], worst));
            }
        }
        best.filter(|b| b.2 >= -1e-9).map(|b| (b.0, b.1))
    }
}

/// Values of the finite element function on triangle `t` at reference point `xi`.
pub(crate) fn eval_on_triangle(space: &HpSpace, coeffs: &[Complex64], t: usize, xi: [f64; 2], buf: &mut (Vec<f64>, Vec<[f64; 2]>)) -> Complex64 {
    let n = space.nloc();
    buf.0.resize(n, 0.0);
    buf.1.resize(n, [0.0; 2]);
    space.element().eval(xi, &mut buf.0, &mut buf.1);
    let dofs = space.element_dofs(t);
    let signs = space.element_signs(t);
    let mut u = Complex64::new(0.0, 0.0);
    for i in 0..n {
        u += coeffs[dofs[i]] * (signs[i] * buf.0[i]);
    }
    u
}

/// Evaluates a finite element function at physical points.
pub fn eval_field(space: &HpSpace, coeffs: &[Complex64], points: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    if coeffs.len() != space.ndofs() {
        return Err(Error::DimensionMismatch {
            expected: space.ndofs(),
            got: coeffs.len(),
        });
    }
    let loc = space.locator();
    let mut buf = (Vec::new(), Vec::new());
    points
        .iter()
        .map(|&x| {
            let (t, xi) = loc
                .locate(space.mesh(), x)
                .ok_or(Error::PointOutsideMesh(x[0], x[1]))?;
            Ok(eval_on_triangle(space, coeffs, t, xi, &mut buf))
        })
        .collect()
}

/// Projection-based interpolant: nodal values at vertices, then `L²`
/// projections of the remainder onto the edge functions of every mesh edge
/// and onto the bubbles of every triangle. Reproduces polynomials of degree `p`.
pub fn interpolate(space: &HpSpace, f: impl Fn([f64; 2]) -> Complex64) -> Result<Vec<Complex64>> {
    let mesh = space.mesh();
    let p = space.order();
    let nv = mesh.num_nodes();
    let mut u = vec![Complex64::new(0.0, 0.0); space.ndofs()];
    for (v, x) in mesh.nodes.iter().enumerate() {
        u[v] = f(*x);
    }
    if p == 1 {
        return Ok(u);
    }
    let ne = p - 1;
    let rule = interval_rule(2 * p + 2)?;
    let mut gram = DenseMatrix::<f64>::zeros(ne, ne);
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let (psi, _) = interval_basis(p, *s);
        for i in 0..ne {
            for k in 0..ne {
                gram[(i, k)] += w * psi[i + 2] * psi[k + 2];
            }
        }
    }
    let gram_c = DenseMatrix::from_fn(ne, ne, |i, k| Complex64::new(gram[(i, k)], 0.0));
    for (e, &[a, b]) in space.topology().edges.iter().enumerate() {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let mut rhs = DenseMatrix::<Complex64>::zeros(ne, 1);
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let (psi, _) = interval_basis(p, *s);
            let r = f(x) - u[a] * psi[0] - u[b] * psi[1];
            for i in 0..ne {
                rhs[(i, 0)] += r * (w * psi[i + 2]);
            }
        }
        let c = dense_solve(&gram_c, &rhs)?;
        for i in 0..ne {
            u[nv + e * ne + i] = c[(i, 0)];
        }
    }
    let nb = space.element().num_bubbles();
    if nb == 0 {
        return Ok(u);
    }
    let tables = ElementTables::new(p, 2 * p + 2)?;
    let n = tables.nloc;
    let first_bubble = 3 + 3 * (p - 1);
    let gram = DenseMatrix::from_fn(nb, nb, |i, k| {
        Complex64::new(tables.mass[(first_bubble + i) * n + first_bubble + k], 0.0)
    });
    for t in 0..mesh.num_triangles() {
        let v = mesh.vertices(t);
        let dofs = space.element_dofs(t);
        let signs = space.element_signs(t);
        let mut rhs = DenseMatrix::<Complex64>::zeros(nb, 1);
        for (q, (x, w)) in tables.rule.points.iter().zip(&tables.rule.weights).enumerate() {
            let px = [
                v[0][0] + (v[1][0] - v[0][0]) * x[0] + (v[2][0] - v[0][0]) * x[1],
                v[0][1] + (v[1][1] - v[0][1]) * x[0] + (v[2][1] - v[0][1]) * x[1],
            ];
            let phi = &tables.vals[q * n..(q + 1) * n];
            let mut r = f(px);
            for i in 0..first_bubble {
                r -= u[dofs[i]] * (signs[i] * phi[i]);
            }
            for i in 0..nb {
                rhs[(i, 0)] += r * (w * phi[first_bubble + i]);
            }
        }
        let c = dense_solve(&gram, &rhs)?;
        for i in 0..nb {
            u[dofs[first_bubble + i]] = c[(i, 0)];
        }
    }
    Ok(u)
}

/// Reference for an error computation.
pub enum Reference<'a> {
    Function(&'a dyn Fn([f64; 2]) -> Complex64),
    /// Finite element field on the same mesh or on a uniform refinement of it.
    Field(&'a HpSpace, &'a [Complex64]),
}

/// `L²` norm of the reference, absolute error and relative error of
/// `coeffs` with respect to the reference, quadrature degree `2p + 2`.
pub fn l2_norm_and_error(space: &HpSpace, coeffs: &[Complex64], reference: Reference<'_>) -> Result<(f64, f64, f64)> {
    if coeffs.len() != space.ndofs() {
        return Err(Error::DimensionMismatch {
            expected: space.ndofs(),
            got: coeffs.len(),
        });
    }
    let nan = Complex64::new(f64::NAN, 0.0);
    let (norm2, err2) = match reference {
        Reference::Function(f) => {
            let mut buf = (Vec::new(), Vec::new());
            integrate_pair(
                space,
                |_, t, xi| eval_on_triangle(space, coeffs, t, xi, &mut buf),
                |x, _, _| f(x),
                2 * space.order() + 2,
            )?
        }
        Reference::Field(other, oc) => {
            if oc.len() != other.ndofs() {
                return Err(Error::DimensionMismatch {
                    expected: other.ndofs(),
                    got: oc.len(),
                });
            }
            let degree = 2 * space.order().max(other.order()) + 2;
            let (m1, m2) = (space.mesh(), other.mesh());
            let (mut b1, mut b2) = ((Vec::new(), Vec::new()), (Vec::new(), Vec::new()));
            let same_cells = m1.nodes == m2.nodes && m1.triangles.iter().zip(&m2.triangles).all(|(a, b)| a.nodes == b.nodes);
            if m1.triangles.len() == m2.triangles.len() && same_cells {
                integrate_pair(
                    space,
                    |_, t, xi| eval_on_triangle(space, coeffs, t, xi, &mut b1),
                    |_, t, xi| eval_on_triangle(other, oc, t, xi, &mut b2),
                    degree,
                )?
            } else if m2.num_triangles() >= m1.num_triangles() {
                // Integrate on the finer reference mesh, locating points in the coarse one.
                let loc = space.locator();
                integrate_pair(
                    other,
                    |x, _, _| match loc.locate(m1, x) {
                        Some((t, xi)) => eval_on_triangle(space, coeffs, t, xi, &mut b1),
                        None => nan,
                    },
                    |_, t, xi| eval_on_triangle(other, oc, t, xi, &mut b2),
                    degree,
                )?
            } else {
                let loc = other.locator();
                integrate_pair(
                    space,
                    |_, t, xi| eval_on_triangle(space, coeffs, t, xi, &mut b1),
                    |x, _, _| match loc.locate(m2, x) {
                        Some((t, xi)) => eval_on_triangle(other, oc, t, xi, &mut b2),
                        None => nan,
                    },
                    degree,
                )?
            }
        }
    };
    if !(norm2.is_finite() && err2.is_finite()) {
        return Err(Error::Unsupported("reference field and solution are not defined on nested meshes".into()));
    }
    let (norm, err) = (norm2.sqrt(), err2.sqrt());
    let rel = if norm > 0.0 {
        err / norm
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((norm, err, rel))
}

/// `(∫ |r|², ∫ |u - r|²)` over the mesh of `space`.
fn integrate_pair(
    space: &HpSpace,
    mut approx: impl FnMut([f64; 2], usize, [f64; 2]) -> Complex64,
    mut reference: impl FnMut([f64; 2], usize, [f64; 2]) -> Complex64,
    degree: usize,
) -> Result<(f64, f64)> {
    let rule = triangle_rule(degree)?;
    let mesh = space.mesh();
    let (mut norm2, mut err2) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let v = mesh.vertices(t);
        let det = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let px = [
                v[0][0] + (v[1][0] - v[0][0]) * x[0] + (v[2][0] - v[0][0]) * x[1],
                v[0][1] + (v[1][1] - v[0][1]) * x[0] + (v[2][1] - v[0][1]) * x[1],
            ];
            let u = approx(px, t, *x);
            let r = reference(px, t, *x);
            norm2 += w * det * r.norm_sqr();
            err2 += w * det * (u - r).norm_sqr();
        }
    }
    Ok((norm2, err2))
}

/// `L²` norm of a finite element function.
pub fn l2_norm(space: &HpSpace, coeffs: &[Complex64]) -> Result<f64> {
    let zero = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    let (_, err, _) = l2_norm_and_error(space, &zero, Reference::Field(space, coeffs))?;
    Ok(err)
}
