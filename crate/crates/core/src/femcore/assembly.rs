use super::basis::{interval_basis, ElementTables};
use super::quadrature::interval_rule;
use super::HpSpace;
use crate::linalg::CsrMatrix;
use crate::problem::HelmholtzProblem;
use crate::Result;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::OnceLock;

/// Real blocks of one subdomain in its local dof numbering.
#[derive(Clone, Debug)]
pub struct SubdomainBlock {
    /// `(a ∇u, ∇v)` over the owned triangles.
    pub stiffness: CsrMatrix<f64>,
    /// `(κ² u, v)` over the owned triangles, same pattern as `stiffness`.
    pub mass: CsrMatrix<f64>,
    /// `(ωβ u, v)` over the domain boundary facets owned by the subdomain.
    pub boundary: CsrMatrix<f64>,
}

impl SubdomainBlock {
    /// Real part `A_j - M_j` of the local Helmholtz operator.
    pub fn helmholtz(&self) -> CsrMatrix<f64> {
        let mut t = Vec::with_capacity(self.stiffness.nnz());
        for i in 0..self.stiffness.nrows() {
            let (c, a) = self.stiffness.row(i);
            let (_, m) = self.mass.row(i);
            for k in 0..c.len() {
                t.push((i, c[k], a[k] - m[k]));
            }
        }
        CsrMatrix::from_triplets(self.stiffness.nrows(), self.stiffness.ncols(), &t).expect("in range")
    }

    /// Local restriction of `S_F = A - M - iB`.
    pub fn sesquilinear(&self) -> CsrMatrix<Complex64> {
        let n = self.stiffness.nrows();
        let mut t = Vec::with_capacity(self.stiffness.nnz() + self.boundary.nnz());
        for i in 0..n {
            let (c, a) = self.stiffness.row(i);
            let (_, m) = self.mass.row(i);
            for k in 0..c.len() {
                t.push((i, c[k], Complex64::new(a[k] - m[k], 0.0)));
            }
            let (c, b) = self.boundary.row(i);
            for k in 0..c.len() {
                t.push((i, c[k], Complex64::new(0.0, -b[k])));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).expect("in range")
    }
}

/// Finite element discretization of the sesquilinear form, stored per subdomain.
#[derive(Debug)]
pub struct SesquilinearAssembly {
    pub blocks: Vec<SubdomainBlock>,
    ndofs: usize,
    global: OnceLock<CsrMatrix<Complex64>>,
}

impl SesquilinearAssembly {
    /// Global `S_F`, assembled from the subdomain blocks in ascending order.
    pub fn global(&self, space: &HpSpace) -> &CsrMatrix<Complex64> {
        self.global.get_or_init(|| {
            let mut t = Vec::new();
            for (j, b) in self.blocks.iter().enumerate() {
                let dofs = &space.subdomain(j).dofs;
                let s = b.sesquilinear();
                for i in 0..s.nrows() {
                    let (c, v) = s.row(i);
                    t.extend(c.iter().zip(v).map(|(&k, &x)| (dofs[i], dofs[k], x)));
                }
            }
            CsrMatrix::from_triplets(self.ndofs, self.ndofs, &t).expect("in range")
        })
    }
}

/// Geometry of an affine triangle: `|det J|` and `G = J⁻¹ J⁻ᵀ`.
pub(crate) fn affine(v: [[f64; 2]; 3]) -> (f64, [f64; 3], [[f64; 2]; 2]) {
    let j = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let g00 = inv[0][0] * inv[0][0] + inv[0][1] * inv[0][1];
    let g01 = inv[0][0] * inv[1][0] + inv[0][1] * inv[1][1];
    let g11 = inv[1][0] * inv[1][0] + inv[1][1] * inv[1][1];
    (det.abs(), [g00, g01, g11], j)
}

/// Element stiffness (with `a`) and mass (with `κ²`) including orientation signs.
pub(crate) fn element_matrices(
    space: &HpSpace,
    problem: &HelmholtzProblem,
    tables: &ElementTables,
    t: usize,
    ka: &mut [f64],
    ma: &mut [f64],
) -> Result<()> {
    let mesh = space.mesh();
    let tri = mesh.triangles[t];
    let v = mesh.vertices(t);
    let (det, g, jac) = affine(v);
    let kappa = problem.kappa(tri.material)?;
    let n = tables.nloc;
    let s = space.element_signs(t);
    if problem.has_a_field() {
        ka.iter_mut().for_each(|x| *x = 0.0);
        for (q, (x, w)) in tables.rule.points.iter().zip(&tables.rule.weights).enumerate() {
            let px = [
                v[0][0] + jac[0][0] * x[0] + jac[0][1] * x[1],
                v[0][1] + jac[1][0] * x[0] + jac[1][1] * x[1],
            ];
            let wa = w * det * problem.a_at(px, tri.material)?;
            let gr = &tables.grads[q * n..(q + 1) * n];
            for i in 0..n {
                for k in i..n {
                    ka[i * n + k] += wa
                        * (g[0] * gr[i][0] * gr[k][0]
                            + g[1] * (gr[i][0] * gr[k][1] + gr[i][1] * gr[k][0])
                            + g[2] * gr[i][1] * gr[k][1]);
                }
            }
        }
        for i in 0..n {
            for k in i..n {
                ka[i * n + k] *= s[i] * s[k];
                ka[k * n + i] = ka[i * n + k];
            }
        }
    } else {
        let a = problem.a_tag(tri.material)? * det;
        for i in 0..n {
            for k in 0..n {
                let o = i * n + k;
                ka[o] = s[i] * s[k] * a * (g[0] * tables.kxx[o] + g[1] * tables.kxy[o] + g[2] * tables.kyy[o]);
            }
        }
    }
    let m = kappa * kappa * det;
    for i in 0..n {
        for k in 0..n {
            let o = i * n + k;
            ma[o] = s[i] * s[k] * m * tables.mass[o];
        }
    }
    Ok(())
}

/// Global dofs of the trace space of a boundary facet: the two vertices
/// (lower node index first) and the edge functions.
pub(crate) fn facet_dofs(space: &HpSpace, nodes: [usize; 2], mesh_edge: usize) -> Vec<usize> {
    let p = space.order();
    let nv = space.mesh().num_nodes();
    let mut d = vec![nodes[0].min(nodes[1]), nodes[0].max(nodes[1])];
    d.extend((0..p - 1).map(|i| nv + mesh_edge * (p - 1) + i));
    d
}

/// Shared tables for assembling subdomain blocks.
struct BlockAssembler {
    tables: ElementTables,
    mass1d: Vec<f64>,
    nb: usize,
}

impl BlockAssembler {
    fn new(p: usize) -> Result<Self> {
        let tables = ElementTables::new(p, 2 * p)?;
        let brule = interval_rule(2 * p + 1)?;
        let nb = p + 1;
        // 1D mass of [1-s, s, L_2, ..., L_p] on [0, 1].
        let mut mass1d = vec![0.0; nb * nb];
        for (s, w) in brule.points.iter().zip(&brule.weights) {
            let (v, _) = interval_basis(p, *s);
            for i in 0..nb {
                for k in i..nb {
                    mass1d[i * nb + k] += w * v[i] * v[k];
                }
            }
        }
        for i in 0..nb {
            for k in 0..i {
                mass1d[i * nb + k] = mass1d[k * nb + i];
            }
        }
        Ok(Self { tables, mass1d, nb })
    }

    fn block(&self, space: &HpSpace, problem: &HelmholtzProblem, j: usize) -> Result<SubdomainBlock> {
        let (tables, nb) = (&self.tables, self.nb);
        let sd = space.subdomain(j);
        let mesh = space.mesh();
        let n = tables.nloc;
        let nl = sd.len();
        let mut ka = vec![0.0; n * n];
        let mut ma = vec![0.0; n * n];
        let mut ta = Vec::with_capacity(sd.triangles.len() * n * n);
        let mut tm = Vec::with_capacity(sd.triangles.len() * n * n);
        for (k, &t) in sd.triangles.iter().enumerate() {
            element_matrices(space, problem, tables, t, &mut ka, &mut ma)?;
            let ld = &sd.element_dofs[k * n..(k + 1) * n];
            for i in 0..n {
                for c in 0..n {
                    ta.push((ld[i], ld[c], ka[i * n + c]));
                    tm.push((ld[i], ld[c], ma[i * n + c]));
                }
            }
        }
        let stiffness = CsrMatrix::from_triplets(nl, nl, &ta)?;
        drop(ta);
        let mass = CsrMatrix::from_triplets(nl, nl, &tm)?;
        drop(tm);
        let mut tb = Vec::new();
        for f in space.boundary_facets() {
            if mesh.triangles[f.triangle].subdomain != j {
                continue;
            }
            let scale = problem.omega() * problem.beta(f.marker)? * f.length;
            let dofs = facet_dofs(space, f.nodes, f.mesh_edge);
            let ld: Vec<usize> = dofs.iter().map(|&d| sd.local_index(d).expect("facet dof in subdomain")).collect();
            for i in 0..nb {
                for c in 0..nb {
                    tb.push((ld[i], ld[c], scale * self.mass1d[i * nb + c]));
                }
            }
        }
        Ok(SubdomainBlock {
            stiffness,
            mass,
            boundary: CsrMatrix::from_triplets(nl, nl, &tb)?,
        })
    }
}

/// Assembles the per-subdomain blocks of `S_F` with quadrature degree `2p`
/// in the volume and `2p + 1` on the boundary.
pub fn assemble_fem(space: &HpSpace, problem: &HelmholtzProblem) -> Result<SesquilinearAssembly> {
    let asm = BlockAssembler::new(space.order())?;
    let blocks = (0..space.subdomains().len())
        .into_par_iter()
        .map(|j| asm.block(space, problem, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SesquilinearAssembly {
        blocks,
        ndofs: space.ndofs(),
        global: OnceLock::new(),
    })
}

/// Assembles the block of a single subdomain; boundary facets are those it owns.
pub fn assemble_subdomain(space: &HpSpace, problem: &HelmholtzProblem, j: usize) -> Result<SubdomainBlock> {
    BlockAssembler::new(space.order())?.block(space, problem, j)
}

fn facet_load(
    space: &HpSpace,
    problem: &HelmholtzProblem,
    f: &super::space::BoundaryFacet,
    rule: &super::quadrature::IntervalRule,
) -> Result<(Vec<usize>, Vec<Complex64>)> {
    let mesh = space.mesh();
    let p = space.order();
    let (lo, hi) = (f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1]));
    let (a, b) = (mesh.nodes[lo], mesh.nodes[hi]);
    let tag = mesh.triangles[f.triangle].material;
    let mut vals = vec![Complex64::new(0.0, 0.0); p + 1];
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let g = problem.eval_g(x, f.normal, f.marker, tag)? * (w * f.length);
        let (psi, _) = interval_basis(p, *s);
        for (v, ps) in vals.iter_mut().zip(&psi) {
            *v += g * ps;
        }
    }
    Ok((facet_dofs(space, f.nodes, f.mesh_edge), vals))
}

/// Load vector `G(v) = (g, v)` on the domain boundary, quadrature degree `2p + 1`.
pub fn assemble_rhs(space: &HpSpace, problem: &HelmholtzProblem) -> Result<Vec<Complex64>> {
    let rule = interval_rule(2 * space.order() + 1)?;
    let mut g = vec![Complex64::new(0.0, 0.0); space.ndofs()];
    for f in space.boundary_facets() {
        let (dofs, vals) = facet_load(space, problem, f, &rule)?;
        for (d, v) in dofs.into_iter().zip(vals) {
            g[d] += v;
        }
    }
    Ok(g)
}

/// Load vector of subdomain `j` in local numbering, from the boundary facets it owns.
pub fn assemble_rhs_subdomain(space: &HpSpace, problem: &HelmholtzProblem, j: usize) -> Result<Vec<Complex64>> {
    let rule = interval_rule(2 * space.order() + 1)?;
    let sd = space.subdomain(j);
    let mesh = space.mesh();
    let mut g = vec![Complex64::new(0.0, 0.0); sd.len()];
    for f in space.boundary_facets() {
        if mesh.triangles[f.triangle].subdomain != j {
            continue;
        }
        let (dofs, vals) = facet_load(space, problem, f, &rule)?;
        for (d, v) in dofs.into_iter().zip(vals) {
            g[sd.local_index(d).expect("facet dof in subdomain")] += v;
        }
    }
    Ok(g)
}
