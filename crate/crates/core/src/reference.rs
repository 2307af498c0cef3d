//! Ground-truth solvers: direct and substructured FEM solves of the full
//! Helmholtz problem, and a dense brute-force ACMS oracle.

use crate::acms_basis::build_extension_from_block;
use crate::acms_system::{number_dofs, AcmsDofMap};
use crate::femcore::{
    affine, assemble_fem, assemble_rhs, assemble_rhs_subdomain, assemble_subdomain, element_matrices, facet_dofs,
    interval_basis, interval_rule, ElementTables, HpSpace,
};
use crate::linalg::{dense_solve, generalized_eig_symmetric, BandedMatrix, CsrMatrix, DenseMatrix};
use crate::problem::HelmholtzProblem;
use crate::{Complex64, Error, Result};
use rayon::prelude::*;

/// Default limit on `N_F` for the direct solver.
pub const DIRECT_CAP: usize = 400_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// FEM solution used as ground truth.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub coeffs: Vec<Complex64>,
    pub n_f: usize,
    /// `‖S_F u − g_F‖ / ‖g_F‖`.
    pub residual: f64,
}

fn relative(num2: f64, den2: f64) -> f64 {
    if den2 > 0.0 {
        (num2 / den2).sqrt()
    } else {
        num2.sqrt()
    }
}

pub fn solve_fem_direct(space: &HpSpace, problem: &HelmholtzProblem) -> Result<ReferenceSolution> {
    solve_fem_direct_capped(space, problem, DIRECT_CAP)
}

/// Direct solve of `S_F u = g_F`: element bubbles are condensed, the
/// remaining dofs ordered lexicographically and factored by banded LU.
pub fn solve_fem_direct_capped(space: &HpSpace, problem: &HelmholtzProblem, cap: usize) -> Result<ReferenceSolution> {
    let n = space.ndofs();
    if n > cap {
        return Err(Error::CapExceeded {
            size: n,
            cap,
            hint: "use ACMS or the substructured reference solver",
        });
    }
    let asm = assemble_fem(space, problem)?;
    let s = asm.global(space);
    let g = assemble_rhs(space, problem)?;
    let nloc = space.nloc();
    let nbub = space.element().num_bubbles();
    let first = nloc - nbub;
    let nskel = n - space.mesh().num_triangles() * nbub;

    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut rhs = g[..nskel].to_vec();
    let mut elims = Vec::new();
    if nbub > 0 {
        for t in 0..space.mesh().num_triangles() {
            let dofs = space.element_dofs(t);
            let (others, bub) = (&dofs[..first], &dofs[first..]);
            let kbb = DenseMatrix::from_fn(nbub, nbub, |a, b| s.get(bub[a], bub[b]));
            let kbo = DenseMatrix::from_fn(nbub, first + 1, |a, b| {
                if b < first {
                    s.get(bub[a], others[b])
                } else {
                    g[bub[a]]
                }
            });
            let e = dense_solve(&kbb, &kbo)?;
            for oi in 0..first {
                for oj in 0..=first {
                    let v: Complex64 = (0..nbub).map(|b| kbo[(b, oi)] * e[(b, oj)]).sum();
                    if oj < first {
                        triplets.push((others[oi], others[oj], -v));
                    } else {
                        rhs[others[oi]] -= v;
                    }
                }
            }
            elims.push(e);
        }
    }
    for i in 0..nskel {
        let (cols, vals) = s.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            if c < nskel {
                triplets.push((i, c, v));
            }
        }
    }
    let order = space.lexicographic_order(&(0..nskel).collect::<Vec<_>>());
    let mut pos = vec![0; nskel];
    for (r, &d) in order.iter().enumerate() {
        pos[d] = r;
    }
    let (mut kl, mut ku) = (0, 0);
    for &(i, c, _) in &triplets {
        let (r, q) = (pos[i], pos[c]);
        kl = kl.max(r.saturating_sub(q));
        ku = ku.max(q.saturating_sub(r));
    }
    let mut band = BandedMatrix::zeros(nskel, kl, ku);
    for (i, c, v) in triplets {
        band.add(pos[i], pos[c], v)?;
    }
    let b: Vec<Complex64> = order.iter().map(|&d| rhs[d]).collect();
    let x = band.factor()?.solve(&b)?;
    let mut u = vec![ZERO; n];
    for (r, &d) in order.iter().enumerate() {
        u[d] = x[r];
    }
    for (t, e) in elims.iter().enumerate() {
        let dofs = space.element_dofs(t);
        for (bi, &bd) in dofs[first..].iter().enumerate() {
            let mut v = e[(bi, first)];
            for (oi, &od) in dofs[..first].iter().enumerate() {
                v -= e[(bi, oi)] * u[od];
            }
            u[bd] = v;
        }
    }
    let r = s.matvec(&u);
    let num: f64 = r.iter().zip(&g).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    Ok(ReferenceSolution {
        coeffs: u,
        n_f: n,
        residual: relative(num, den),
    })
}

/// Dense Schur complement on a set of interface dofs.
struct Front {
    dofs: Vec<usize>,
    mat: DenseMatrix<Complex64>,
    rhs: Vec<Complex64>,
}

/// Record of one elimination step: `u_E = z − Y u_K`.
struct Eliminated {
    elim: Vec<usize>,
    keep: Vec<usize>,
    y: DenseMatrix<Complex64>,
    z: Vec<Complex64>,
}

/// Rectangle `[x0, x1) × [y0, y1)` of the subdomain grid.
#[derive(Clone, Copy)]
struct GridRect {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

impl GridRect {
    fn contains(&self, span: &[u32; 4]) -> bool {
        span[0] as usize >= self.x0 && (span[1] as usize) < self.x1 && span[2] as usize >= self.y0 && (span[3] as usize) < self.y1
    }
}

/// Merges fronts and eliminates the dofs whose subdomains all lie in `rect`.
fn reduce(fronts: Vec<Front>, rect: GridRect, span: &[[u32; 4]]) -> Result<(Front, Eliminated)> {
    let mut dofs: Vec<usize> = fronts.iter().flat_map(|f| f.dofs.iter().copied()).collect();
    dofs.sort_unstable();
    dofs.dedup();
    let (mut elim, mut keep) = (Vec::new(), Vec::new());
    let mut slot = Vec::with_capacity(dofs.len());
    for &d in &dofs {
        if rect.contains(&span[d]) {
            slot.push((true, elim.len()));
            elim.push(d);
        } else {
            slot.push((false, keep.len()));
            keep.push(d);
        }
    }
    let (ne, nk) = (elim.len(), keep.len());
    let mut a_ee = DenseMatrix::zeros(ne, ne);
    let mut a_ex = DenseMatrix::zeros(ne, nk + 1);
    let mut a_ke = DenseMatrix::zeros(nk, ne);
    let mut a_kk = DenseMatrix::zeros(nk, nk);
    let mut g_k = vec![ZERO; nk];
    for f in &fronts {
        let loc: Vec<(bool, usize)> = f.dofs.iter().map(|d| slot[dofs.binary_search(d).expect("merged")]).collect();
        for (i, &(ei, pi)) in loc.iter().enumerate() {
            let row = f.mat.row(i);
            if ei {
                a_ex[(pi, nk)] += f.rhs[i];
            } else {
                g_k[pi] += f.rhs[i];
            }
            for (&(ej, pj), &v) in loc.iter().zip(row) {
                match (ei, ej) {
                    (true, true) => a_ee[(pi, pj)] += v,
                    (true, false) => a_ex[(pi, pj)] += v,
                    (false, true) => a_ke[(pi, pj)] += v,
                    (false, false) => a_kk[(pi, pj)] += v,
                }
            }
        }
    }
    drop(fronts);
    let sol = dense_solve(&a_ee, &a_ex)?;
    let y = DenseMatrix::from_fn(ne, nk, |i, j| sol[(i, j)]);
    let z: Vec<Complex64> = (0..ne).map(|i| sol[(i, nk)]).collect();
    let corr = a_ke.matmul(&sol);
    for i in 0..nk {
        for j in 0..nk {
            a_kk[(i, j)] -= corr[(i, j)];
        }
        g_k[i] -= corr[(i, nk)];
    }
    Ok((
        Front {
            dofs: keep.clone(),
            mat: a_kk,
            rhs: g_k,
        },
        Eliminated { elim, keep, y, z },
    ))
}

fn bisect(
    rect: GridRect,
    jx: usize,
    leaves: &mut Vec<Option<Front>>,
    span: &[[u32; 4]],
    records: &mut Vec<Eliminated>,
) -> Result<Front> {
    let fronts = if rect.x1 - rect.x0 == 1 && rect.y1 - rect.y0 == 1 {
        vec![leaves[rect.y0 * jx + rect.x0].take().expect("leaf used once")]
    } else if rect.x1 - rect.x0 >= rect.y1 - rect.y0 {
        let mid = (rect.x0 + rect.x1) / 2;
        vec![
            bisect(GridRect { x1: mid, ..rect }, jx, leaves, span, records)?,
            bisect(GridRect { x0: mid, ..rect }, jx, leaves, span, records)?,
        ]
    } else {
        let mid = (rect.y0 + rect.y1) / 2;
        vec![
            bisect(GridRect { y1: mid, ..rect }, jx, leaves, span, records)?,
            bisect(GridRect { y0: mid, ..rect }, jx, leaves, span, records)?,
        ]
    };
    let (front, rec) = reduce(fronts, rect, span)?;
    records.push(rec);
    Ok(front)
}

/// FEM solve by substructuring: every subdomain is reduced to a dense Schur
/// complement on its boundary dofs, and the interface problem is solved by
/// recursive bisection of the subdomain grid. Subdomain blocks are assembled
/// on the fly, so memory stays proportional to one subdomain plus the interface.
pub fn solve_fem_substructured(space: &HpSpace, problem: &HelmholtzProblem) -> Result<ReferenceSolution> {
    let n = space.ndofs();
    let decomp = &space.mesh().decomp;
    let (jx, jy) = (decomp.jx, decomp.jy);
    let nsub = space.subdomains().len();

    let leaves: Vec<Front> = (0..nsub)
        .into_par_iter()
        .map(|j| -> Result<Front> {
            let block = assemble_subdomain(space, problem, j)?;
            let ext = build_extension_from_block(space, &block, j)?;
            let sd = space.subdomain(j);
            let nb = sd.boundary.len();
            let x = ext.extend(&DenseMatrix::identity(nb))?;
            drop(ext);
            let s = block.sesquilinear();
            let mut mat = DenseMatrix::zeros(nb, nb);
            for (a, &la) in sd.boundary.iter().enumerate() {
                let (cols, vals) = s.row(la);
                let row = mat.row_mut(a);
                for (&k, &v) in cols.iter().zip(vals) {
                    for (o, &xv) in row.iter_mut().zip(x.row(k)) {
                        *o += v * xv;
                    }
                }
            }
            let g = assemble_rhs_subdomain(space, problem, j)?;
            Ok(Front {
                dofs: sd.boundary.iter().map(|&l| sd.dofs[l]).collect(),
                mat,
                rhs: sd.boundary.iter().map(|&l| g[l]).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let mut span = vec![[u32::MAX, 0, u32::MAX, 0]; n];
    for (j, f) in leaves.iter().enumerate() {
        let (ix, iy) = decomp.subdomain_position(j);
        for &d in &f.dofs {
            let s = &mut span[d];
            s[0] = s[0].min(ix as u32);
            s[1] = s[1].max(ix as u32);
            s[2] = s[2].min(iy as u32);
            s[3] = s[3].max(iy as u32);
        }
    }
    let mut leaves: Vec<Option<Front>> = leaves.into_iter().map(Some).collect();
    let mut records = Vec::new();
    let root = bisect(GridRect { x0: 0, x1: jx, y0: 0, y1: jy }, jx, &mut leaves, &span, &mut records)?;
    debug_assert!(root.dofs.is_empty());

    let mut u = vec![ZERO; n];
    for rec in records.iter().rev() {
        let uk: Vec<Complex64> = rec.keep.iter().map(|&d| u[d]).collect();
        for (i, &d) in rec.elim.iter().enumerate() {
            let mut v = rec.z[i];
            for (&y, &x) in rec.y.row(i).iter().zip(&uk) {
                v -= y * x;
            }
            u[d] = v;
        }
    }
    drop(records);

    let interiors: Vec<(Vec<Complex64>, Vec<(usize, Complex64)>, f64)> = (0..nsub)
        .into_par_iter()
        .map(|j| -> Result<_> {
            let block = assemble_subdomain(space, problem, j)?;
            let ext = build_extension_from_block(space, &block, j)?;
            let sd = space.subdomain(j);
            let trace: Vec<Complex64> = sd.boundary.iter().map(|&l| u[sd.dofs[l]]).collect();
            let local = ext.extend_trace(&trace)?;
            let r = block.sesquilinear().matvec(&local);
            let g = assemble_rhs_subdomain(space, problem, j)?;
            let contrib: Vec<(usize, Complex64)> = sd.dofs.iter().zip(r.iter().zip(&g)).map(|(&d, (a, b))| (d, a - b)).collect();
            let gn: f64 = g.iter().map(|v| v.norm_sqr()).sum();
            Ok((local, contrib, gn))
        })
        .collect::<Result<_>>()?;
    let mut res = vec![ZERO; n];
    let mut gnorm = vec![ZERO; n];
    for (j, (local, contrib, _)) in interiors.iter().enumerate() {
        let sd = space.subdomain(j);
        for &l in &sd.interior {
            u[sd.dofs[l]] = local[l];
        }
        for &(d, v) in contrib {
            res[d] += v;
        }
    }
    // Global load for the residual denominator.
    for j in 0..nsub {
        let sd = space.subdomain(j);
        let g = assemble_rhs_subdomain(space, problem, j)?;
        for (&d, v) in sd.dofs.iter().zip(g) {
            gnorm[d] += v;
        }
    }
    let num: f64 = res.iter().map(|v| v.norm_sqr()).sum();
    let den: f64 = gnorm.iter().map(|v| v.norm_sqr()).sum();
    Ok(ReferenceSolution {
        coeffs: u,
        n_f: n,
        residual: relative(num, den),
    })
}

/// Picks the direct solver below the cap and substructuring above it.
pub fn solve_fem_reference(space: &HpSpace, problem: &HelmholtzProblem) -> Result<ReferenceSolution> {
    if space.ndofs() <= DIRECT_CAP / 4 {
        solve_fem_direct(space, problem)
    } else {
        solve_fem_substructured(space, problem)
    }
}

/// Caps of the dense oracle.
pub const ORACLE_MAX_NA: usize = 2_000;
pub const ORACLE_MAX_NF: usize = 50_000;

/// Output of [`oracle_acms_dense`].
#[derive(Clone, Debug)]
pub struct OracleAcms {
    pub dofmap: AcmsDofMap,
    pub matrix: DenseMatrix<Complex64>,
    pub rhs: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    /// `Σ u_n Φ_n` as a global FEM vector.
    pub field: Vec<Complex64>,
    /// Basis functions `Φ_n` as rows of global FEM coefficients.
    pub basis: DenseMatrix<f64>,
}

/// Brute-force ACMS: every basis function is built as a global FEM vector by
/// dense interior solves, and `s(Φ_m, Φ_n)`, `G(Φ_n)` are integrated directly.
pub fn oracle_acms_dense(space: &HpSpace, problem: &HelmholtzProblem, ie: usize) -> Result<OracleAcms> {
    let graph = space.graph();
    let dofmap = number_dofs(graph, ie);
    let na = dofmap.ndofs;
    let nf = space.ndofs();
    if na > ORACLE_MAX_NA {
        return Err(Error::CapExceeded {
            size: na,
            cap: ORACLE_MAX_NA,
            hint: "oracle is for small instances",
        });
    }
    if nf > ORACLE_MAX_NF {
        return Err(Error::CapExceeded {
            size: nf,
            cap: ORACLE_MAX_NF,
            hint: "oracle is for small instances",
        });
    }
    let p = space.order();
    let rule1 = interval_rule(2 * p)?;

    // Interface traces of all basis functions.
    let mut phi = DenseMatrix::<f64>::zeros(na, nf);
    for (e, tr) in space.edge_traces().iter().enumerate() {
        let nt = tr.dim();
        let mut k = DenseMatrix::<f64>::zeros(nt, nt);
        let mut m = DenseMatrix::<f64>::zeros(nt, nt);
        for (sg, seg) in tr.segments.iter().enumerate() {
            let idx: Vec<usize> = (0..=p)
                .map(|i| match i {
                    0 => sg * p,
                    1 => (sg + 1) * p,
                    d => sg * p + d - 1,
                })
                .collect();
            let sign: Vec<f64> = (0..=p)
                .map(|i| if i >= 2 && seg.reversed && i % 2 == 1 { -1.0 } else { 1.0 })
                .collect();
            for (&s, &w) in rule1.points.iter().zip(&rule1.weights) {
                let (v, d) = interval_basis(p, s);
                for a in 0..=p {
                    for b in 0..=p {
                        let sab = sign[a] * sign[b];
                        k[(idx[a], idx[b])] += sab * w * d[a] * d[b] / seg.length;
                        m[(idx[a], idx[b])] += sab * w * v[a] * v[b] * seg.length;
                    }
                }
            }
        }
        if ie > 0 {
            let ni = nt - 2;
            if ie > ni {
                return Err(Error::EnrichSpace {
                    edge: e,
                    requested: ie,
                    available: ni,
                });
            }
            let sub = |a: &DenseMatrix<f64>| DenseMatrix::from_fn(ni, ni, |i, j| a[(i + 1, j + 1)]);
            let eig = generalized_eig_symmetric(&sub(&k), &sub(&m), ie)?;
            for i in 0..ie {
                let row = phi.row_mut(dofmap.edge_mode(e, i));
                for r in 0..ni {
                    row[tr.dofs[r + 1]] = eig.vectors[(r, i)];
                }
            }
        }
    }
    for (q, v) in graph.vertices.iter().enumerate() {
        let row = dofmap.vertex(q);
        phi[(row, v.node)] = 1.0;
        for e in graph.vertex_edges(q) {
            let tr = space.edge_trace(e);
            let nodes = &graph.edges[e].nodes;
            let (pa, pb) = (space.mesh().nodes[nodes[0]], space.mesh().nodes[*nodes.last().expect("nodes")]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let qp = v.coords;
            for (k, &node) in nodes.iter().enumerate() {
                let x = space.mesh().nodes[node];
                let val = 1.0 - (x[0] - qp[0]).hypot(x[1] - qp[1]) / len;
                if val.abs() > 1e-15 {
                    phi[(row, tr.dofs[k * p])] = val;
                }
            }
        }
    }

    // Dense Helmholtz-harmonic extension into every subdomain.
    let tables = ElementTables::new(p, 2 * p)?;
    let nloc = tables.nloc;
    let mut ka = vec![0.0; nloc * nloc];
    let mut ma = vec![0.0; nloc * nloc];
    for sd in space.subdomains() {
        let nl = sd.len();
        let mut kloc = DenseMatrix::<f64>::zeros(nl, nl);
        for (k, &t) in sd.triangles.iter().enumerate() {
            element_matrices(space, problem, &tables, t, &mut ka, &mut ma)?;
            let ld = &sd.element_dofs[k * nloc..(k + 1) * nloc];
            for i in 0..nloc {
                for c in 0..nloc {
                    kloc[(ld[i], ld[c])] += ka[i * nloc + c] - ma[i * nloc + c];
                }
            }
        }
        let ni = sd.interior.len();
        let kii = DenseMatrix::from_fn(ni, ni, |a, b| kloc[(sd.interior[a], sd.interior[b])]);
        let rhs = DenseMatrix::from_fn(ni, na, |a, col| {
            -sd.boundary
                .iter()
                .map(|&lb| kloc[(sd.interior[a], lb)] * phi[(col, sd.dofs[lb])])
                .sum::<f64>()
        });
        let x = dense_solve(&kii, &rhs)?;
        for (a, &li) in sd.interior.iter().enumerate() {
            for col in 0..na {
                phi[(col, sd.dofs[li])] = x[(a, col)];
            }
        }
    }

    // s(Φ_m, Φ_n) and G(Φ_n) by quadrature over the global functions.
    let mesh = space.mesh();
    let nq = tables.rule.points.len();
    let mut mat = DenseMatrix::<Complex64>::zeros(na, na);
    let mut vals = vec![0.0; na * nq];
    let mut gx = vec![0.0; na * nq];
    let mut gy = vec![0.0; na * nq];
    for t in 0..mesh.num_triangles() {
        let (det, _, jac) = affine(mesh.vertices(t));
        let d = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / d, -jac[0][1] / d], [-jac[1][0] / d, jac[0][0] / d]];
        let dofs = space.element_dofs(t);
        let signs = space.element_signs(t);
        let tag = mesh.triangles[t].material;
        let kappa = problem.kappa(tag)?;
        vals.iter_mut().for_each(|v| *v = 0.0);
        gx.iter_mut().for_each(|v| *v = 0.0);
        gy.iter_mut().for_each(|v| *v = 0.0);
        let active: Vec<usize> = (0..na).filter(|&c| dofs.iter().any(|&dd| phi[(c, dd)] != 0.0)).collect();
        for &c in &active {
            for q in 0..nq {
                let (mut v, mut dx, mut dy) = (0.0, 0.0, 0.0);
                for i in 0..nloc {
                    let coef = phi[(c, dofs[i])] * signs[i];
                    if coef == 0.0 {
                        continue;
                    }
                    let gr = tables.grads[q * nloc + i];
                    v += coef * tables.vals[q * nloc + i];
                    dx += coef * (inv[0][0] * gr[0] + inv[1][0] * gr[1]);
                    dy += coef * (inv[0][1] * gr[0] + inv[1][1] * gr[1]);
                }
                vals[c * nq + q] = v;
                gx[c * nq + q] = dx;
                gy[c * nq + q] = dy;
            }
        }
        let v0 = mesh.vertices(t)[0];
        for q in 0..nq {
            let w = tables.rule.weights[q] * det;
            let x = tables.rule.points[q];
            let px = [
                v0[0] + jac[0][0] * x[0] + jac[0][1] * x[1],
                v0[1] + jac[1][0] * x[0] + jac[1][1] * x[1],
            ];
            let a = problem.a_at(px, tag)?;
            for &m in &active {
                for &nn in &active {
                    let s = a * (gx[m * nq + q] * gx[nn * nq + q] + gy[m * nq + q] * gy[nn * nq + q])
                        - kappa * kappa * vals[m * nq + q] * vals[nn * nq + q];
                    mat[(m, nn)] += Complex64::new(w * s, 0.0);
                }
            }
        }
    }
    let rule_b = interval_rule(2 * p + 1)?;
    let mut rhs = vec![ZERO; na];
    for f in space.boundary_facets() {
        let fd = facet_dofs(space, f.nodes, f.mesh_edge);
        let (lo, hi) = (f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1]));
        let (pa, pb) = (mesh.nodes[lo], mesh.nodes[hi]);
        let wb = problem.omega() * problem.beta(f.marker)?;
        let tag = mesh.triangles[f.triangle].material;
        let active: Vec<usize> = (0..na).filter(|&c| fd.iter().any(|&dd| phi[(c, dd)] != 0.0)).collect();
        for (&s, &w) in rule_b.points.iter().zip(&rule_b.weights) {
            let (psi, _) = interval_basis(p, s);
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let g = problem.eval_g(x, f.normal, f.marker, tag)?;
            let value = |c: usize| -> f64 { fd.iter().zip(&psi).map(|(&dd, &ps)| phi[(c, dd)] * ps).sum() };
            let tv: Vec<f64> = active.iter().map(|&c| value(c)).collect();
            for (i, &m) in active.iter().enumerate() {
                rhs[m] += g * (w * f.length * tv[i]);
                for (k, &nn) in active.iter().enumerate() {
                    mat[(m, nn)] += Complex64::new(0.0, -wb * w * f.length * tv[i] * tv[k]);
                }
            }
        }
    }

    let b = DenseMatrix::from_fn(na, 1, |i, _| rhs[i]);
    let sol = dense_solve(&mat, &b)?;
    let coeffs: Vec<Complex64> = (0..na).map(|i| sol[(i, 0)]).collect();
    let mut field = vec![ZERO; nf];
    for (c, &u) in coeffs.iter().enumerate() {
        for (f, &v) in field.iter_mut().zip(phi.row(c)) {
            *f += u * v;
        }
    }
    Ok(OracleAcms {
        dofmap,
        matrix: mat,
        rhs,
        coeffs,
        field,
        basis: phi,
    })
}

/// `S_F` as a CSR matrix over the global dofs (convenience for checks).
pub fn global_matrix(space: &HpSpace, problem: &HelmholtzProblem) -> Result<CsrMatrix<Complex64>> {
    Ok(assemble_fem(space, problem)?.global(space).clone())
}
