//! ACMS dof numbering, basis matrices, assembly of `S_A`, solution and
//! reconstruction in the finite element space.

use crate::acms_basis::{
    build_extension, compute_vertex_trace, edge_boundary_positions, EdgeModeCache, EdgeModeSet, SubdomainExtension,
};
use crate::femcore::{assemble_rhs_subdomain, HpSpace, SesquilinearAssembly};
use crate::geometry::InterfaceGraph;
use crate::linalg::{BandedMatrix, DenseMatrix};
use crate::problem::HelmholtzProblem;
use crate::{Complex64, Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// Global numbering of the ACMS dofs.
///
/// Rows of the decomposition grid are swept bottom to top. Within a row the
/// vertices and the modes of the horizontal edges alternate along `x`, then
/// the modes of the row's vertical edges follow along `x`.
#[derive(Clone, Debug)]
pub struct AcmsDofMap {
    pub jx: usize,
    pub jy: usize,
    pub ie: usize,
    vertex_dof: Vec<usize>,
    edge_first: Vec<usize>,
    pub ndofs: usize,
    pub bandwidth_bound: usize,
}

impl AcmsDofMap {
    pub fn vertex(&self, q: usize) -> usize {
        self.vertex_dof[q]
    }

    /// Dof of mode `i` (zero based) of edge `e`.
    pub fn edge_mode(&self, e: usize, i: usize) -> usize {
        debug_assert!(i < self.ie);
        self.edge_first[e] + i
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_dof.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_first.len()
    }
}

pub fn number_dofs(graph: &InterfaceGraph, ie: usize) -> AcmsDofMap {
    let (jx, jy) = (graph.jx, graph.jy);
    let mut vertex_dof = vec![0; graph.vertices.len()];
    let mut edge_first = vec![0; graph.edges.len()];
    let mut next = 0;
    for iy in 0..=jy {
        for ix in 0..=jx {
            vertex_dof[graph.vertex_index(ix, iy)] = next;
            next += 1;
            if ix < jx {
                edge_first[graph.horizontal_edge(ix, iy)] = next;
                next += ie;
            }
        }
        if iy < jy {
            for ix in 0..=jx {
                edge_first[graph.vertical_edge(ix, iy)] = next;
                next += ie;
            }
        }
    }
    AcmsDofMap {
        jx,
        jy,
        ie,
        vertex_dof,
        edge_first,
        ndofs: next,
        bandwidth_bound: 3 * (jx.max(jy) + 2) * (ie + 1),
    }
}

/// Extended ACMS basis functions supported on one subdomain.
///
/// Columns: the four vertex functions in ascending vertex order, then the
/// modes of the four edges in ascending edge order, modes ascending.
#[derive(Clone, Debug)]
pub struct BasisMatrix {
    pub subdomain: usize,
    pub vertices: [usize; 4],
    pub edges: [usize; 4],
    pub ie: usize,
    /// `N_j × (4 + 4 I_E)`, local numbering of the subdomain.
    pub data: DenseMatrix<f64>,
}

impl BasisMatrix {
    pub fn num_columns(&self) -> usize {
        4 + 4 * self.ie
    }

    /// Column positions of the basis restricted to the first `ie` modes per edge.
    pub fn column_subset(&self, ie: usize) -> Vec<usize> {
        let mut c: Vec<usize> = (0..4).collect();
        for m in 0..4 {
            c.extend((0..ie.min(self.ie)).map(|i| 4 + m * self.ie + i));
        }
        c
    }

    /// Global ACMS dofs of the columns in [`Self::column_subset`].
    pub fn global_columns(&self, dofmap: &AcmsDofMap) -> Vec<usize> {
        let mut c: Vec<usize> = self.vertices.iter().map(|&q| dofmap.vertex(q)).collect();
        for &e in &self.edges {
            c.extend((0..dofmap.ie.min(self.ie)).map(|i| dofmap.edge_mode(e, i)));
        }
        c
    }
}

/// Boundary traces of all basis functions of subdomain `j` (`boundary × (4 + 4 I_E)`).
pub fn trace_matrix(space: &HpSpace, modes: &[EdgeModeSet], ie: usize, j: usize) -> Result<(DenseMatrix<f64>, [usize; 4], [usize; 4])> {
    let graph = space.graph();
    let mut vertices = graph.subdomain_vertices(j);
    vertices.sort_unstable();
    let mut edges = graph.subdomain_edges(j);
    edges.sort_unstable();
    let nb = space.subdomain(j).boundary.len();
    let mut t = DenseMatrix::zeros(nb, 4 + 4 * ie);
    let positions: Vec<Vec<usize>> = edges
        .iter()
        .map(|&e| edge_boundary_positions(space, j, e))
        .collect::<Result<_>>()?;
    for (c, &q) in vertices.iter().enumerate() {
        for (e, vals) in compute_vertex_trace(space, q).traces {
            if let Some(m) = edges.iter().position(|&x| x == e) {
                for (&r, &v) in positions[m].iter().zip(&vals) {
                    if v != 0.0 {
                        t[(r, c)] = v;
                    }
                }
            }
        }
    }
    for (m, &e) in edges.iter().enumerate() {
        let set = &modes[e];
        if set.count() < ie {
            return Err(Error::DimensionMismatch {
                expected: ie,
                got: set.count(),
            });
        }
        let pos = &positions[m];
        for i in 0..ie {
            for r in 0..set.modes.rows() {
                t[(pos[r + 1], 4 + m * ie + i)] = set.modes[(r, i)];
            }
        }
    }
    Ok((t, vertices, edges))
}

pub fn build_basis_matrix(
    space: &HpSpace,
    ext: &SubdomainExtension,
    modes: &[EdgeModeSet],
    ie: usize,
) -> Result<BasisMatrix> {
    let j = ext.subdomain;
    let (t, vertices, edges) = trace_matrix(space, modes, ie, j)?;
    Ok(BasisMatrix {
        subdomain: j,
        vertices,
        edges,
        ie,
        data: ext.extend(&t)?,
    })
}

/// Edge modes of every decomposition edge, served from `cache`.
pub fn edge_modes(space: &HpSpace, ie: usize, cache: &EdgeModeCache) -> Result<Vec<EdgeModeSet>> {
    (0..space.graph().edges.len()).map(|e| cache.get(space, e, ie)).collect()
}

pub fn build_extensions(space: &HpSpace, assembly: &SesquilinearAssembly) -> Result<Vec<SubdomainExtension>> {
    (0..space.subdomains().len())
        .into_par_iter()
        .map(|j| build_extension(space, assembly, j))
        .collect()
}

/// All basis matrices from prebuilt extensions.
pub fn build_basis_matrices(
    space: &HpSpace,
    extensions: &[SubdomainExtension],
    modes: &[EdgeModeSet],
    ie: usize,
) -> Result<Vec<BasisMatrix>> {
    extensions
        .par_iter()
        .map(|ext| build_basis_matrix(space, ext, modes, ie))
        .collect()
}

/// Builds modes and basis matrices, factoring each subdomain only while its
/// columns are extended.
pub fn build_basis(
    space: &HpSpace,
    assembly: &SesquilinearAssembly,
    ie: usize,
    cache: &EdgeModeCache,
) -> Result<Vec<BasisMatrix>> {
    let modes = edge_modes(space, ie, cache)?;
    (0..space.subdomains().len())
        .into_par_iter()
        .map(|j| {
            let ext = build_extension(space, assembly, j)?;
            build_basis_matrix(space, &ext, &modes, ie)
        })
        .collect()
}

/// Local load vectors `g_j` from the boundary facets owned by each subdomain.
pub fn subdomain_loads(space: &HpSpace, problem: &HelmholtzProblem) -> Result<Vec<Vec<Complex64>>> {
    (0..space.subdomains().len())
        .into_par_iter()
        .map(|j| assemble_rhs_subdomain(space, problem, j))
        .collect()
}

/// Contribution `B_jᵀ S_F|Ω_j B_j` and `B_jᵀ g_j` of one subdomain.
#[derive(Clone, Debug)]
pub struct LocalBlock {
    pub subdomain: usize,
    pub ie: usize,
    pub matrix: DenseMatrix<Complex64>,
    pub load: Vec<Complex64>,
}

/// Computes `B_jᵀ S_F|Ω_j B_j` and `B_jᵀ g_j`.
///
/// Every column of `B_j` satisfies the interior equations of `A_j − M_j`, so
/// only the rows of `(A_j − M_j) B_j` on the subdomain boundary contribute;
/// the impedance term and the load live on boundary dofs as well.
pub fn local_block(
    space: &HpSpace,
    assembly: &SesquilinearAssembly,
    basis: &BasisMatrix,
    load: &[Complex64],
) -> Result<LocalBlock> {
    local_block_rows(assembly, basis, load, &space.subdomain(basis.subdomain).boundary)
}

/// [`local_block`] summed over all rows of `B_j`, without using the extension property.
pub fn local_block_full(assembly: &SesquilinearAssembly, basis: &BasisMatrix, load: &[Complex64]) -> Result<LocalBlock> {
    let rows: Vec<usize> = (0..basis.data.rows()).collect();
    local_block_rows(assembly, basis, load, &rows)
}

fn local_block_rows(
    assembly: &SesquilinearAssembly,
    basis: &BasisMatrix,
    load: &[Complex64],
    rows: &[usize],
) -> Result<LocalBlock> {
    let blk = &assembly.blocks[basis.subdomain];
    let b = &basis.data;
    let (n, c) = (b.rows(), b.cols());
    if blk.stiffness.nrows() != n || load.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: load.len(),
        });
    }
    let mut y = vec![0.0; c];
    let mut re = vec![0.0; c * c];
    let mut im = vec![0.0; c * c];
    let rank_one = |acc: &mut [f64], br: &[f64], y: &[f64]| {
        for (a, &u) in br.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let row = &mut acc[a * c + a..(a + 1) * c];
            for (x, &v) in row.iter_mut().zip(&y[a..]) {
                *x += u * v;
            }
        }
    };
    for &r in rows {
        // Stiffness and mass share their sparsity pattern.
        let (cols, stiff) = blk.stiffness.row(r);
        let (_, mass) = blk.mass.row(r);
        y.iter_mut().for_each(|v| *v = 0.0);
        for ((&k, &sv), &mv) in cols.iter().zip(stiff).zip(mass) {
            let v = sv - mv;
            for (a, &x) in y.iter_mut().zip(b.row(k)) {
                *a += v * x;
            }
        }
        rank_one(&mut re, b.row(r), &y);
        let (cols, vals) = blk.boundary.row(r);
        if cols.is_empty() {
            continue;
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for (&k, &v) in cols.iter().zip(vals) {
            for (a, &x) in y.iter_mut().zip(b.row(k)) {
                *a -= v * x;
            }
        }
        rank_one(&mut im, b.row(r), &y);
    }
    let mut matrix = DenseMatrix::zeros(c, c);
    for a in 0..c {
        for k in a..c {
            let v = Complex64::new(re[a * c + k], im[a * c + k]);
            matrix[(a, k)] = v;
            matrix[(k, a)] = v;
        }
    }
    let mut g = vec![Complex64::new(0.0, 0.0); c];
    for &r in rows {
        let gr = load[r];
        if gr == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (a, &u) in g.iter_mut().zip(b.row(r)) {
            *a += gr * u;
        }
    }
    Ok(LocalBlock {
        subdomain: basis.subdomain,
        ie: basis.ie,
        matrix,
        load: g,
    })
}

pub fn local_blocks(
    space: &HpSpace,
    assembly: &SesquilinearAssembly,
    basis: &[BasisMatrix],
    loads: &[Vec<Complex64>],
) -> Result<Vec<LocalBlock>> {
    basis
        .par_iter()
        .map(|b| local_block(space, assembly, b, &loads[b.subdomain]))
        .collect()
}

/// Assembled ACMS system.
#[derive(Clone, Debug)]
pub struct AcmsSystem {
    pub dofmap: AcmsDofMap,
    pub matrix: BandedMatrix<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl AcmsSystem {
    pub fn dim(&self) -> usize {
        self.dofmap.ndofs
    }

    /// Realized lower and upper bandwidth of `S_A`.
    pub fn bandwidth(&self) -> usize {
        let (l, u) = self.matrix.realized_bandwidths();
        l.max(u)
    }

    /// Solves `S_A u_A = g_A`; returns the coefficients and the relative residual.
    pub fn solve(&self) -> Result<(Vec<Complex64>, f64)> {
        let lu = self.matrix.clone().factor()?;
        let u = lu.solve(&self.rhs)?;
        let r = self.matrix.matvec(&u);
        let num: f64 = r.iter().zip(&self.rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = self.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let res = if den > 0.0 { num / den } else { num };
        Ok((u, res))
    }
}

/// Scatters the local blocks, restricted to `dofmap.ie` modes per edge, into `S_A` and `g_A`.
pub fn assemble_acms(dofmap: &AcmsDofMap, basis: &[BasisMatrix], blocks: &[LocalBlock]) -> Result<AcmsSystem> {
    let maps: Vec<(Vec<usize>, Vec<usize>)> = basis
        .iter()
        .map(|b| {
            if dofmap.ie > b.ie {
                return Err(Error::DimensionMismatch {
                    expected: dofmap.ie,
                    got: b.ie,
                });
            }
            Ok((b.column_subset(dofmap.ie), b.global_columns(dofmap)))
        })
        .collect::<Result<_>>()?;
    let mut bw = 0;
    for (_, g) in &maps {
        let (lo, hi) = (g.iter().min().copied().unwrap_or(0), g.iter().max().copied().unwrap_or(0));
        bw = bw.max(hi - lo);
    }
    if bw > dofmap.bandwidth_bound {
        return Err(Error::BandOverflow {
            row: 0,
            col: bw,
            kl: dofmap.bandwidth_bound,
            ku: dofmap.bandwidth_bound,
        });
    }
    let n = dofmap.ndofs;
    let bw = bw.min(n.saturating_sub(1));
    let mut matrix = BandedMatrix::zeros(n, bw, bw);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for (blk, (local, global)) in blocks.iter().zip(&maps) {
        for (&la, &ga) in local.iter().zip(global) {
            rhs[ga] += blk.load[la];
            for (&lb, &gb) in local.iter().zip(global) {
                matrix.add(ga, gb, blk.matrix[(la, lb)])?;
            }
        }
    }
    Ok(AcmsSystem {
        dofmap: dofmap.clone(),
        matrix,
        rhs,
    })
}

/// FEM coefficients of the ACMS solution `u_A`.
pub fn reconstruct(space: &HpSpace, basis: &[BasisMatrix], dofmap: &AcmsDofMap, u_a: &[Complex64]) -> Result<Vec<Complex64>> {
    if u_a.len() != dofmap.ndofs {
        return Err(Error::DimensionMismatch {
            expected: dofmap.ndofs,
            got: u_a.len(),
        });
    }
    let locals: Vec<Vec<Complex64>> = basis
        .par_iter()
        .map(|b| {
            let local = b.column_subset(dofmap.ie);
            let global = b.global_columns(dofmap);
            let coef: Vec<(usize, Complex64)> = local.iter().zip(&global).map(|(&l, &g)| (l, u_a[g])).collect();
            (0..b.data.rows())
                .map(|r| {
                    let row = b.data.row(r);
                    coef.iter().map(|&(l, c)| c * row[l]).sum()
                })
                .collect()
        })
        .collect();
    let mut u = vec![Complex64::new(0.0, 0.0); space.ndofs()];
    let mut written = vec![false; space.ndofs()];
    let scale = locals.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for (b, loc) in basis.iter().zip(&locals) {
        let sd = space.subdomain(b.subdomain);
        for (&d, &v) in sd.dofs.iter().zip(loc) {
            if written[d] {
                let mismatch = (u[d] - v).norm();
                if mismatch > 1e-12 * scale {
                    return Err(Error::TraceMismatch { dof: d, mismatch });
                }
            } else {
                u[d] = v;
                written[d] = true;
            }
        }
    }
    Ok(u)
}

/// Wall-clock seconds of the ACMS stages.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub t_bas: f64,
    pub t_ass: f64,
    pub t_sol: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.t_bas + self.t_ass + self.t_sol
    }
}

/// Result of an ACMS solve.
#[derive(Clone, Debug)]
pub struct AcmsSolution {
    pub ie: usize,
    pub coeffs: Vec<Complex64>,
    pub field: Vec<Complex64>,
    pub n_a: usize,
    pub n_f: usize,
    pub bandwidth: usize,
    pub residual: f64,
    pub timings: Timings,
}

/// ACMS ingredients built once for the largest mode count of a sweep.
pub struct AcmsSession<'a> {
    pub space: &'a HpSpace,
    pub ie_max: usize,
    pub basis: Vec<BasisMatrix>,
    pub blocks: Vec<LocalBlock>,
    pub timings: Timings,
}

impl<'a> AcmsSession<'a> {
    pub fn new(space: &'a HpSpace, assembly: &SesquilinearAssembly, problem: &HelmholtzProblem, ie_max: usize, cache: &EdgeModeCache) -> Result<Self> {
        let t0 = Instant::now();
        let basis = build_basis(space, assembly, ie_max, cache)?;
        let t1 = Instant::now();
        let loads = subdomain_loads(space, problem)?;
        let blocks = local_blocks(space, assembly, &basis, &loads)?;
        let t2 = Instant::now();
        Ok(Self {
            space,
            ie_max,
            basis,
            blocks,
            timings: Timings {
                t_bas: (t1 - t0).as_secs_f64(),
                t_ass: (t2 - t1).as_secs_f64(),
                t_sol: 0.0,
            },
        })
    }

    /// Solves with the first `ie` modes per edge (`ie ≤ ie_max`).
    pub fn solve(&self, ie: usize) -> Result<AcmsSolution> {
        if ie > self.ie_max {
            return Err(Error::DimensionMismatch {
                expected: self.ie_max,
                got: ie,
            });
        }
        let t0 = Instant::now();
        let dofmap = number_dofs(self.space.graph(), ie);
        let system = assemble_acms(&dofmap, &self.basis, &self.blocks)?;
        let t1 = Instant::now();
        let (coeffs, residual) = system.solve()?;
        let t2 = Instant::now();
        let field = reconstruct(self.space, &self.basis, &dofmap, &coeffs)?;
        let mut timings = self.timings;
        timings.t_ass += (t1 - t0).as_secs_f64();
        timings.t_sol = (t2 - t1).as_secs_f64();
        Ok(AcmsSolution {
            ie,
            n_a: dofmap.ndofs,
            n_f: self.space.ndofs(),
            bandwidth: system.bandwidth(),
            coeffs,
            field,
            residual,
            timings,
        })
    }
}

/// One-shot ACMS solve with `ie` modes per edge.
pub fn solve_acms_problem(
    space: &HpSpace,
    assembly: &SesquilinearAssembly,
    problem: &HelmholtzProblem,
    ie: usize,
    cache: &EdgeModeCache,
) -> Result<AcmsSolution> {
    AcmsSession::new(space, assembly, problem, ie, cache)?.solve(ie)
}

/// Largest admissible mode count: the smallest interior trace dimension over all edges.
pub fn max_modes(space: &HpSpace) -> usize {
    space
        .edge_traces()
        .iter()
        .map(|t| t.dim().saturating_sub(2))
        .min()
        .unwrap_or(0)
}
