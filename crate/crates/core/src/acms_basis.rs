//! Discrete ACMS ingredients: edge eigenmodes, vertex traces and the
//! per-subdomain Helmholtz-harmonic extension.

use crate::femcore::{interval_basis, interval_rule, HpSpace, SesquilinearAssembly, SubdomainBlock};
use crate::linalg::{dense_solve, generalized_eig_symmetric, BandedMatrix, CsrMatrix, DenseMatrix, LuFactorization};
use crate::{Complex64, Error, Result};
use std::sync::{Arc, Mutex};

/// Tolerance for comparing edge discretizations.
pub const KEY_TOL: f64 = 1e-13;

/// Identifies the 1D discretization of a decomposition edge: order and the
/// segment lengths in along-edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeKey {
    pub p: usize,
    pub spacings: Vec<f64>,
}

impl EdgeKey {
    pub fn length(&self) -> f64 {
        self.spacings.iter().sum()
    }

    /// Two keys match when the discretizations agree within [`KEY_TOL`].
    pub fn matches(&self, other: &EdgeKey) -> bool {
        self.p == other.p
            && self.spacings.len() == other.spacings.len()
            && (self.length() - other.length()).abs() <= KEY_TOL
            && self.spacings.iter().zip(&other.spacings).all(|(a, b)| (a - b).abs() <= KEY_TOL)
    }
}

pub fn edge_reuse_key(space: &HpSpace, edge: usize) -> EdgeKey {
    EdgeKey {
        p: space.order(),
        spacings: space.edge_trace(edge).segments.iter().map(|s| s.length).collect(),
    }
}

/// 1D stiffness and mass matrices over all trace positions of an edge
/// discretized by `key`, in the unsigned along-edge basis.
pub fn canonical_edge_matrices(key: &EdgeKey) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    let p = key.p;
    let n = key.spacings.len() * p + 1;
    let rule = interval_rule(2 * p)?;
    let mut k = DenseMatrix::zeros(n, n);
    let mut m = DenseMatrix::zeros(n, n);
    let tabs: Vec<(Vec<f64>, Vec<f64>)> = rule.points.iter().map(|&s| interval_basis(p, s)).collect();
    for (seg, &len) in key.spacings.iter().enumerate() {
        let pos = |i: usize| match i {
            0 => seg * p,
            1 => (seg + 1) * p,
            d => seg * p + d - 1,
        };
        for ((v, d), w) in tabs.iter().zip(&rule.weights) {
            for i in 0..=p {
                for j in 0..=p {
                    k[(pos(i), pos(j))] += w * d[i] * d[j] / len;
                    m[(pos(i), pos(j))] += w * v[i] * v[j] * len;
                }
            }
        }
    }
    Ok((k, m))
}

/// Signs relating the unsigned along-edge basis to the global trace dofs of an edge.
pub fn trace_signs(space: &HpSpace, edge: usize) -> Vec<f64> {
    let p = space.order();
    let tr = space.edge_trace(edge);
    let mut s = vec![1.0; tr.dim()];
    for (seg, sg) in tr.segments.iter().enumerate() {
        if sg.reversed {
            for deg in (3..=p).step_by(2) {
                s[seg * p + deg - 1] = -1.0;
            }
        }
    }
    s
}

/// 1D stiffness and mass matrices of an edge in its global trace dofs.
pub fn edge_trace_matrices(space: &HpSpace, edge: usize) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    let (mut k, mut m) = canonical_edge_matrices(&edge_reuse_key(space, edge))?;
    let s = trace_signs(space, edge);
    for i in 0..s.len() {
        for j in 0..s.len() {
            k[(i, j)] *= s[i] * s[j];
            m[(i, j)] *= s[i] * s[j];
        }
    }
    Ok((k, m))
}

/// Modes of a 1D edge discretization on the interior trace positions.
#[derive(Clone, Debug)]
pub struct CanonicalModes {
    pub key: EdgeKey,
    pub eigenvalues: Vec<f64>,
    /// `(n_e - 2) × count`, unsigned along-edge basis.
    pub vectors: DenseMatrix<f64>,
}

/// Solves the edge eigenproblem for the `count` smallest modes.
pub fn solve_canonical_modes(key: &EdgeKey, count: usize, edge: usize) -> Result<CanonicalModes> {
    let n = key.spacings.len() * key.p + 1;
    let available = n.saturating_sub(2);
    if count > available {
        return Err(Error::EnrichSpace {
            edge,
            requested: count,
            available,
        });
    }
    let (k, m) = canonical_edge_matrices(key)?;
    let inner = |a: &DenseMatrix<f64>| DenseMatrix::from_fn(available, available, |i, j| a[(i + 1, j + 1)]);
    let eig = generalized_eig_symmetric(&inner(&k), &inner(&m), count)?;
    Ok(CanonicalModes {
        key: key.clone(),
        eigenvalues: eig.values,
        vectors: eig.vectors,
    })
}

/// Edge eigenmodes of one decomposition edge.
#[derive(Clone, Debug)]
pub struct EdgeModeSet {
    pub edge: usize,
    pub eigenvalues: Vec<f64>,
    /// `(n_e - 2) × I_E`; row `r` is the coefficient of the trace dof at position `r + 1`.
    pub modes: DenseMatrix<f64>,
}

impl EdgeModeSet {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    fn from_canonical(space: &HpSpace, edge: usize, c: &CanonicalModes, count: usize) -> Self {
        let s = trace_signs(space, edge);
        let rows = c.vectors.rows();
        Self {
            edge,
            eigenvalues: c.eigenvalues[..count].to_vec(),
            modes: DenseMatrix::from_fn(rows, count, |r, i| s[r + 1] * c.vectors[(r, i)]),
        }
    }
}

/// Computes the `count` lowest eigenmodes of a decomposition edge, without caching.
pub fn compute_edge_modes(space: &HpSpace, edge: usize, count: usize) -> Result<EdgeModeSet> {
    let c = solve_canonical_modes(&edge_reuse_key(space, edge), count, edge)?;
    Ok(EdgeModeSet::from_canonical(space, edge, &c, count))
}

/// Write-once table of edge eigenmodes keyed by [`EdgeKey`].
#[derive(Debug, Default)]
pub struct EdgeModeCache {
    entries: Mutex<Vec<Arc<CanonicalModes>>>,
    solves: Mutex<usize>,
}

impl EdgeModeCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of eigenproblems solved so far.
    pub fn solves(&self) -> usize {
        *self.solves.lock().expect("cache lock")
    }

    /// Number of distinct keys held.
    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, space: &HpSpace, edge: usize, count: usize) -> Result<EdgeModeSet> {
        let key = edge_reuse_key(space, edge);
        let available = (key.spacings.len() * key.p + 1).saturating_sub(2);
        if count > available {
            return Err(Error::EnrichSpace {
                edge,
                requested: count,
                available,
            });
        }
        let hit = {
            let entries = self.entries.lock().expect("cache lock");
            entries
                .iter()
                .find(|c| c.key.matches(&key))
                .cloned()
        };
        let modes = match hit {
            Some(c) => c,
            None => {
                // The dense solve yields the whole spectrum at no extra cost.
                let c = Arc::new(solve_canonical_modes(&key, available, edge)?);
                *self.solves.lock().expect("cache lock") += 1;
                self.entries.lock().expect("cache lock").push(c.clone());
                c
            }
        };
        Ok(EdgeModeSet::from_canonical(space, edge, &modes, count))
    }
}

/// Trace of a vertex function on the edges adjacent to the vertex.
#[derive(Clone, Debug)]
pub struct VertexTrace {
    pub vertex: usize,
    /// Edge id and coefficients over all trace positions of that edge.
    pub traces: Vec<(usize, Vec<f64>)>,
}

/// Linear trace of the vertex function of `q` on each adjacent straight edge.
pub fn compute_vertex_trace(space: &HpSpace, q: usize) -> VertexTrace {
    let graph = space.graph();
    let p = space.order();
    let traces = graph
        .vertex_edges(q)
        .into_iter()
        .map(|e| {
            let tr = space.edge_trace(e);
            let at_start = graph.edges[e].vertices[0] == q;
            let total: f64 = tr.segments.iter().map(|s| s.length).sum();
            let mut c = vec![0.0; tr.dim()];
            let mut s = 0.0;
            for k in 0..=tr.segments.len() {
                let t = if k == tr.segments.len() { 1.0 } else { s / total };
                c[k * p] = if at_start { 1.0 - t } else { t };
                if k < tr.segments.len() {
                    s += tr.segments[k].length;
                }
            }
            (e, c)
        })
        .collect();
    VertexTrace { vertex: q, traces }
}

/// Edgewise discrete-harmonic trace with the given endpoint values, by a
/// direct 1D solve. Used to verify the closed-form linear vertex traces.
pub fn edge_harmonic_trace(space: &HpSpace, edge: usize, ends: [f64; 2]) -> Result<Vec<f64>> {
    let (k, _) = edge_trace_matrices(space, edge)?;
    let n = k.rows();
    let ni = n - 2;
    let mut x = vec![0.0; n];
    x[0] = ends[0];
    x[n - 1] = ends[1];
    if ni == 0 {
        return Ok(x);
    }
    let kii = DenseMatrix::from_fn(ni, ni, |i, j| k[(i + 1, j + 1)]);
    let rhs = DenseMatrix::from_fn(ni, 1, |i, _| -(k[(i + 1, 0)] * ends[0] + k[(i + 1, n - 1)] * ends[1]));
    let sol = dense_solve(&kii, &rhs)?;
    for i in 0..ni {
        x[i + 1] = sol[(i, 0)];
    }
    Ok(x)
}

/// Elimination data of the bubbles of one element.
#[derive(Clone, Debug)]
struct BubbleBlock {
    bubbles: Vec<usize>,
    others: Vec<usize>,
    /// `K_bb⁻¹ K_bo`, `bubbles × others`.
    elim: DenseMatrix<f64>,
}

/// Discrete Helmholtz-harmonic extension on one subdomain.
///
/// Bubbles are condensed element by element; the remaining interior dofs
/// are ordered lexicographically and the real interior block `A_j − M_j` is
/// factored once by banded LU.
#[derive(Debug)]
pub struct SubdomainExtension {
    pub subdomain: usize,
    n_local: usize,
    /// Local indices of the boundary-trace dofs (same order as `SubdomainDofs::boundary`).
    pub boundary: Vec<usize>,
    /// Local indices of the condensed interior dofs in factorization order.
    skeleton: Vec<usize>,
    coupling: CsrMatrix<f64>,
    bubbles: Vec<BubbleBlock>,
    lu: LuFactorization<f64>,
}

impl SubdomainExtension {
    pub fn num_local(&self) -> usize {
        self.n_local
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Size of the factored interior system after bubble condensation.
    pub fn factored_dim(&self) -> usize {
        self.skeleton.len()
    }

    pub fn factor_bytes(&self) -> usize {
        self.lu.memory_bytes()
    }

    /// Extends traces given as columns of `traces` (`boundary × ncols`) into
    /// the subdomain; returns local coefficients (`N_j × ncols`).
    pub fn extend(&self, traces: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
        let nb = self.boundary.len();
        if traces.rows() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: traces.rows(),
            });
        }
        let nc = traces.cols();
        let ns = self.skeleton.len();
        let mut x = vec![0.0; ns * nc];
        for r in 0..ns {
            let (cols, vals) = self.coupling.row(r);
            let xr = &mut x[r * nc..(r + 1) * nc];
            for (&c, &v) in cols.iter().zip(vals) {
                for (a, &t) in xr.iter_mut().zip(traces.row(c)) {
                    *a -= v * t;
                }
            }
        }
        self.lu.solve_in_place(&mut x, nc)?;
        let mut out = DenseMatrix::zeros(self.n_local, nc);
        for (i, &l) in self.boundary.iter().enumerate() {
            out.row_mut(l).copy_from_slice(traces.row(i));
        }
        for (r, &l) in self.skeleton.iter().enumerate() {
            out.row_mut(l).copy_from_slice(&x[r * nc..(r + 1) * nc]);
        }
        let mut acc = vec![0.0; nc];
        for blk in &self.bubbles {
            for (bi, &b) in blk.bubbles.iter().enumerate() {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for (oi, &o) in blk.others.iter().enumerate() {
                    let e = blk.elim[(bi, oi)];
                    if e != 0.0 {
                        for (a, &u) in acc.iter_mut().zip(out.row(o)) {
                            *a -= e * u;
                        }
                    }
                }
                out.row_mut(b).copy_from_slice(&acc);
            }
        }
        Ok(out)
    }

    /// Extends one complex trace; returns the local coefficient vector.
    pub fn extend_trace(&self, trace: &[Complex64]) -> Result<Vec<Complex64>> {
        let nb = self.boundary.len();
        if trace.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: trace.len(),
            });
        }
        let t = DenseMatrix::from_fn(nb, 2, |i, c| if c == 0 { trace[i].re } else { trace[i].im });
        let u = self.extend(&t)?;
        Ok((0..self.n_local).map(|i| Complex64::new(u[(i, 0)], u[(i, 1)])).collect())
    }
}

/// Factors the interior Helmholtz block of subdomain `j`.
pub fn build_extension(space: &HpSpace, assembly: &SesquilinearAssembly, j: usize) -> Result<SubdomainExtension> {
    build_extension_from_block(space, &assembly.blocks[j], j)
}

/// Factors the interior Helmholtz block of subdomain `j` given its assembled block.
pub fn build_extension_from_block(space: &HpSpace, block: &SubdomainBlock, j: usize) -> Result<SubdomainExtension> {
    let sd = space.subdomain(j);
    let n = sd.len();
    let k = block.helmholtz();
    let nloc = space.nloc();
    let nbub = space.element().num_bubbles();
    let first_bubble = nloc - nbub;
    let resonance = |e: Error| match e {
        Error::Singular { .. } => Error::Resonance { subdomain: j },
        e => e,
    };

    // Per-element bubble elimination and its Schur contribution.
    let mut is_bubble = vec![false; n];
    let mut bubbles = Vec::with_capacity(if nbub > 0 { sd.triangles.len() } else { 0 });
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    if nbub > 0 {
        for el in sd.element_dofs.chunks(nloc) {
            let (others, bub) = (el[..first_bubble].to_vec(), el[first_bubble..].to_vec());
            let kbb = DenseMatrix::from_fn(nbub, nbub, |a, b| k.get(bub[a], bub[b]));
            let kbo = DenseMatrix::from_fn(nbub, others.len(), |a, b| k.get(bub[a], others[b]));
            let elim = dense_solve(&kbb, &kbo).map_err(resonance)?;
            for (oi, &o) in others.iter().enumerate() {
                for (oj, &o2) in others.iter().enumerate() {
                    let s: f64 = (0..nbub).map(|b| kbo[(b, oi)] * elim[(b, oj)]).sum();
                    triplets.push((o, o2, -s));
                }
            }
            for &b in &bub {
                is_bubble[b] = true;
            }
            bubbles.push(BubbleBlock { bubbles: bub, others, elim });
        }
    }
    for i in 0..n {
        if is_bubble[i] {
            continue;
        }
        let (cols, vals) = k.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            if !is_bubble[c] {
                triplets.push((i, c, v));
            }
        }
    }
    let condensed = CsrMatrix::from_triplets(n, n, &triplets)?;

    let interior: Vec<usize> = sd.interior.iter().copied().filter(|&l| !is_bubble[l]).collect();
    let globals: Vec<usize> = interior.iter().map(|&l| sd.dofs[l]).collect();
    let skeleton: Vec<usize> = space.lexicographic_order(&globals).into_iter().map(|i| interior[i]).collect();
    let ns = skeleton.len();

    let mut pos = vec![usize::MAX; n];
    for (r, &l) in skeleton.iter().enumerate() {
        pos[l] = r;
    }
    let mut bpos = vec![usize::MAX; n];
    for (r, &l) in sd.boundary.iter().enumerate() {
        bpos[l] = r;
    }
    let kss = condensed.select(&skeleton, &pos, ns);
    let coupling = condensed.select(&skeleton, &bpos, sd.boundary.len());

    let (mut kl, mut ku) = (0, 0);
    for r in 0..ns {
        for &c in kss.row(r).0 {
            kl = kl.max(r.saturating_sub(c));
            ku = ku.max(c.saturating_sub(r));
        }
    }
    let mut band = BandedMatrix::zeros(ns, kl, ku);
    for r in 0..ns {
        let (cols, vals) = kss.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            band.add(r, c, v)?;
        }
    }
    let lu = if ns == 0 {
        band.factor()?
    } else {
        band.factor().map_err(resonance)?
    };
    Ok(SubdomainExtension {
        subdomain: j,
        n_local: n,
        boundary: sd.boundary.clone(),
        skeleton,
        coupling,
        bubbles,
        lu,
    })
}

/// Positions of an edge's trace dofs in the boundary list of subdomain `j`.
pub fn edge_boundary_positions(space: &HpSpace, j: usize, edge: usize) -> Result<Vec<usize>> {
    let sd = space.subdomain(j);
    let tr = space.edge_trace(edge);
    tr.dofs
        .iter()
        .map(|&d| {
            sd.local_index(d)
                .and_then(|l| sd.boundary.binary_search(&l).ok())
                .ok_or_else(|| Error::MeshInvariant {
                    entity: "interface edge",
                    index: edge,
                    msg: format!("trace dof {d} is not a boundary dof of subdomain {j}"),
                })
        })
        .collect()
}
