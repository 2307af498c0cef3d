use super::basis::ReferenceElement;
use crate::geometry::{InterfaceGraph, Mesh, MeshEdges};
use crate::{Error, Result};
use std::sync::{Arc, OnceLock};

use super::field::PointLocator;

/// Mesh entity carrying a global dof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofEntity {
    Vertex(usize),
    /// Mesh edge and polynomial degree `2..=p`.
    Edge(usize, usize),
    /// Triangle and bubble index.
    Bubble(usize, usize),
}

/// One mesh segment of a decomposition edge.
#[derive(Clone, Debug)]
pub struct TraceSegment {
    pub mesh_edge: usize,
    pub length: f64,
    /// `true` when the arclength direction runs from the higher to the lower node index.
    pub reversed: bool,
}

/// Trace space of a decomposition edge.
///
/// Dofs are listed along the edge: vertex dof of the first node, edge dofs
/// of the first segment (degrees `2..=p`), vertex dof of the second node, and
/// so on up to the vertex dof of the last node.
#[derive(Clone, Debug)]
pub struct EdgeTrace {
    pub edge: usize,
    pub dofs: Vec<usize>,
    pub segments: Vec<TraceSegment>,
}

impl EdgeTrace {
    /// Dimension `n_e` of the trace space.
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    /// Positions in `dofs` of the interior trace dofs (all but the two endpoints).
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.dofs.len() - 1
    }

    /// Position in `dofs` of the vertex dof of the `k`-th node.
    pub fn node_position(&self, k: usize, p: usize) -> usize {
        k * p
    }
}

/// Dofs of one subdomain in local numbering.
#[derive(Clone, Debug)]
pub struct SubdomainDofs {
    pub triangles: Vec<usize>,
    /// Global dofs, ascending; local index = position.
    pub dofs: Vec<usize>,
    /// Local indices of dofs not on the subdomain boundary.
    pub interior: Vec<usize>,
    /// Local indices of dofs on the subdomain boundary.
    pub boundary: Vec<usize>,
    /// Local dofs of each owned triangle, `nloc` per triangle.
    pub element_dofs: Vec<usize>,
}

impl SubdomainDofs {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.dofs.binary_search(&global).ok()
    }
}

/// Boundary facet of the domain with its owning triangle.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFacet {
    pub nodes: [usize; 2],
    pub marker: u32,
    pub triangle: usize,
    pub normal: [f64; 2],
    pub length: f64,
    pub mesh_edge: usize,
}

/// Conforming hierarchical order-`p` finite element space on a mesh.
///
/// Global dofs: mesh vertices first, then `p - 1` dofs per mesh edge, then
/// the interior bubbles of every triangle.
#[derive(Debug)]
pub struct HpSpace {
    mesh: Arc<Mesh>,
    graph: Arc<InterfaceGraph>,
    topo: MeshEdges,
    element: ReferenceElement,
    p: usize,
    ndofs: usize,
    elem_dofs: Vec<usize>,
    elem_signs: Vec<f64>,
    edge_traces: Vec<EdgeTrace>,
    subdomains: Vec<SubdomainDofs>,
    facets: Vec<BoundaryFacet>,
    locator: OnceLock<PointLocator>,
}

impl HpSpace {
    pub fn new(mesh: Arc<Mesh>, graph: Arc<InterfaceGraph>, p: usize) -> Result<Self> {
        let element = ReferenceElement::new(p)?;
        let topo = MeshEdges::build(&mesh)?;
        let nv = mesh.num_nodes();
        let ne = topo.len();
        let nb = element.num_bubbles();
        let nloc = element.num_dofs();
        let ndofs = nv + ne * (p - 1) + mesh.num_triangles() * nb;

        let mut elem_dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        let mut elem_signs = Vec::with_capacity(mesh.num_triangles() * nloc);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            elem_dofs.extend_from_slice(&tri.nodes);
            let mut flipped = [false; 3];
            for k in 0..3 {
                let (a, b) = (tri.nodes[(k + 1) % 3], tri.nodes[(k + 2) % 3]);
                flipped[k] = a > b;
                let e = topo.triangle_edges[t][k];
                elem_dofs.extend((0..p - 1).map(|i| nv + e * (p - 1) + i));
            }
            let base = nv + ne * (p - 1) + t * nb;
            elem_dofs.extend(base..base + nb);
            elem_signs.extend(element.signs(flipped));
        }

        let lookup = edge_lookup(&topo);
        let edge_traces = graph
            .edges
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let mut dofs = Vec::with_capacity(e.nodes.len() * p);
                let mut segments = Vec::with_capacity(e.nodes.len() - 1);
                for (k, w) in e.nodes.windows(2).enumerate() {
                    let (a, b) = (w[0], w[1]);
                    let me = *lookup.get(&[a.min(b), a.max(b)]).ok_or(Error::MeshInvariant {
                        entity: "interface edge",
                        index: id,
                        msg: format!("segment {k} is not a mesh edge"),
                    })?;
                    dofs.push(a);
                    dofs.extend((0..p - 1).map(|i| nv + me * (p - 1) + i));
                    let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                    segments.push(TraceSegment {
                        mesh_edge: me,
                        length: (pb[0] - pa[0]).hypot(pb[1] - pa[1]),
                        reversed: a > b,
                    });
                }
                dofs.push(*e.nodes.last().expect("edge has nodes"));
                Ok(EdgeTrace {
                    edge: id,
                    dofs,
                    segments,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut facets = Vec::with_capacity(mesh.boundary.len());
        for seg in &mesh.boundary {
            let [a, b] = seg.nodes;
            let e = *lookup
                .get(&[a.min(b), a.max(b)])
                .ok_or_else(|| Error::MeshInvariant {
                    entity: "boundary segment",
                    index: 0,
                    msg: "not a mesh edge".into(),
                })?;
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
            let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
            let len = dx.hypot(dy);
            facets.push(BoundaryFacet {
                nodes: [a, b],
                marker: seg.marker,
                triangle: topo.edge_triangles[e][0],
                normal: [dy / len, -dx / len],
                length: len,
                mesh_edge: e,
            });
        }

        let mut space = Self {
            mesh,
            graph,
            topo,
            element,
            p,
            ndofs,
            elem_dofs,
            elem_signs,
            edge_traces,
            subdomains: Vec::new(),
            facets,
            locator: OnceLock::new(),
        };
        space.subdomains = space.split_subdomains();
        Ok(space)
    }

    fn split_subdomains(&self) -> Vec<SubdomainDofs> {
        let mesh = &self.mesh;
        let nloc = self.element.num_dofs();
        let tol = 1e-10 * mesh.decomp.subdomain_side();
        let owned = mesh.subdomain_triangles();
        let mut mark = vec![usize::MAX; self.ndofs];
        owned
            .into_iter()
            .enumerate()
            .map(|(j, triangles)| {
                let rect = mesh.decomp.subdomain_rects[j];
                let on_side = |p: [f64; 2]| {
                    (p[0] - rect.x0).abs() <= tol
                        || (p[0] - rect.x1).abs() <= tol
                        || (p[1] - rect.y0).abs() <= tol
                        || (p[1] - rect.y1).abs() <= tol
                };
                let mut dofs = Vec::new();
                for &t in &triangles {
                    for &d in self.element_dofs(t) {
                        if mark[d] != j {
                            mark[d] = j;
                            dofs.push(d);
                        }
                    }
                }
                dofs.sort_unstable();
                let mut interior = Vec::new();
                let mut boundary = Vec::new();
                for (l, &d) in dofs.iter().enumerate() {
                    let on = match self.dof_entity(d) {
                        DofEntity::Vertex(v) => on_side(mesh.nodes[v]),
                        DofEntity::Edge(e, _) => {
                            let [a, b] = self.topo.edges[e];
                            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                            on_side(pa)
                                && on_side(pb)
                                && on_side([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])])
                        }
                        DofEntity::Bubble(..) => false,
                    };
                    if on {
                        boundary.push(l);
                    } else {
                        interior.push(l);
                    }
                }
                let mut element_dofs = Vec::with_capacity(triangles.len() * nloc);
                for &t in &triangles {
                    element_dofs.extend(
                        self.element_dofs(t)
                            .iter()
                            .map(|d| dofs.binary_search(d).expect("dof collected")),
                    );
                }
                SubdomainDofs {
                    triangles,
                    dofs,
                    interior,
                    boundary,
                    element_dofs,
                }
            })
            .collect()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn graph(&self) -> &InterfaceGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<InterfaceGraph> {
        &self.graph
    }

    pub fn topology(&self) -> &MeshEdges {
        &self.topo
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Dimension `N_F`.
    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn nloc(&self) -> usize {
        self.element.num_dofs()
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.nloc();
        &self.elem_dofs[t * n..(t + 1) * n]
    }

    pub fn element_signs(&self, t: usize) -> &[f64] {
        let n = self.nloc();
        &self.elem_signs[t * n..(t + 1) * n]
    }

    pub fn edge_trace(&self, e: usize) -> &EdgeTrace {
        &self.edge_traces[e]
    }

    pub fn edge_traces(&self) -> &[EdgeTrace] {
        &self.edge_traces
    }

    pub fn subdomain(&self, j: usize) -> &SubdomainDofs {
        &self.subdomains[j]
    }

    pub fn subdomains(&self) -> &[SubdomainDofs] {
        &self.subdomains
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn dof_entity(&self, d: usize) -> DofEntity {
        let nv = self.mesh.num_nodes();
        let pe = self.p - 1;
        let ne = self.topo.len();
        if d < nv {
            DofEntity::Vertex(d)
        } else if d < nv + ne * pe {
            let r = d - nv;
            DofEntity::Edge(r / pe, 2 + r % pe)
        } else {
            let r = d - nv - ne * pe;
            let nb = self.element.num_bubbles();
            DofEntity::Bubble(r / nb, r % nb)
        }
    }

    /// Representative location of a dof: node, edge midpoint or centroid.
    pub fn dof_location(&self, d: usize) -> [f64; 2] {
        match self.dof_entity(d) {
            DofEntity::Vertex(v) => self.mesh.nodes[v],
            DofEntity::Edge(e, _) => {
                let [a, b] = self.topo.edges[e];
                let (pa, pb) = (self.mesh.nodes[a], self.mesh.nodes[b]);
                [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
            }
            DofEntity::Bubble(t, _) => self.mesh.centroid(t),
        }
    }

    pub(crate) fn locator(&self) -> &PointLocator {
        self.locator.get_or_init(|| PointLocator::new(&self.mesh))
    }

    /// Permutation of `dofs` sorting them by location, `y` first, then `x`.
    pub fn lexicographic_order(&self, dofs: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..dofs.len()).collect();
        let loc: Vec<[f64; 2]> = dofs.iter().map(|&d| self.dof_location(d)).collect();
        order.sort_by(|&a, &b| {
            loc[a][1]
                .total_cmp(&loc[b][1])
                .then(loc[a][0].total_cmp(&loc[b][0]))
                .then(dofs[a].cmp(&dofs[b]))
        });
        order
    }
}

fn edge_lookup(topo: &MeshEdges) -> std::collections::HashMap<[usize; 2], usize> {
    topo.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect()
}
