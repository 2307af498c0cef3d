use super::{DomainDecomposition, Mesh, MeshEdges};
use crate::{Error, Result};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// Maximal straight segment of the interface between two decomposition vertices.
#[derive(Clone, Debug)]
pub struct InterfaceEdge {
    pub kind: EdgeKind,
    /// Grid position: a horizontal edge `(ix, iy)` runs from vertex `(ix, iy)`
    /// to `(ix + 1, iy)`, a vertical one from `(ix, iy)` to `(ix, iy + 1)`.
    pub grid: (usize, usize),
    pub vertices: [usize; 2],
    /// Mesh nodes on the edge sorted by arclength, endpoints included.
    pub nodes: Vec<usize>,
    /// Adjacent subdomains (one for edges on the domain boundary).
    pub subdomains: Vec<usize>,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct InterfaceVertex {
    pub coords: [f64; 2],
    pub node: usize,
    pub grid: (usize, usize),
}

/// Edge set and vertex set of a rectangular decomposition.
///
/// Vertex `(ix, iy)` has index `iy * (jx + 1) + ix`; horizontal edges come
/// first (row by row), then the vertical ones.
#[derive(Clone, Debug)]
pub struct InterfaceGraph {
    pub jx: usize,
    pub jy: usize,
    pub edges: Vec<InterfaceEdge>,
    pub vertices: Vec<InterfaceVertex>,
}

impl InterfaceGraph {
    pub fn extract(mesh: &Mesh) -> Result<Self> {
        let d: &DomainDecomposition = &mesh.decomp;
        let (jx, jy) = (d.jx, d.jy);
        let side = d.subdomain_side();
        let tol = 1e-10 * side;
        let [ox, oy] = d.origin;
        let line = |v: f64, o: f64, count: usize| -> Option<usize> {
            let k = ((v - o) / side).round();
            (k >= 0.0 && k <= count as f64 && (v - o - k * side).abs() <= tol).then_some(k as usize)
        };
        let mut on_h: Vec<Vec<usize>> = vec![Vec::new(); jy + 1];
        let mut on_v: Vec<Vec<usize>> = vec![Vec::new(); jx + 1];
        let mut vertex_node = vec![usize::MAX; (jx + 1) * (jy + 1)];
        for (i, p) in mesh.nodes.iter().enumerate() {
            let kx = line(p[0], ox, jx);
            let ky = line(p[1], oy, jy);
            if let Some(ky) = ky {
                on_h[ky].push(i);
            }
            if let Some(kx) = kx {
                on_v[kx].push(i);
            }
            if let (Some(kx), Some(ky)) = (kx, ky) {
                let q = ky * (jx + 1) + kx;
                if vertex_node[q] != usize::MAX {
                    return Err(Error::MeshInvariant {
                        entity: "node",
                        index: i,
                        msg: format!("duplicates decomposition vertex {q}"),
                    });
                }
                vertex_node[q] = i;
            }
        }
        let mut vertices = Vec::with_capacity(vertex_node.len());
        for iy in 0..=jy {
            for ix in 0..=jx {
                let q = iy * (jx + 1) + ix;
                if vertex_node[q] == usize::MAX {
                    return Err(Error::MeshInvariant {
                        entity: "decomposition vertex",
                        index: q,
                        msg: "no mesh node at the vertex".into(),
                    });
                }
                vertices.push(InterfaceVertex {
                    coords: mesh.nodes[vertex_node[q]],
                    node: vertex_node[q],
                    grid: (ix, iy),
                });
            }
        }
        let topo = MeshEdges::build(mesh)?;
        let mesh_edges: HashSet<[usize; 2]> = topo.edges.iter().copied().collect();

        let mut edges = Vec::with_capacity(d.num_edges());
        for (iy, list) in on_h.iter_mut().enumerate() {
            list.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
            for ix in 0..jx {
                let (x0, x1) = (ox + ix as f64 * side, ox + (ix + 1) as f64 * side);
                let nodes: Vec<usize> = list
                    .iter()
                    .copied()
                    .filter(|&v| mesh.nodes[v][0] >= x0 - tol && mesh.nodes[v][0] <= x1 + tol)
                    .collect();
                let mut subdomains = Vec::new();
                if iy > 0 {
                    subdomains.push(d.subdomain_index(ix, iy - 1));
                }
                if iy < jy {
                    subdomains.push(d.subdomain_index(ix, iy));
                }
                edges.push(InterfaceEdge {
                    kind: EdgeKind::Horizontal,
                    grid: (ix, iy),
                    vertices: [iy * (jx + 1) + ix, iy * (jx + 1) + ix + 1],
                    nodes,
                    subdomains,
                    length: side,
                });
            }
        }
        for list in on_v.iter_mut() {
            list.sort_by(|&a, &b| mesh.nodes[a][1].total_cmp(&mesh.nodes[b][1]));
        }
        for iy in 0..jy {
            for ix in 0..=jx {
                let (y0, y1) = (oy + iy as f64 * side, oy + (iy + 1) as f64 * side);
                let nodes: Vec<usize> = on_v[ix]
                    .iter()
                    .copied()
                    .filter(|&v| mesh.nodes[v][1] >= y0 - tol && mesh.nodes[v][1] <= y1 + tol)
                    .collect();
                let mut subdomains = Vec::new();
                if ix > 0 {
                    subdomains.push(d.subdomain_index(ix - 1, iy));
                }
                if ix < jx {
                    subdomains.push(d.subdomain_index(ix, iy));
                }
                edges.push(InterfaceEdge {
                    kind: EdgeKind::Vertical,
                    grid: (ix, iy),
                    vertices: [iy * (jx + 1) + ix, (iy + 1) * (jx + 1) + ix],
                    nodes,
                    subdomains,
                    length: side,
                });
            }
        }
        for (e, edge) in edges.iter().enumerate() {
            let ends = [vertex_node[edge.vertices[0]], vertex_node[edge.vertices[1]]];
            if edge.nodes.len() < 2 || edge.nodes[0] != ends[0] || *edge.nodes.last().unwrap() != ends[1] {
                return Err(Error::MeshInvariant {
                    entity: "interface edge",
                    index: e,
                    msg: "node list does not run between its vertices".into(),
                });
            }
            for w in edge.nodes.windows(2) {
                if !mesh_edges.contains(&[w[0].min(w[1]), w[0].max(w[1])]) {
                    return Err(Error::MeshInvariant {
                        entity: "interface edge",
                        index: e,
                        msg: format!("nodes {} and {} are not joined by a mesh edge", w[0], w[1]),
                    });
                }
            }
        }
        Ok(Self {
            jx,
            jy,
            edges,
            vertices,
        })
    }

    pub fn horizontal_edge(&self, ix: usize, iy: usize) -> usize {
        iy * self.jx + ix
    }

    pub fn vertical_edge(&self, ix: usize, iy: usize) -> usize {
        self.jx * (self.jy + 1) + iy * (self.jx + 1) + ix
    }

    pub fn vertex_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.jx + 1) + ix
    }

    /// Edges of subdomain `j`: bottom, right, top, left.
    pub fn subdomain_edges(&self, j: usize) -> [usize; 4] {
        let (ix, iy) = (j % self.jx, j / self.jx);
        [
            self.horizontal_edge(ix, iy),
            self.vertical_edge(ix + 1, iy),
            self.horizontal_edge(ix, iy + 1),
            self.vertical_edge(ix, iy),
        ]
    }

    /// Vertices of subdomain `j`: lower left, lower right, upper right, upper left.
    pub fn subdomain_vertices(&self, j: usize) -> [usize; 4] {
        let (ix, iy) = (j % self.jx, j / self.jx);
        [
            self.vertex_index(ix, iy),
            self.vertex_index(ix + 1, iy),
            self.vertex_index(ix + 1, iy + 1),
            self.vertex_index(ix, iy + 1),
        ]
    }

    /// Edges having `q` as an endpoint.
    pub fn vertex_edges(&self, q: usize) -> Vec<usize> {
        let (ix, iy) = self.vertices[q].grid;
        let mut out = Vec::with_capacity(4);
        if ix > 0 {
            out.push(self.horizontal_edge(ix - 1, iy));
        }
        if ix < self.jx {
            out.push(self.horizontal_edge(ix, iy));
        }
        if iy > 0 {
            out.push(self.vertical_edge(ix, iy - 1));
        }
        if iy < self.jy {
            out.push(self.vertical_edge(ix, iy));
        }
        out
    }

    /// Subdomains touching vertex `q`.
    pub fn vertex_subdomains(&self, q: usize) -> Vec<usize> {
        let (ix, iy) = self.vertices[q].grid;
        let mut out = Vec::with_capacity(4);
        for sy in [iy.wrapping_sub(1), iy] {
            for sx in [ix.wrapping_sub(1), ix] {
                if sx < self.jx && sy < self.jy {
                    out.push(sy * self.jx + sx);
                }
            }
        }
        out
    }
}
