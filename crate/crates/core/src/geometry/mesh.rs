use super::DomainDecomposition;
use crate::{Error, Result};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub material: u32,
    pub subdomain: usize,
}

/// Boundary facet, oriented counter-clockwise around the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySegment {
    pub nodes: [usize; 2],
    pub marker: u32,
}

/// Conforming triangulation of a rectangular domain split into subdomains.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    pub boundary: Vec<BoundarySegment>,
    /// Largest triangle diameter.
    pub h: f64,
    pub decomp: DomainDecomposition,
}

/// Unique mesh edges with their adjacency.
///
/// Edges are stored as ascending node pairs; local edge `k` of a triangle is
/// the one opposite its local vertex `k`.
#[derive(Clone, Debug)]
pub struct MeshEdges {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// Adjacent triangles; the second entry is `usize::MAX` for boundary edges.
    pub edge_triangles: Vec<[usize; 2]>,
}

impl MeshEdges {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(mesh.triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[usize; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for (k, e) in te.iter_mut().enumerate() {
                let a = tri.nodes[(k + 1) % 3];
                let b = tri.nodes[(k + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([usize::MAX; 2]);
                    edges.len() - 1
                });
                let adj = &mut edge_triangles[id];
                if adj[0] == usize::MAX {
                    adj[0] = t;
                } else if adj[1] == usize::MAX {
                    adj[1] = t;
                } else {
                    return Err(Error::MeshInvariant {
                        entity: "edge",
                        index: id,
                        msg: format!("shared by more than two triangles ({}, {}, {t})", adj[0], adj[1]),
                    });
                }
                *e = id;
            }
            triangle_edges.push(te);
        }
        Ok(Self {
            edges,
            triangle_edges,
            edge_triangles,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_boundary(&self, e: usize) -> bool {
        self.edge_triangles[e][1] == usize::MAX
    }
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let n = self.triangles[t].nodes;
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]]]
    }

    /// Signed area (positive for counter-clockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Triangles owned by each subdomain, in ascending order.
    pub fn subdomain_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.decomp.num_subdomains()];
        for (t, tri) in self.triangles.iter().enumerate() {
            out[tri.subdomain].push(t);
        }
        out
    }

    /// Checks orientation, quality, subdomain containment, conformity and boundary coverage.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let nsub = self.decomp.num_subdomains();
        let h = self.max_diameter();
        let tol = 1e-10 * self.decomp.subdomain_side();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.nodes.iter().any(|&v| v >= n) {
                return Err(invariant("triangle", t, "node index out of range"));
            }
            if tri.nodes[0] == tri.nodes[1] || tri.nodes[1] == tri.nodes[2] || tri.nodes[0] == tri.nodes[2] {
                return Err(invariant("triangle", t, "repeated node"));
            }
            let area = self.signed_area(t);
            if area <= 0.0 {
                return Err(invariant("triangle", t, "not positively oriented"));
            }
            if area < 1e-14 * h * h {
                return Err(Error::MeshQuality { triangle: t, area });
            }
            if tri.subdomain >= nsub {
                return Err(invariant("triangle", t, "subdomain index out of range"));
            }
            let rect = &self.decomp.subdomain_rects[tri.subdomain];
            if !self.vertices(t).iter().all(|&p| rect.contains(p, tol)) {
                return Err(invariant(
                    "triangle",
                    t,
                    &format!("not contained in its subdomain {} (containment violation)", tri.subdomain),
                ));
            }
        }
        let topo = MeshEdges::build(self)?;
        let bb = self.decomp.bounding_box();
        let mut boundary_edges: HashMap<[usize; 2], usize> = HashMap::new();
        for (s, seg) in self.boundary.iter().enumerate() {
            let [a, b] = seg.nodes;
            if a >= n || b >= n {
                return Err(invariant("boundary segment", s, "node index out of range"));
            }
            if boundary_edges.insert([a.min(b), a.max(b)], s).is_some() {
                return Err(invariant("boundary segment", s, "duplicate segment"));
            }
        }
        for (e, &[a, b]) in topo.edges.iter().enumerate() {
            let on_boundary = on_bbox(self.nodes[a], &bb, tol) && on_bbox(self.nodes[b], &bb, tol) && {
                let m = mid(self.nodes[a], self.nodes[b]);
                on_bbox(m, &bb, tol)
            };
            if topo.is_boundary(e) {
                if !on_boundary {
                    return Err(invariant(
                        "edge",
                        e,
                        &format!("open edge ({a}, {b}) inside the domain (hanging node or gap)"),
                    ));
                }
                if !boundary_edges.contains_key(&[a, b]) {
                    return Err(invariant("edge", e, "boundary edge without boundary segment"));
                }
            } else if boundary_edges.contains_key(&[a, b]) {
                return Err(invariant("edge", e, "interior edge marked as boundary"));
            }
        }
        let nb = topo.edges.iter().enumerate().filter(|(e, _)| topo.is_boundary(*e)).count();
        if nb != self.boundary.len() {
            return Err(invariant("boundary segment", 0, "segments do not match mesh boundary edges"));
        }
        Ok(())
    }

    /// Red refinement: every triangle is split into four by its edge midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        let mut nodes = self.nodes.clone();
        let mut midpoint: HashMap<[usize; 2], usize> = HashMap::new();
        let mut mid_of = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
            *midpoint.entry([a.min(b), a.max(b)]).or_insert_with(|| {
                nodes.push(mid(nodes[a], nodes[b]));
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let [a, b, c] = tri.nodes;
            let ab = mid_of(a, b, &mut nodes);
            let bc = mid_of(b, c, &mut nodes);
            let ca = mid_of(c, a, &mut nodes);
            for nodes in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(Triangle { nodes, ..*tri });
            }
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for seg in &self.boundary {
            let [a, b] = seg.nodes;
            let m = mid_of(a, b, &mut nodes);
            boundary.push(BoundarySegment { nodes: [a, m], marker: seg.marker });
            boundary.push(BoundarySegment { nodes: [m, b], marker: seg.marker });
        }
        let mut out = Mesh {
            nodes,
            triangles,
            boundary,
            h: 0.0,
            decomp: self.decomp.clone(),
        };
        out.h = out.max_diameter();
        out
    }
}

fn invariant(entity: &'static str, index: usize, msg: &str) -> Error {
    Error::MeshInvariant {
        entity,
        index,
        msg: msg.to_string(),
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn on_bbox(p: [f64; 2], bb: &super::Rect, tol: f64) -> bool {
    (p[0] - bb.x0).abs() <= tol
        || (p[0] - bb.x1).abs() <= tol
        || (p[1] - bb.y0).abs() <= tol
        || (p[1] - bb.y1).abs() <= tol
}
