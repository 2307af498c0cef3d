use super::{marker, BoundarySegment, DomainDecomposition, InterfaceGraph, Mesh, Triangle};
use crate::{Error, Result};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Circular pore approximated by a regular polygon with vertices on the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoreSpec {
    pub radius: f64,
    pub segments: usize,
}

/// Square building block of the domain, optionally with a centred pore.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitCellSpec {
    pub side_length: f64,
    pub pore: Option<PoreSpec>,
    pub cell_tag: u32,
    pub pore_tag: u32,
}

impl Default for UnitCellSpec {
    fn default() -> Self {
        Self {
            side_length: 1.0,
            pore: None,
            cell_tag: 0,
            pore_tag: 1,
        }
    }
}

impl UnitCellSpec {
    pub fn with_pore(radius: f64, segments: usize) -> Self {
        Self {
            pore: Some(PoreSpec { radius, segments }),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_length > 0.0) {
            return Err(Error::Config("cell side length must be positive".into()));
        }
        if let Some(p) = self.pore {
            if !(p.radius > 0.0 && p.radius < 0.5 * self.side_length) {
                return Err(Error::Config(format!(
                    "pore radius {} must lie in (0, {})",
                    p.radius,
                    0.5 * self.side_length
                )));
            }
            if p.segments < 8 || p.segments % 2 != 0 {
                return Err(Error::Config(format!(
                    "pore polygon needs an even number of at least 8 sides, got {}",
                    p.segments
                )));
            }
        }
        Ok(())
    }
}

/// Triangulation of one cell in local coordinates `[0, 1]²`.
struct CellTemplate {
    nodes: Vec<[f64; 2]>,
    /// Lattice offset `(i, j) ∈ [0, n]²` of nodes on the cell boundary.
    lattice: Vec<Option<(usize, usize)>>,
    triangles: Vec<([usize; 3], bool)>,
}

impl CellTemplate {
    fn plain(n: usize) -> Self {
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        let mut lattice = Vec::with_capacity(nodes.capacity());
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
                let on = i == 0 || i == n || j == 0 || j == n;
                lattice.push(on.then_some((i, j)));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    triangles.push(([a, b, c], false));
                    triangles.push(([a, c, d], false));
                } else {
                    triangles.push(([a, b, d], false));
                    triangles.push(([b, c, d], false));
                }
            }
        }
        Self {
            nodes,
            lattice,
            triangles,
        }
    }

    /// Radial layers between the pore polygon and the square boundary, plus
    /// concentric polygon rings and a central fan inside the pore.
    fn with_pore(n: usize, h: f64, radius: f64, segments: usize) -> Result<Self> {
        let c = [0.5, 0.5];
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut lattice = Vec::new();
        let mut triangles = Vec::new();

        // Square boundary ring, counter-clockwise from the lower left corner.
        let mut outer = Vec::with_capacity(4 * n);
        for b in 0..4 * n {
            let (side, k) = (b / n, b % n);
            let (i, j) = match side {
                0 => (k, 0),
                1 => (n, k),
                2 => (n - k, n),
                _ => (0, n - k),
            };
            outer.push(nodes.len());
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            lattice.push(Some((i, j)));
        }

        let side_len = 2.0 * radius * (PI / segments as f64).sin();
        let polygon_ring = |scale: f64, nodes: &mut Vec<[f64; 2]>, lattice: &mut Vec<_>| {
            let q = ((side_len * scale / h).ceil() as usize).max(1);
            let vert = |m: usize| {
                let t = 2.0 * PI * (m % segments) as f64 / segments as f64;
                [c[0] + scale * radius * t.cos(), c[1] + scale * radius * t.sin()]
            };
            let mut ring = Vec::with_capacity(segments * q);
            for m in 0..segments {
                let (a, b) = (vert(m), vert(m + 1));
                for k in 0..q {
                    let s = k as f64 / q as f64;
                    ring.push(nodes.len());
                    nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                    lattice.push(None);
                }
            }
            ring
        };

        let pore_ring = polygon_ring(1.0, &mut nodes, &mut lattice);

        // Intermediate rings on the rays through the square boundary nodes.
        let layers = (((0.5 - radius) / h).ceil() as usize).max(1);
        let apothem = radius * (PI / segments as f64).cos();
        let sector = 2.0 * PI / segments as f64;
        let mut rings = vec![pore_ring.clone()];
        for t in 1..layers {
            let s = t as f64 / layers as f64;
            let mut ring = Vec::with_capacity(4 * n);
            for &o in &outer {
                let q = nodes[o];
                let (dx, dy) = (q[0] - c[0], q[1] - c[1]);
                let rq = dx.hypot(dy);
                let phi = dy.atan2(dx).rem_euclid(2.0 * PI);
                let m = (phi / sector).floor();
                let rp = apothem / (phi - m * sector - 0.5 * sector).cos();
                let rr = (1.0 - s) * rp + s * rq;
                ring.push(nodes.len());
                nodes.push([c[0] + rr * dx / rq, c[1] + rr * dy / rq]);
                lattice.push(None);
            }
            rings.push(ring);
        }
        rings.push(outer);
        for w in rings.windows(2) {
            zip_rings(&nodes, c, &w[0], &w[1], false, &mut triangles);
        }

        // Inside the pore the material is uniform, so the rings only need a
        // spacing of about h; keeping every polygon vertex would crowd the centre.
        let inner_layers = ((radius / h).ceil() as usize).max(1);
        let mut prev = pore_ring;
        for k in (1..inner_layers).rev() {
            let r = radius * k as f64 / inner_layers as f64;
            let m = ((2.0 * PI * r / h).ceil() as usize).max(8);
            let mut ring = Vec::with_capacity(m);
            for i in 0..m {
                let t = 2.0 * PI * i as f64 / m as f64;
                ring.push(nodes.len());
                nodes.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
                lattice.push(None);
            }
            zip_rings(&nodes, c, &ring, &prev, true, &mut triangles);
            prev = ring;
        }
        let centre = nodes.len();
        nodes.push(c);
        lattice.push(None);
        for k in 0..prev.len() {
            triangles.push(([centre, prev[k], prev[(k + 1) % prev.len()]], true));
        }

        for (tri, _) in triangles.iter_mut() {
            let [a, b, cc] = tri.map(|v| nodes[v]);
            let area = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1]);
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        Ok(Self {
            nodes,
            lattice,
            triangles,
        })
    }
}

/// Triangulates the annulus between two closed counter-clockwise rings by
/// merging their nodes in angular order around `c`.
fn zip_rings(
    nodes: &[[f64; 2]],
    c: [f64; 2],
    inner: &[usize],
    outer: &[usize],
    in_pore: bool,
    out: &mut Vec<([usize; 3], bool)>,
) {
    let angle = |v: usize| (nodes[v][1] - c[1]).atan2(nodes[v][0] - c[0]);
    let reference = angle(outer[0]) - 1e-9;
    let rel = |v: usize| (angle(v) - reference).rem_euclid(2.0 * PI);
    let rotate = |ring: &[usize]| -> (Vec<usize>, Vec<f64>) {
        let start = (0..ring.len())
            .min_by(|&a, &b| rel(ring[a]).total_cmp(&rel(ring[b])))
            .unwrap_or(0);
        let r: Vec<usize> = (0..ring.len()).map(|k| ring[(start + k) % ring.len()]).collect();
        let mut a: Vec<f64> = r.iter().map(|&v| rel(v)).collect();
        a.push(a[0] + 2.0 * PI);
        (r, a)
    };
    let (a, aa) = rotate(inner);
    let (b, ba) = rotate(outer);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_outer = j < nb && (i == na || ba[j + 1] < aa[i + 1]);
        if advance_outer {
            out.push(([a[i % na], b[j], b[(j + 1) % nb]], in_pore));
            j += 1;
        } else {
            out.push(([a[i], b[j % nb], a[(i + 1) % na]], in_pore));
            i += 1;
        }
    }
}

/// Meshes every cell of the decomposition with the same template.
pub fn mesh_domain(decomp: &DomainDecomposition, cell: &UnitCellSpec, h: f64) -> Result<(Mesh, InterfaceGraph)> {
    mesh_domain_with_layout(decomp, cell, h, |_, _| true)
}

/// Meshes the decomposition; `has_pore(cx, cy)` selects which cells carry the pore.
pub fn mesh_domain_with_layout(
    decomp: &DomainDecomposition,
    cell: &UnitCellSpec,
    h: f64,
    has_pore: impl Fn(usize, usize) -> bool,
) -> Result<(Mesh, InterfaceGraph)> {
    cell.validate()?;
    if (decomp.cell_size - cell.side_length).abs() > 1e-14 * cell.side_length {
        return Err(Error::Config(format!(
            "decomposition cell size {} differs from the unit cell side {}",
            decomp.cell_size, cell.side_length
        )));
    }
    if !(h > 0.0 && h <= 0.5 * cell.side_length) {
        return Err(Error::Config(format!(
            "mesh size {h} must lie in (0, {}]",
            0.5 * cell.side_length
        )));
    }
    let hl = h / cell.side_length;
    let n = (1.0 / hl - 1e-9).ceil() as usize;
    let plain = CellTemplate::plain(n);
    let pore = match cell.pore {
        Some(p) => Some(CellTemplate::with_pore(n, hl, p.radius / cell.side_length, p.segments)?),
        None => None,
    };
    let s = cell.side_length;
    let [ox, oy] = decomp.origin;
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut lattice_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::new();
    let lattice_coord = |g: usize, o: f64| o + g as f64 * s / n as f64;
    for cy in 0..decomp.cells_y {
        for cx in 0..decomp.cells_x {
            let tpl = match &pore {
                Some(t) if has_pore(cx, cy) => t,
                _ => &plain,
            };
            let sub = decomp.subdomain_of_cell(cx, cy);
            let mut map = Vec::with_capacity(tpl.nodes.len());
            for (v, p) in tpl.nodes.iter().enumerate() {
                let id = match tpl.lattice[v] {
                    Some((i, j)) => {
                        let key = (cx * n + i, cy * n + j);
                        *lattice_ids.entry(key).or_insert_with(|| {
                            nodes.push([lattice_coord(key.0, ox), lattice_coord(key.1, oy)]);
                            nodes.len() - 1
                        })
                    }
                    None => {
                        nodes.push([ox + cx as f64 * s + p[0] * s, oy + cy as f64 * s + p[1] * s]);
                        nodes.len() - 1
                    }
                };
                map.push(id);
            }
            for &(t, in_pore) in &tpl.triangles {
                triangles.push(Triangle {
                    nodes: t.map(|v| map[v]),
                    material: if in_pore { cell.pore_tag } else { cell.cell_tag },
                    subdomain: sub,
                });
            }
        }
    }
    let (nx, ny) = (decomp.cells_x * n, decomp.cells_y * n);
    let id = |g: (usize, usize)| lattice_ids[&g];
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for g in 0..nx {
        boundary.push(BoundarySegment { nodes: [id((g, 0)), id((g + 1, 0))], marker: marker::BOTTOM });
    }
    for g in 0..ny {
        boundary.push(BoundarySegment { nodes: [id((nx, g)), id((nx, g + 1))], marker: marker::RIGHT });
    }
    for g in (0..nx).rev() {
        boundary.push(BoundarySegment { nodes: [id((g + 1, ny)), id((g, ny))], marker: marker::TOP });
    }
    for g in (0..ny).rev() {
        boundary.push(BoundarySegment { nodes: [id((0, g + 1)), id((0, g))], marker: marker::LEFT });
    }
    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary,
        h: 0.0,
        decomp: decomp.clone(),
    };
    mesh.h = mesh.max_diameter();
    mesh.validate()?;
    let graph = InterfaceGraph::extract(&mesh)?;
    Ok((mesh, graph))
}
