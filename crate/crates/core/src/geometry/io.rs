use super::{BoundarySegment, DomainDecomposition, InterfaceGraph, Mesh, Triangle};
use crate::{Error, Result};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes the mesh in the line-oriented `acmsmesh 1` format.
pub fn write_mesh<W: Write>(mesh: &Mesh, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "acmsmesh 1")?;
    writeln!(w, "nodes {}", mesh.nodes.len())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
    }
    writeln!(w, "triangles {}", mesh.triangles.len())?;
    for t in &mesh.triangles {
        let [a, b, c] = t.nodes;
        writeln!(w, "{a} {b} {c} {} {}", t.material, t.subdomain)?;
    }
    writeln!(w, "bsegments {}", mesh.boundary.len())?;
    for s in &mesh.boundary {
        writeln!(w, "{} {} {}", s.nodes[0], s.nodes[1], s.marker)?;
    }
    let d = &mesh.decomp;
    writeln!(w, "decomp {} {} {}", d.jx, d.jy, d.cells_per_subdomain)?;
    w.flush()?;
    Ok(())
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    write_mesh(mesh, std::fs::File::create(path)?)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<(Mesh, InterfaceGraph)> {
    read_mesh(std::fs::File::open(path)?)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line: usize,
}

impl<R: Read> Lines<R> {
    fn next(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            let Some(l) = self.inner.next() else {
                return Err(self.err("unexpected end of file"));
            };
            let l = l?;
            let toks: Vec<String> = l.split_whitespace().map(str::to_string).collect();
            if !toks.is_empty() {
                return Ok(toks);
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid value `{s}`")))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let t = self.next()?;
        if t.len() != 2 || t[0] != name {
            return Err(self.err(format!("expected `{name} <count>`")));
        }
        self.parse(&t[1])
    }

    fn record(&mut self, n: usize) -> Result<Vec<String>> {
        let t = self.next()?;
        if t.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", t.len())));
        }
        Ok(t)
    }
}

/// Reads a mesh, recovering the decomposition geometry from the node bounding
/// box, and validates all mesh invariants.
pub fn read_mesh<R: Read>(r: R) -> Result<(Mesh, InterfaceGraph)> {
    let mut l = Lines {
        inner: BufReader::new(r).lines(),
        line: 0,
    };
    let header = l.next()?;
    if header != ["acmsmesh", "1"] {
        return Err(l.err("expected header `acmsmesh 1`"));
    }
    let nn = l.section("nodes")?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let t = l.record(2)?;
        let p: [f64; 2] = [l.parse(&t[0])?, l.parse(&t[1])?];
        if !p.iter().all(|v| v.is_finite()) {
            return Err(l.err("non-finite coordinate"));
        }
        nodes.push(p);
    }
    let nt = l.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let t = l.record(5)?;
        let tri = Triangle {
            nodes: [l.parse(&t[0])?, l.parse(&t[1])?, l.parse(&t[2])?],
            material: l.parse(&t[3])?,
            subdomain: l.parse(&t[4])?,
        };
        if tri.nodes.iter().any(|&v| v >= nn) {
            return Err(l.err("node index out of range"));
        }
        triangles.push(tri);
    }
    let nb = l.section("bsegments")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let t = l.record(3)?;
        let seg = BoundarySegment {
            nodes: [l.parse(&t[0])?, l.parse(&t[1])?],
            marker: l.parse(&t[2])?,
        };
        if seg.nodes.iter().any(|&v| v >= nn) {
            return Err(l.err("node index out of range"));
        }
        boundary.push(seg);
    }
    let t = l.record(4)?;
    if t[0] != "decomp" {
        return Err(l.err("expected `decomp jx jy cells`"));
    }
    let (jx, jy, cells): (usize, usize, usize) = (l.parse(&t[1])?, l.parse(&t[2])?, l.parse(&t[3])?);
    if nodes.is_empty() || jx == 0 || jy == 0 || cells == 0 {
        return Err(l.err("empty mesh or decomposition"));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &nodes {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let cs_x = (x1 - x0) / (jx * cells) as f64;
    let cs_y = (y1 - y0) / (jy * cells) as f64;
    if (cs_x - cs_y).abs() > 1e-12 * cs_x.max(cs_y) {
        return Err(l.err("bounding box does not match a grid of square cells"));
    }
    let decomp = DomainDecomposition::new(jx * cells, jy * cells, cells, [x0, y0], cs_x)?;
    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary,
        h: 0.0,
        decomp,
    };
    mesh.h = mesh.max_diameter();
    mesh.validate()?;
    let graph = InterfaceGraph::extract(&mesh)?;
    Ok((mesh, graph))
}
