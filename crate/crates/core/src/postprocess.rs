//! Error measures, line energies, field exports, sweep records and slope fits.

use crate::femcore::{eval_field, facet_dofs, interval_basis, interval_rule, HpSpace};
use crate::{Complex64, Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub use crate::femcore::{l2_norm, l2_norm_and_error, Reference};

/// `∫ |u|²` along the straight boundary segment from `start` to `end`.
///
/// The segment must be covered exactly by boundary facets of the mesh.
pub fn line_energy(space: &HpSpace, coeffs: &[Complex64], start: [f64; 2], end: [f64; 2]) -> Result<f64> {
    if coeffs.len() != space.ndofs() {
        return Err(Error::DimensionMismatch {
            expected: space.ndofs(),
            got: coeffs.len(),
        });
    }
    let dir = [end[0] - start[0], end[1] - start[1]];
    let len = dir[0].hypot(dir[1]);
    if !(len > 0.0) {
        return Err(Error::Config("line segment has zero length".into()));
    }
    let tol = 1e-10 * len.max(1.0);
    let param = |x: [f64; 2]| -> Option<f64> {
        let rel = [x[0] - start[0], x[1] - start[1]];
        let cross = (rel[0] * dir[1] - rel[1] * dir[0]) / len;
        let t = (rel[0] * dir[0] + rel[1] * dir[1]) / len;
        (cross.abs() <= tol && t >= -tol && t <= len + tol).then_some(t)
    };
    let mesh = space.mesh();
    let p = space.order();
    let rule = interval_rule(2 * p + 2)?;
    let (mut energy, mut covered) = (0.0, 0.0);
    for f in space.boundary_facets() {
        let (lo, hi) = (f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1]));
        let (pa, pb) = (mesh.nodes[lo], mesh.nodes[hi]);
        if param(pa).is_none() || param(pb).is_none() {
            continue;
        }
        covered += f.length;
        let dofs = facet_dofs(space, f.nodes, f.mesh_edge);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let (psi, _) = interval_basis(p, s);
            let u: Complex64 = dofs.iter().zip(&psi).map(|(&d, &v)| coeffs[d] * v).sum();
            energy += w * f.length * u.norm_sqr();
        }
    }
    if (covered - len).abs() > tol {
        return Err(Error::Config(format!(
            "segment {start:?} to {end:?} is not covered by boundary facets ({covered} of {len})"
        )));
    }
    Ok(energy)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Config(format!("slope fit needs at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Config("slope fit needs positive finite data".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("slope fit needs strictly increasing abscissae".into()));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Index into `errors` from which the sequence decreases strictly to the end.
///
/// `None` for fewer than two samples or when the last step does not decrease.
pub fn onset_index(errors: &[f64]) -> Option<usize> {
    let n = errors.len();
    if n < 2 || errors[n - 2] <= errors[n - 1] {
        return None;
    }
    let mut k = n - 2;
    while k > 0 && errors[k - 1] > errors[k] {
        k -= 1;
    }
    Some(k)
}

/// Output formats of [`export_field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    /// `x,y,re,im,abs` on an `n × n` raster of the bounding box.
    CsvGrid { n: usize },
    /// Legacy ASCII VTK unstructured grid with point data `u_re`, `u_im`.
    VtkLegacy,
}

pub fn export_field(space: &HpSpace, coeffs: &[Complex64], path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    if coeffs.len() != space.ndofs() {
        return Err(Error::DimensionMismatch {
            expected: space.ndofs(),
            got: coeffs.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::CsvGrid { n } => {
            let points = raster(space, n)?;
            let vals = eval_field(space, coeffs, &points)?;
            writeln!(w, "x,y,re,im,abs")?;
            for (x, u) in points.iter().zip(vals) {
                writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", x[0], x[1], u.re, u.im, u.norm())?;
            }
        }
        ExportFormat::VtkLegacy => {
            let mesh = space.mesh();
            writeln!(w, "# vtk DataFile Version 3.0\nhelmholtz field\nASCII\nDATASET UNSTRUCTURED_GRID")?;
            writeln!(w, "POINTS {} double", mesh.num_nodes())?;
            for x in &mesh.nodes {
                writeln!(w, "{:.16e} {:.16e} 0", x[0], x[1])?;
            }
            let nt = mesh.num_triangles();
            writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
            for t in &mesh.triangles {
                writeln!(w, "3 {} {} {}", t.nodes[0], t.nodes[1], t.nodes[2])?;
            }
            writeln!(w, "CELL_TYPES {nt}")?;
            for _ in 0..nt {
                writeln!(w, "5")?;
            }
            // Vertex dofs are numbered like the mesh nodes.
            writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
            for (name, part) in [("u_re", 0), ("u_im", 1)] {
                writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
                for u in &coeffs[..mesh.num_nodes()] {
                    writeln!(w, "{:.17e}", if part == 0 { u.re } else { u.im })?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `n × n` raster over the bounding box of the decomposition, row by row from the bottom.
pub fn raster(space: &HpSpace, n: usize) -> Result<Vec<[f64; 2]>> {
    if n < 2 {
        return Err(Error::Config(format!("raster size must be at least 2, got {n}")));
    }
    let bb = space.mesh().decomp.bounding_box();
    let step = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    Ok((0..n)
        .flat_map(|iy| (0..n).map(move |ix| [step(bb.x0, bb.x1, ix), step(bb.y0, bb.y1, iy)]))
        .collect())
}

/// Contents of a legacy VTK file written by [`export_field`].
#[derive(Clone, Debug, PartialEq)]
pub struct VtkField {
    pub points: Vec<[f64; 3]>,
    pub u_re: Vec<f64>,
    pub u_im: Vec<f64>,
}

/// Minimal reader for the VTK files of [`export_field`].
pub fn read_vtk(path: impl AsRef<Path>) -> Result<VtkField> {
    let text: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<_>>()?;
    let bad = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let mut out = VtkField {
        points: Vec::new(),
        u_re: Vec::new(),
        u_im: Vec::new(),
    };
    let mut i = 0;
    let num = |l: usize, s: &str| s.parse::<f64>().map_err(|_| bad(l, "invalid number"));
    while i < text.len() {
        let words: Vec<&str> = text[i].split_whitespace().collect();
        match words.as_slice() {
            ["POINTS", n, _] => {
                let n: usize = n.parse().map_err(|_| bad(i, "invalid point count"))?;
                for k in 0..n {
                    let l = i + 1 + k;
                    let v: Vec<&str> = text.get(l).ok_or_else(|| bad(l, "missing point"))?.split_whitespace().collect();
                    if v.len() != 3 {
                        return Err(bad(l, "point needs 3 coordinates"));
                    }
                    out.points.push([num(l, v[0])?, num(l, v[1])?, num(l, v[2])?]);
                }
                i += n;
            }
            ["SCALARS", name, ..] => {
                let n = out.points.len();
                let vals = (0..n)
                    .map(|k| {
                        let l = i + 2 + k;
                        num(l, text.get(l).ok_or_else(|| bad(l, "missing value"))?.trim())
                    })
                    .collect::<Result<Vec<f64>>>()?;
                match *name {
                    "u_re" => out.u_re = vals,
                    "u_im" => out.u_im = vals,
                    _ => return Err(bad(i, "unknown scalar array")),
                }
                i += n + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if out.u_re.len() != out.points.len() || out.u_im.len() != out.points.len() {
        return Err(bad(text.len(), "scalar arrays missing"));
    }
    Ok(out)
}

/// One row of a sweep CSV file; `None` fields are written empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRecord {
    pub kappa: Option<f64>,
    pub p: Option<usize>,
    pub h: Option<f64>,
    pub ie: Option<usize>,
    pub j: Option<usize>,
    pub n_a: Option<usize>,
    pub n_f: Option<usize>,
    pub err_rel: Option<f64>,
    pub e_in: Option<f64>,
    pub e_out: Option<f64>,
    pub t_bas: Option<f64>,
    pub t_ass: Option<f64>,
    pub t_sol: Option<f64>,
    pub t_tot: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 14] = [
    "kappa", "p", "h", "IE", "J", "NA", "NF", "err_rel", "E_in", "E_out", "t_bas", "t_ass", "t_sol", "t_tot",
];

fn float_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int_field(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepRecord {
    pub fn fields(&self) -> [String; 14] {
        [
            float_field(self.kappa),
            int_field(self.p),
            float_field(self.h),
            int_field(self.ie),
            int_field(self.j),
            int_field(self.n_a),
            int_field(self.n_f),
            float_field(self.err_rel),
            float_field(self.e_in),
            float_field(self.e_out),
            float_field(self.t_bas),
            float_field(self.t_ass),
            float_field(self.t_sol),
            float_field(self.t_tot),
        ]
    }

    pub fn parse(fields: &[&str]) -> Result<Self> {
        if fields.len() != 14 {
            return Err(Error::DimensionMismatch {
                expected: 14,
                got: fields.len(),
            });
        }
        let f = |i: usize| -> Result<Option<f64>> {
            let s = fields[i].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Config(format!("invalid number {s:?} in column {}", SWEEP_HEADER[i])))
        };
        let u = |i: usize| -> Result<Option<usize>> {
            let s = fields[i].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Config(format!("invalid integer {s:?} in column {}", SWEEP_HEADER[i])))
        };
        Ok(Self {
            kappa: f(0)?,
            p: u(1)?,
            h: f(2)?,
            ie: u(3)?,
            j: u(4)?,
            n_a: u(5)?,
            n_f: u(6)?,
            err_rel: f(7)?,
            e_in: f(8)?,
            e_out: f(9)?,
            t_bas: f(10)?,
            t_ass: f(11)?,
            t_sol: f(12)?,
            t_tot: f(13)?,
        })
    }
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in records {
        wr.write_record(r.fields()).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(r: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_error)?;
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::Config(format!("unexpected sweep header {header:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            SweepRecord::parse(&rec.iter().collect::<Vec<_>>())
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}
