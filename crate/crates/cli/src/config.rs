//! JSON experiment configuration with a strict schema.

use acms_core::geometry::{marker, PoreSpec};
use acms_core::problem::{BoundarySource, HelmholtzProblem};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Convergence,
    ModeSweep,
    Scaling,
    Crystal,
    OracleCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub reference: ReferenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    /// Seeds of the randomized checks.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub caps: CapsConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Same cell everywhere.
    #[default]
    Full,
    /// Pores everywhere except the two middle rows of cells.
    Waveguide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoreConfig {
    pub radius: f64,
    #[serde(default = "default_segments")]
    pub segments: usize,
}

fn default_segments() -> usize {
    16
}

impl From<&PoreConfig> for PoreSpec {
    fn from(p: &PoreConfig) -> Self {
        PoreSpec {
            radius: p.radius,
            segments: p.segments,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub jx: usize,
    pub jy: usize,
    /// Subdomain side in cells, one entry per decomposition to run.
    pub cells_per_subdomain: Vec<usize>,
    #[serde(default = "one")]
    pub cell_size: f64,
    /// Lower left corner; defaults to centring the domain at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pore: Option<PoreConfig>,
    #[serde(default)]
    pub layout: Layout,
}

impl DiscretizationConfig {
    /// `ie` followed by the values of `ie_range`.
    pub fn ies(&self) -> Vec<usize> {
        let mut v = self.ie.clone();
        if let Some([a, b]) = self.ie_range {
            v.extend(a..=b);
        }
        v
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub h: f64,
    #[serde(default)]
    pub refinements: usize,
    pub p: Vec<usize>,
    /// Edge modes; zipped with `p` when both have the same length, otherwise
    /// every `I_E` is combined with every `p`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ie: Vec<usize>,
    /// Inclusive range of consecutive `I_E`, appended to `ie`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ie_range: Option<[usize; 2]>,
    /// Multiply `I_E` by the subdomain side in cells.
    #[serde(default)]
    pub scale_ie_with_subdomain: bool,
    /// Order of the FEM reference; defaults to `min(max p + 3, 8)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ref: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    PlaneWaveTrace { direction: [f64; 2] },
    /// Wavenumber taken from the sweep.
    IncomingPlaneWave,
    /// Wavenumber taken from the sweep; applied on one boundary side.
    Gaussian {
        #[serde(default = "left")]
        side: Side,
    },
    Constant { re: f64, im: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

fn left() -> Side {
    Side::Left
}

impl Side {
    pub fn marker(self) -> u32 {
        match self {
            Side::Bottom => marker::BOTTOM,
            Side::Right => marker::RIGHT,
            Side::Top => marker::TOP,
            Side::Left => marker::LEFT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a_by_tag: BTreeMap<u32, f64>,
    pub c_by_tag: BTreeMap<u32, f64>,
    /// Angular frequency when no sweep is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub beta_by_marker: BTreeMap<u32, f64>,
    pub source: SourceConfig,
}

impl ProblemConfig {
    /// `κ = ω / c` on material tag 0.
    fn c0(&self) -> f64 {
        self.c_by_tag.values().next().copied().unwrap_or(1.0)
    }

    /// Problem at wavenumber `kappa` (on the first material tag).
    pub fn at_kappa(&self, kappa: f64) -> Result<HelmholtzProblem, CliError> {
        let source = match self.source {
            SourceConfig::PlaneWaveTrace { direction } => BoundarySource::PlaneWaveTrace { direction },
            SourceConfig::IncomingPlaneWave => BoundarySource::IncomingPlaneWave { kappa },
            SourceConfig::Gaussian { side } => BoundarySource::Gaussian {
                kappa,
                marker: side.marker(),
            },
            SourceConfig::Constant { re, im } => BoundarySource::Constant { re, im },
            SourceConfig::Zero => BoundarySource::Zero,
        };
        Ok(HelmholtzProblem::new(
            self.a_by_tag.clone(),
            self.c_by_tag.clone(),
            kappa * self.c0(),
            self.beta_by_marker.clone(),
            source,
        )?)
    }

    pub fn has_exact_solution(&self) -> bool {
        matches!(self.source, SourceConfig::PlaneWaveTrace { .. } | SourceConfig::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
    /// Inclusive range sampled at `steps` equidistant points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Closed-form plane wave.
    Exact,
    /// FEM solution of order `p_ref` on the same mesh.
    Fem,
    #[default]
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub vs_ie: ScalingIe,
    pub vs_j: ScalingJ,
    #[serde(default = "three")]
    pub repetitions: usize,
}

fn three() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingIe {
    /// Subdomain grid side (`J = cells²`, unit cells).
    pub cells: usize,
    pub h: f64,
    pub p: usize,
    pub ie: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingJ {
    /// Subdomain grid sides; `J = n²`.
    pub n: Vec<usize>,
    pub h: f64,
    pub p: usize,
    pub ie: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Flip one entry of the production `S_A` before comparing.
    #[serde(default)]
    pub inject_fault: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    CsvGrid,
    VtkLegacy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldExport {
    pub kappa: Vec<f64>,
    pub format: FieldFormat,
    #[serde(default = "default_raster")]
    pub n: usize,
}

fn default_raster() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldExport>,
}

fn default_csv() -> String {
    "results.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv: default_csv(),
            fields: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    /// Largest `N_F` solved by the banded direct solver; larger references are substructured.
    #[serde(default = "default_direct")]
    pub direct_nf: usize,
    /// Largest `N_F` for any FEM reference.
    #[serde(default = "default_reference")]
    pub reference_nf: usize,
    #[serde(default = "default_acms_nf")]
    pub acms_nf: usize,
}

fn default_direct() -> usize {
    acms_core::reference::DIRECT_CAP
}

fn default_reference() -> usize {
    2_000_000
}

fn default_acms_nf() -> usize {
    4_000_000
}

impl Default for CapsConfig {
    fn default() -> Self {
        Self {
            direct_nf: default_direct(),
            reference_nf: default_reference(),
            acms_nf: default_acms_nf(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require<'a, T>(block: &'a Option<T>, name: &str, cmd: Command) -> Result<&'a T, CliError> {
    block.as_ref().ok_or_else(|| invalid(format!("command {cmd:?} needs a `{name}` block")))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| invalid(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn geometry(&self) -> Result<&GeometryConfig, CliError> {
        require(&self.geometry, "geometry", self.command)
    }

    pub fn discretization(&self) -> Result<&DiscretizationConfig, CliError> {
        require(&self.discretization, "discretization", self.command)
    }

    pub fn problem(&self) -> Result<&ProblemConfig, CliError> {
        require(&self.problem, "problem", self.command)
    }

    /// Wavenumbers of the sweep, or the single `ω / c` of the problem block.
    pub fn kappas(&self) -> Result<Vec<f64>, CliError> {
        if let Some(s) = &self.sweep {
            return match (&s.kappa, s.kappa_range, s.steps) {
                (Some(k), None, None) => Ok(k.clone()),
                (None, Some([a, b]), Some(n)) if n >= 2 => {
                    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
                }
                (None, Some(_), Some(1)) => Ok(vec![s.kappa_range.expect("checked")[0]]),
                _ => Err(invalid("sweep needs either `kappa` or `kappa_range` with `steps`")),
            };
        }
        let p = self.problem()?;
        let omega = p.omega.ok_or_else(|| invalid("problem needs `omega` when no sweep is given"))?;
        Ok(vec![omega / p.c0()])
    }

    /// Checks the whole configuration before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let cmd = self.command;
        if self.seeds.is_empty() {
            return Err(invalid("seeds must be nonempty"));
        }
        if self.output.csv.trim().is_empty() {
            return Err(invalid("output.csv must not be empty"));
        }
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be positive, got {v}")))
            }
        };
        if let Some(g) = &self.geometry {
            if g.jx == 0 || g.jy == 0 {
                return Err(invalid("geometry needs at least one cell in each direction"));
            }
            if g.cells_per_subdomain.is_empty() || g.cells_per_subdomain.contains(&0) {
                return Err(invalid("geometry.cells_per_subdomain must be a nonempty list of positive integers"));
            }
            for &c in &g.cells_per_subdomain {
                if g.jx % c != 0 || g.jy % c != 0 {
                    return Err(invalid(format!("{c} cells per subdomain do not tile {}x{} cells", g.jx, g.jy)));
                }
            }
            positive(g.cell_size, "geometry.cell_size")?;
            if let Some(p) = &g.pore {
                positive(p.radius, "pore radius")?;
            }
            if g.layout == Layout::Waveguide && g.pore.is_none() {
                return Err(invalid("waveguide layout needs a pore"));
            }
        }
        if let Some(d) = &self.discretization {
            positive(d.h, "discretization.h")?;
            if d.p.is_empty() || d.ies().is_empty() {
                return Err(invalid("discretization.p and discretization.ie must be nonempty"));
            }
            if d.ies().contains(&0) {
                return Err(invalid("edge mode counts must be positive"));
            }
            if d.p.iter().chain(d.p_ref.iter()).any(|&p| p == 0 || p > acms_core::femcore::MAX_ORDER) {
                return Err(invalid(format!("orders must lie in 1..={}", acms_core::femcore::MAX_ORDER)));
            }
        }
        if let Some(s) = &self.sweep {
            if s.kappa.as_ref().is_some_and(|k| k.is_empty()) {
                return Err(invalid("sweep.kappa must be nonempty"));
            }
        }
        if let Some(p) = &self.problem {
            let _ = self.kappas()?.iter().map(|&k| positive(k, "kappa")).collect::<Result<Vec<_>, _>>()?;
            p.at_kappa(self.kappas()?[0])?;
            if self.reference == ReferenceKind::Exact && !p.has_exact_solution() {
                return Err(invalid("exact reference needs a plane_wave_trace or zero source"));
            }
            let uniform = |m: &BTreeMap<u32, f64>| m.values().all(|v| Some(v) == m.values().next());
            if self.reference == ReferenceKind::Exact && !(uniform(&p.a_by_tag) && uniform(&p.c_by_tag)) {
                return Err(invalid("exact reference needs uniform a and c"));
            }
        }
        match cmd {
            Command::Convergence | Command::ModeSweep | Command::Crystal => {
                self.geometry()?;
                self.discretization()?;
                self.problem()?;
            }
            Command::Scaling => {
                let s = require(&self.scaling, "scaling", cmd)?;
                self.problem()?;
                if s.vs_ie.ie.len() < 3 || s.vs_j.n.len() < 3 {
                    return Err(invalid("scaling needs at least 3 samples per study"));
                }
                if s.repetitions == 0 {
                    return Err(invalid("scaling.repetitions must be positive"));
                }
                positive(s.vs_ie.h, "scaling.vs_ie.h")?;
                positive(s.vs_j.h, "scaling.vs_j.h")?;
            }
            Command::OracleCheck => {}
        }
        if cmd == Command::ModeSweep && self.discretization()?.p.len() != 1 {
            return Err(invalid("mode-sweep takes a single order p"));
        }
        if cmd == Command::Crystal {
            let p = self.problem()?;
            if !matches!(p.source, SourceConfig::Gaussian { .. } | SourceConfig::IncomingPlaneWave | SourceConfig::Zero) {
                return Err(invalid("crystal sweeps use the gaussian, incoming_plane_wave or zero source"));
            }
        }
        if let Some(f) = &self.output.fields {
            if f.kappa.is_empty() || f.n < 2 {
                return Err(invalid("output.fields needs kappa values and a raster of at least 2"));
            }
            let kappas = self.kappas()?;
            if let Some(k) = f.kappa.iter().find(|&&k| !kappas.iter().any(|&s| same_kappa(s, k))) {
                return Err(invalid(format!("field export at kappa {k} is not part of the sweep")));
            }
        }
        Ok(())
    }
}

/// Sweep values and export flags match up to rounding of the range sampling.
pub fn same_kappa(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
