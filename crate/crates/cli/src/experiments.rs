//! Experiment recipes behind the CLI commands.

use acms_core::acms_basis::{build_extension, EdgeModeCache};
use acms_core::acms_system::{
    assemble_acms, build_basis_matrices, edge_modes, local_blocks, max_modes, number_dofs, subdomain_loads, AcmsSession,
    AcmsSolution,
};
use acms_core::femcore::{assemble_fem, l2_norm_and_error, HpSpace, Reference};
use acms_core::geometry::{
    mesh_domain_with_layout, refine_uniform, DomainDecomposition, InterfaceGraph, Mesh, PoreSpec, UnitCellSpec,
};
use acms_core::postprocess::{export_field, fit_loglog_slope, line_energy, onset_index, ExportFormat, SweepRecord};
use acms_core::problem::HelmholtzProblem;
use acms_core::reference::{solve_fem_direct_capped, solve_fem_substructured, ReferenceSolution};
use acms_core::{Complex64, Error};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::config::{same_kappa, CapsConfig, Config, FieldFormat, GeometryConfig, Layout, ReferenceKind};
use crate::CliError;

/// Progress messages on stderr.
#[derive(Clone, Copy, Debug, Default)]
pub struct Log {
    pub verbose: bool,
}

impl Log {
    pub fn info(&self, msg: impl FnOnce() -> String) {
        if self.verbose {
            eprintln!("{}", msg());
        }
    }

    pub fn warn(&self, msg: &str) {
        eprintln!("warning: {msg}");
    }
}

/// Sweep rows plus the rows that failed and were left without results.
#[derive(Clone, Debug, Default)]
pub struct Study {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<String>,
}

/// Mesh of the configured geometry with `per × per` cells per subdomain.
pub fn build_mesh(g: &GeometryConfig, per: usize, h: f64, refinements: usize) -> Result<(Arc<Mesh>, Arc<InterfaceGraph>), CliError> {
    let origin = g
        .origin
        .unwrap_or([-(g.jx as f64) * g.cell_size / 2.0, -(g.jy as f64) * g.cell_size / 2.0]);
    let decomp = DomainDecomposition::new(g.jx, g.jy, per, origin, g.cell_size)?;
    let cell = UnitCellSpec {
        side_length: g.cell_size,
        pore: g.pore.as_ref().map(PoreSpec::from),
        ..UnitCellSpec::default()
    };
    let middle = [(g.jy - 1) / 2, g.jy / 2];
    let layout = g.layout;
    let (mut mesh, mut graph) =
        mesh_domain_with_layout(&decomp, &cell, h, |_, cy| layout == Layout::Full || !middle.contains(&cy))?;
    for _ in 0..refinements {
        (mesh, graph) = refine_uniform(&mesh)?;
    }
    Ok((Arc::new(mesh), Arc::new(graph)))
}

pub fn build_space(g: &GeometryConfig, per: usize, h: f64, refinements: usize, p: usize) -> Result<HpSpace, CliError> {
    let (m, gr) = build_mesh(g, per, h, refinements)?;
    Ok(HpSpace::new(m, gr, p)?)
}

/// FEM reference: banded direct solve below the cap, substructured above it.
pub fn fem_reference(space: &HpSpace, problem: &HelmholtzProblem, caps: &CapsConfig) -> Result<ReferenceSolution, CliError> {
    let n = space.ndofs();
    if n > caps.reference_nf {
        return Err(Error::CapExceeded {
            size: n,
            cap: caps.reference_nf,
            hint: "lower p_ref or coarsen the mesh",
        }
        .into());
    }
    if n <= caps.direct_nf / 4 {
        Ok(solve_fem_direct_capped(space, problem, caps.direct_nf)?)
    } else {
        Ok(solve_fem_substructured(space, problem)?)
    }
}

/// Ground truth against which relative errors are measured.
pub enum Truth {
    Exact { problem: HelmholtzProblem, tag: u32 },
    Fem { space: HpSpace, solution: ReferenceSolution },
    None,
}

impl Truth {
    pub fn rel_error(&self, space: &HpSpace, field: &[Complex64]) -> Result<Option<f64>, CliError> {
        let rel = match self {
            Truth::Exact { problem, tag } => {
                let f = |x: [f64; 2]| problem.exact_solution(x, *tag).unwrap_or_default();
                l2_norm_and_error(space, field, Reference::Function(&f))?.2
            }
            Truth::Fem { space: s, solution } => l2_norm_and_error(space, field, Reference::Field(s, &solution.coeffs))?.2,
            Truth::None => return Ok(None),
        };
        Ok(Some(rel))
    }
}

fn truth_for(cfg: &Config, problem: &HelmholtzProblem, log: Log) -> Result<Truth, CliError> {
    Ok(match cfg.reference {
        ReferenceKind::Exact => Truth::Exact {
            problem: problem.clone(),
            tag: cfg.problem()?.a_by_tag.keys().next().copied().unwrap_or(0),
        },
        ReferenceKind::Fem => {
            let g = cfg.geometry()?;
            let d = cfg.discretization()?;
            let p_ref = d.p_ref.unwrap_or_else(|| (d.p.iter().max().copied().unwrap_or(1) + 3).min(8));
            let per = g.cells_per_subdomain.iter().min().copied().unwrap_or(1);
            let space = build_space(g, per, d.h, d.refinements, p_ref)?;
            let t = Instant::now();
            let solution = fem_reference(&space, problem, &cfg.caps)?;
            log.info(|| {
                format!(
                    "  reference p={p_ref}: N_F={} residual {:.2e} in {:.1}s",
                    solution.n_f,
                    solution.residual,
                    t.elapsed().as_secs_f64()
                )
            });
            Truth::Fem { space, solution }
        }
        ReferenceKind::None => Truth::None,
    })
}

/// Errors that end a single row instead of the whole run.
fn row_error(e: &CliError) -> bool {
    match e {
        CliError::Core(c) => c.is_numerical() || matches!(c, Error::CapExceeded { .. }),
        _ => false,
    }
}

fn empty_row(kappa: f64) -> SweepRecord {
    SweepRecord {
        kappa: Some(kappa),
        ..SweepRecord::default()
    }
}

fn effective_ie(space: &HpSpace, ie: usize, log: Log) -> usize {
    let cap = max_modes(space);
    if ie > cap {
        log.warn(&format!("I_E = {ie} exceeds the {cap} available edge modes; using {cap}"));
    }
    ie.min(cap)
}

fn record(kappa: f64, h: f64, p: usize, space: &HpSpace, sol: &AcmsSolution, err: Option<f64>) -> SweepRecord {
    SweepRecord {
        kappa: Some(kappa),
        p: Some(p),
        h: Some(h),
        ie: Some(sol.ie),
        j: Some(space.subdomains().len()),
        n_a: Some(sol.n_a),
        n_f: Some(sol.n_f),
        err_rel: err,
        t_bas: Some(sol.timings.t_bas),
        t_ass: Some(sol.timings.t_ass),
        t_sol: Some(sol.timings.t_sol),
        t_tot: Some(sol.timings.total()),
        ..SweepRecord::default()
    }
}

/// `(p, I_E)` pairs: zipped when the lists have equal length, otherwise all combinations.
fn order_mode_pairs(p: &[usize], ie: &[usize]) -> Vec<(usize, usize)> {
    if p.len() == ie.len() {
        p.iter().copied().zip(ie.iter().copied()).collect()
    } else {
        p.iter().flat_map(|&p| ie.iter().map(move |&i| (p, i))).collect()
    }
}

/// One record per `(κ, decomposition, p, I_E)`.
pub fn run_convergence(cfg: &Config, log: Log) -> Result<Study, CliError> {
    let g = cfg.geometry()?;
    let d = cfg.discretization()?;
    let h = d.h / (1u32 << d.refinements) as f64;
    let mut study = Study::default();
    for kappa in cfg.kappas()? {
        let problem = cfg.problem()?.at_kappa(kappa)?;
        log.info(|| format!("kappa = {kappa}"));
        let truth = match truth_for(cfg, &problem, log) {
            Ok(t) => t,
            Err(e) if row_error(&e) => {
                log.warn(&format!("kappa {kappa}: reference failed: {e}"));
                study.failures.push(format!("kappa {kappa}: {e}"));
                Truth::None
            }
            Err(e) => return Err(e),
        };
        for &per in &g.cells_per_subdomain {
            let (mesh, graph) = build_mesh(g, per, d.h, d.refinements)?;
            for (p, ie) in order_mode_pairs(&d.p, &d.ies()) {
                let ie = if d.scale_ie_with_subdomain { ie * per } else { ie };
                let space = HpSpace::new(mesh.clone(), graph.clone(), p)?;
                let row = (|| -> Result<SweepRecord, CliError> {
                    if space.ndofs() > cfg.caps.acms_nf {
                        return Err(Error::CapExceeded {
                            size: space.ndofs(),
                            cap: cfg.caps.acms_nf,
                            hint: "coarsen the mesh or lower p",
                        }
                        .into());
                    }
                    let assembly = assemble_fem(&space, &problem)?;
                    let ie = effective_ie(&space, ie, log);
                    let sol = AcmsSession::new(&space, &assembly, &problem, ie, &EdgeModeCache::new())?.solve(ie)?;
                    let err = truth.rel_error(&space, &sol.field)?;
                    Ok(record(kappa, h, p, &space, &sol, err))
                })();
                match row {
                    Ok(r) => {
                        log.info(|| format!("  per={per} p={p} I_E={:?}: err {:?}", r.ie, r.err_rel));
                        study.records.push(r);
                    }
                    Err(e) if row_error(&e) => {
                        log.warn(&format!("kappa {kappa}, p {p}, I_E {ie}: {e}"));
                        study.failures.push(format!("kappa {kappa}, p {p}, I_E {ie}: {e}"));
                        study.records.push(SweepRecord {
                            p: Some(p),
                            h: Some(h),
                            ie: Some(ie),
                            j: Some(space.subdomains().len()),
                            n_f: Some(space.ndofs()),
                            ..empty_row(kappa)
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(study)
}

/// Monotone-decay onset and post-onset slope of one mode sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnsetRow {
    pub kappa: f64,
    /// First sampled `I_E` from which the error decreases at every later sample.
    pub onset: Option<usize>,
    /// Log-log slope of the error against `I_E` from the onset on.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ModeSweep {
    pub study: Study,
    pub onsets: Vec<OnsetRow>,
}

/// Onset and slope of the errors sampled at increasing `ies`.
pub fn onset_and_slope(kappa: f64, ies: &[usize], errors: &[f64]) -> OnsetRow {
    let start = onset_index(errors);
    let slope = start.and_then(|s| {
        let xs: Vec<f64> = ies[s..].iter().map(|&i| i as f64).collect();
        fit_loglog_slope(&xs, &errors[s..]).ok()
    });
    OnsetRow {
        kappa,
        onset: start.map(|s| ies[s]),
        slope,
    }
}

/// Error against `I_E` per κ, from one basis built for the largest `I_E`.
pub fn run_mode_sweep(cfg: &Config, log: Log) -> Result<ModeSweep, CliError> {
    let g = cfg.geometry()?;
    let d = cfg.discretization()?;
    let p = d.p[0];
    let h = d.h / (1u32 << d.refinements) as f64;
    let mut out = ModeSweep::default();
    for &per in &g.cells_per_subdomain {
        let space = build_space(g, per, d.h, d.refinements, p)?;
        let mut ies: Vec<usize> = d
            .ies()
            .iter()
            .map(|&i| effective_ie(&space, if d.scale_ie_with_subdomain { i * per } else { i }, log))
            .collect();
        ies.sort_unstable();
        ies.dedup();
        let ie_max = *ies.last().expect("validated nonempty");
        for kappa in cfg.kappas()? {
            log.info(|| format!("kappa = {kappa}, {per}x{per} cells per subdomain"));
            let problem = cfg.problem()?.at_kappa(kappa)?;
            let run = (|| -> Result<(Vec<SweepRecord>, Vec<f64>), CliError> {
                let truth = truth_for(cfg, &problem, log)?;
                let assembly = assemble_fem(&space, &problem)?;
                let session = AcmsSession::new(&space, &assembly, &problem, ie_max, &EdgeModeCache::new())?;
                let mut recs = Vec::with_capacity(ies.len());
                let mut errs = Vec::with_capacity(ies.len());
                for &ie in &ies {
                    let sol = session.solve(ie)?;
                    let err = truth.rel_error(&space, &sol.field)?;
                    log.info(|| format!("  I_E={ie}: err {err:?}"));
                    errs.extend(err);
                    recs.push(record(kappa, h, p, &space, &sol, err));
                }
                Ok((recs, errs))
            })();
            match run {
                Ok((recs, errs)) => {
                    out.onsets.push(if errs.len() == ies.len() {
                        onset_and_slope(kappa, &ies, &errs)
                    } else {
                        OnsetRow {
                            kappa,
                            onset: None,
                            slope: None,
                        }
                    });
                    out.study.records.extend(recs);
                }
                Err(e) if row_error(&e) => {
                    log.warn(&format!("kappa {kappa}: {e}"));
                    out.study.failures.push(format!("kappa {kappa}: {e}"));
                    out.study.records.push(empty_row(kappa));
                    out.onsets.push(OnsetRow {
                        kappa,
                        onset: None,
                        slope: None,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Fitted log-log slope of one timing column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub study: String,
    pub quantity: String,
    pub slope: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Scaling {
    pub vs_ie: Vec<SweepRecord>,
    pub vs_j: Vec<SweepRecord>,
    pub slopes: Vec<SlopeRow>,
    /// Seconds spent factoring the interior problems of the `I_E` study, which
    /// do not depend on `I_E` and are excluded from `t_bas`.
    pub t_factor: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn square_geometry(n: usize) -> GeometryConfig {
    GeometryConfig {
        jx: n,
        jy: n,
        cells_per_subdomain: vec![1],
        cell_size: 1.0,
        origin: None,
        pore: None,
        layout: Layout::Full,
    }
}

/// Stage timings against `I_E` (fixed `J`) and against `J` (fixed `I_E`).
pub fn run_scaling(cfg: &Config, log: Log) -> Result<Scaling, CliError> {
    let sc = cfg.scaling.as_ref().ok_or_else(|| CliError::Config("scaling block missing".into()))?;
    let kappa = cfg.kappas()?[0];
    let problem = cfg.problem()?.at_kappa(kappa)?;
    let reps = sc.repetitions;
    let mut out = Scaling::default();

    let s = &sc.vs_ie;
    let space = build_space(&square_geometry(s.cells), 1, s.h, 0, s.p)?;
    let assembly = assemble_fem(&space, &problem)?;
    let t = Instant::now();
    let exts = (0..space.subdomains().len())
        .into_par_iter()
        .map(|j| build_extension(&space, &assembly, j))
        .collect::<Result<Vec<_>, _>>()?;
    out.t_factor = t.elapsed().as_secs_f64();
    let loads = subdomain_loads(&space, &problem)?;
    log.info(|| format!("I_E study: N_F = {}, factorization {:.2}s", space.ndofs(), out.t_factor));
    for &ie in &s.ie {
        let ie = effective_ie(&space, ie, log);
        let (mut tb, mut ta, mut ts) = (vec![], vec![], vec![]);
        let mut n_a = 0;
        for _ in 0..reps {
            let t0 = Instant::now();
            let modes = edge_modes(&space, ie, &EdgeModeCache::new())?;
            let basis = build_basis_matrices(&space, &exts, &modes, ie)?;
            let t1 = Instant::now();
            let blocks = local_blocks(&space, &assembly, &basis, &loads)?;
            let dofmap = number_dofs(space.graph(), ie);
            let system = assemble_acms(&dofmap, &basis, &blocks)?;
            let t2 = Instant::now();
            system.solve()?;
            let t3 = Instant::now();
            n_a = dofmap.ndofs;
            tb.push((t1 - t0).as_secs_f64());
            ta.push((t2 - t1).as_secs_f64());
            ts.push((t3 - t2).as_secs_f64());
        }
        let (tb, ta, ts) = (median(tb), median(ta), median(ts));
        log.info(|| format!("  I_E={ie}: t_bas {tb:.3e} t_ass {ta:.3e} t_sol {ts:.3e}"));
        out.vs_ie.push(SweepRecord {
            kappa: Some(kappa),
            p: Some(s.p),
            h: Some(s.h),
            ie: Some(ie),
            j: Some(space.subdomains().len()),
            n_a: Some(n_a),
            n_f: Some(space.ndofs()),
            t_bas: Some(tb),
            t_ass: Some(ta),
            t_sol: Some(ts),
            t_tot: Some(tb + ta + ts),
            ..SweepRecord::default()
        });
    }

    let s = &sc.vs_j;
    for &n in &s.n {
        let space = build_space(&square_geometry(n), 1, s.h, 0, s.p)?;
        let assembly = assemble_fem(&space, &problem)?;
        let ie = effective_ie(&space, s.ie, log);
        let session = AcmsSession::new(&space, &assembly, &problem, ie, &EdgeModeCache::new())?;
        let dofmap = number_dofs(space.graph(), ie);
        let system = assemble_acms(&dofmap, &session.basis, &session.blocks)?;
        let mut ts = vec![];
        for _ in 0..reps {
            let t = Instant::now();
            system.solve()?;
            ts.push(t.elapsed().as_secs_f64());
        }
        let ts = median(ts);
        log.info(|| format!("  J={}: N_A {} bandwidth {} t_sol {ts:.3e}", n * n, dofmap.ndofs, system.bandwidth()));
        out.vs_j.push(SweepRecord {
            kappa: Some(kappa),
            p: Some(s.p),
            h: Some(s.h),
            ie: Some(ie),
            j: Some(n * n),
            n_a: Some(dofmap.ndofs),
            n_f: Some(space.ndofs()),
            t_bas: Some(session.timings.t_bas),
            t_ass: Some(session.timings.t_ass),
            t_sol: Some(ts),
            t_tot: Some(session.timings.t_bas + session.timings.t_ass + ts),
            ..SweepRecord::default()
        });
    }

    let column = |recs: &[SweepRecord], x: fn(&SweepRecord) -> f64, y: fn(&SweepRecord) -> f64| {
        let xs: Vec<f64> = recs.iter().map(x).collect();
        let ys: Vec<f64> = recs.iter().map(y).collect();
        fit_loglog_slope(&xs, &ys)
    };
    let ie_of = |r: &SweepRecord| r.ie.unwrap_or(0) as f64;
    let j_of = |r: &SweepRecord| r.j.unwrap_or(0) as f64;
    for (quantity, y) in [
        ("t_bas", (|r: &SweepRecord| r.t_bas.unwrap_or(0.0)) as fn(&SweepRecord) -> f64),
        ("t_ass", |r: &SweepRecord| r.t_ass.unwrap_or(0.0)),
        ("t_sol", |r: &SweepRecord| r.t_sol.unwrap_or(0.0)),
    ] {
        out.slopes.push(SlopeRow {
            study: "I_E".into(),
            quantity: quantity.into(),
            slope: column(&out.vs_ie, ie_of, y)?,
        });
        out.slopes.push(SlopeRow {
            study: "J".into(),
            quantity: quantity.into(),
            slope: column(&out.vs_j, j_of, y)?,
        });
    }
    Ok(out)
}

/// `E_in`, `E_out` per κ on the left and right sides, with optional field exports.
pub fn run_crystal(cfg: &Config, out_dir: &Path, log: Log) -> Result<Study, CliError> {
    let g = cfg.geometry()?;
    let d = cfg.discretization()?;
    let (p, per) = (d.p[0], g.cells_per_subdomain[0]);
    let ie = d.ies()[0];
    let ie = if d.scale_ie_with_subdomain { ie * per } else { ie };
    let h = d.h / (1u32 << d.refinements) as f64;
    let space = build_space(g, per, d.h, d.refinements, p)?;
    let ie = effective_ie(&space, ie, log);
    let bb = space.mesh().nodes.iter().fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |b, x| {
        [b[0].min(x[0]), b[1].min(x[1]), b[2].max(x[0]), b[3].max(x[1])]
    });
    let cache = EdgeModeCache::new();
    let mut study = Study::default();
    for kappa in cfg.kappas()? {
        let problem = cfg.problem()?.at_kappa(kappa)?;
        let run = (|| -> Result<(SweepRecord, Vec<Complex64>), CliError> {
            let assembly = assemble_fem(&space, &problem)?;
            let sol = AcmsSession::new(&space, &assembly, &problem, ie, &cache)?.solve(ie)?;
            let e_in = line_energy(&space, &sol.field, [bb[0], bb[1]], [bb[0], bb[3]])?;
            let e_out = line_energy(&space, &sol.field, [bb[2], bb[1]], [bb[2], bb[3]])?;
            let mut r = record(kappa, h, p, &space, &sol, None);
            r.e_in = Some(e_in);
            r.e_out = Some(e_out);
            Ok((r, sol.field))
        })();
        match run {
            Ok((r, field)) => {
                log.info(|| format!("kappa {kappa}: E_in {:.6e} E_out {:.6e}", r.e_in.unwrap_or(0.0), r.e_out.unwrap_or(0.0)));
                if let Some(f) = cfg.output.fields.as_ref().filter(|f| f.kappa.iter().any(|&k| same_kappa(k, kappa))) {
                    let (name, format) = match f.format {
                        FieldFormat::CsvGrid => (format!("field_kappa_{kappa}.csv"), ExportFormat::CsvGrid { n: f.n }),
                        FieldFormat::VtkLegacy => (format!("field_kappa_{kappa}.vtk"), ExportFormat::VtkLegacy),
                    };
                    export_field(&space, &field, out_dir.join(name), format)?;
                }
                study.records.push(r);
            }
            Err(e) if row_error(&e) => {
                log.warn(&format!("kappa {kappa}: {e}"));
                study.failures.push(format!("kappa {kappa}: {e}"));
                study.records.push(empty_row(kappa));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(study)
}
