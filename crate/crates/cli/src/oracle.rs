//! Oracle and property checks run by `oracle-check`.

use acms_core::acms_basis::{build_extension, compute_edge_modes, edge_trace_matrices, EdgeModeCache};
use acms_core::acms_system::{
    assemble_acms, build_basis, local_blocks, max_modes, number_dofs, reconstruct, solve_acms_problem, subdomain_loads,
};
use acms_core::femcore::{assemble_fem, interpolate, l2_norm_and_error, DofEntity, HpSpace, Reference};
use acms_core::geometry::{mesh_domain, DomainDecomposition, UnitCellSpec};
use acms_core::linalg::{dense_solve, BandedMatrix, DenseMatrix};
use acms_core::problem::{BoundarySource, HelmholtzProblem};
use acms_core::reference::{global_matrix, oracle_acms_dense, solve_fem_direct};
use acms_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use crate::CliError;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// `[-1, 1]²` with four unit subdomains; `pore` adds the crystal cell.
fn square2(h: f64, p: usize, pore: bool) -> Result<HpSpace, CliError> {
    let d = DomainDecomposition::new(2, 2, 1, [-1.0, -1.0], 1.0)?;
    let cell = if pore { UnitCellSpec::with_pore(0.25, 16) } else { UnitCellSpec::default() };
    let (m, g) = mesh_domain(&d, &cell, h)?;
    Ok(HpSpace::new(Arc::new(m), Arc::new(g), p)?)
}

fn plane_wave(omega: f64) -> Result<HelmholtzProblem, CliError> {
    Ok(HelmholtzProblem::homogeneous(
        1.0,
        1.0,
        omega,
        1.0,
        BoundarySource::PlaneWaveTrace { direction: [0.6, 0.8] },
    )?)
}

fn crystal_problem(omega: f64) -> Result<HelmholtzProblem, CliError> {
    let tags = |c: f64, q: f64| [(0u32, c), (1u32, q)].into_iter().collect();
    Ok(HelmholtzProblem::new(
        tags(1.0 / 12.1, 1.0),
        tags(1.0, 1.0),
        omega,
        (0..4).map(|m| (m, -1.0)).collect(),
        BoundarySource::IncomingPlaneWave { kappa: omega },
    )?)
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Production `S_A`, `u_A` and reconstruction against the dense quadrature oracle.
pub fn dense_equivalence(inject_fault: bool) -> Result<Vec<Check>, CliError> {
    let s = square2(0.5, 2, false)?;
    let prob = plane_wave(1.0)?;
    let oracle = oracle_acms_dense(&s, &prob, 2)?;
    let asm = assemble_fem(&s, &prob)?;
    let basis = build_basis(&s, &asm, 2, &EdgeModeCache::new())?;
    let loads = subdomain_loads(&s, &prob)?;
    let blocks = local_blocks(&s, &asm, &basis, &loads)?;
    let mut sys = assemble_acms(&oracle.dofmap, &basis, &blocks)?;
    let scale = oracle.matrix.max_abs();
    if inject_fault {
        let v = sys.matrix.get(1, 0);
        sys.matrix.set(1, 0, v + Complex64::new(1e-6 * scale, 0.0))?;
    }
    let a = sys.matrix.to_dense();
    let mut worst: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            worst = worst.max((a[(i, j)] - oracle.matrix[(i, j)]).norm());
        }
        worst = worst.max((sys.rhs[i] - oracle.rhs[i]).norm());
    }
    let (u, _) = sys.solve()?;
    let field = reconstruct(&s, &basis, &oracle.dofmap, &u)?;
    Ok(vec![
        Check::new("dense oracle: S_A and g_A entries", worst / scale, 1e-10),
        Check::new("dense oracle: u_A", rel_diff(&u, &oracle.coeffs), 1e-9),
        Check::new("dense oracle: reconstructed field", rel_diff(&field, &oracle.field), 1e-9),
    ])
}

/// With every edge mode the ACMS solution is the FEM solution.
pub fn full_mode_equivalence() -> Result<Vec<Check>, CliError> {
    let s = square2(0.25, 3, false)?;
    let prob = plane_wave(4.0)?;
    let asm = assemble_fem(&s, &prob)?;
    let sol = solve_acms_problem(&s, &asm, &prob, max_modes(&s), &EdgeModeCache::new())?;
    let fem = solve_fem_direct(&s, &prob)?;
    let (_, _, rel) = l2_norm_and_error(&s, &sol.field, Reference::Field(&s, &fem.coeffs))?;
    Ok(vec![Check::new("full modes: ACMS vs FEM (rel L2)", rel, 1e-9)])
}

/// Eigen residuals and `M`-orthonormality of the edge modes of the pore crystal.
pub fn edge_mode_checks() -> Result<Vec<Check>, CliError> {
    let s = square2(0.2, 3, true)?;
    let count = 6;
    let (mut residual, mut gram): (f64, f64) = (0.0, 0.0);
    for e in 0..s.graph().edges.len() {
        let set = compute_edge_modes(&s, e, count)?;
        let (k, m) = edge_trace_matrices(&s, e)?;
        let n = m.rows() - 2;
        for i in 0..count {
            let lambda = set.eigenvalues[i];
            let (mut r2, mut m2) = (0.0, 0.0);
            for a in 0..n {
                let (mut kv, mut mv) = (0.0, 0.0);
                for b in 0..n {
                    kv += k[(a + 1, b + 1)] * set.modes[(b, i)];
                    mv += m[(a + 1, b + 1)] * set.modes[(b, i)];
                }
                r2 += (kv - lambda * mv).powi(2);
                m2 += mv * mv;
            }
            residual = residual.max(r2.sqrt() / (lambda.abs() * m2.sqrt()));
            for j in 0..count {
                let mut g = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        g += set.modes[(a, i)] * m[(a + 1, b + 1)] * set.modes[(b, j)];
                    }
                }
                gram = gram.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    Ok(vec![
        Check::new("edge modes: eigen residual", residual, 1e-9),
        Check::new("edge modes: M-orthonormality", gram, 1e-10),
    ])
}

fn boundary_trace(space: &HpSpace, j: usize, global: &[f64]) -> DenseMatrix<f64> {
    let sd = space.subdomain(j);
    DenseMatrix::from_fn(sd.boundary.len(), 1, |r, _| global[sd.dofs[sd.boundary[r]]])
}

/// Extension linearity (seeded), exactness for linear traces and zero traces.
pub fn extension_checks(seed: u64) -> Result<Vec<Check>, CliError> {
    let s = square2(0.2, 3, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let asm = assemble_fem(&s, &crystal_problem(1.0)?)?;
    let (mut linear, mut zero): (f64, f64) = (0.0, 0.0);
    for j in 0..s.subdomains().len() {
        let ext = build_extension(&s, &asm, j)?;
        let nb = ext.num_boundary();
        let (a, b) = (random_complex(&mut rng, nb), random_complex(&mut rng, nb));
        let alpha = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mix: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
        let lhs = ext.extend_trace(&mix)?;
        let (ea, eb) = (ext.extend_trace(&a)?, ext.extend_trace(&b)?);
        let rhs: Vec<Complex64> = ea.iter().zip(&eb).map(|(x, y)| alpha * x + y).collect();
        linear = linear.max(rel_diff(&lhs, &rhs));
        let z = ext.extend_trace(&vec![Complex64::new(0.0, 0.0); nb])?;
        zero = zero.max(z.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    // Without wavenumber the extension is discrete harmonic and reproduces linears.
    let flat = HelmholtzProblem::homogeneous(1.0, 1.0, 1e-12, 1.0, BoundarySource::Zero)?;
    let asm = assemble_fem(&s, &flat)?;
    let (cx, cy) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let lin: Vec<f64> = interpolate(&s, |x| Complex64::new(cx * x[0] + cy * x[1] + 0.5, 0.0))?
        .iter()
        .map(|v| v.re)
        .collect();
    let mut exact: f64 = 0.0;
    for j in 0..s.subdomains().len() {
        let ext = build_extension(&s, &asm, j)?;
        let u = ext.extend(&boundary_trace(&s, j, &lin))?;
        for (l, &d) in s.subdomain(j).dofs.iter().enumerate() {
            exact = exact.max((u[(l, 0)] - lin[d]).abs());
        }
    }
    Ok(vec![
        Check::new(format!("extension: linearity (seed {seed})"), linear, 1e-12),
        Check::new("extension: zero trace gives zero", zero, 0.0),
        Check::new(format!("extension: linear traces at zero wavenumber (seed {seed})"), exact, 1e-12),
    ])
}

/// Complex symmetry of `S_F` and `S_A`, and partition of unity of the vertex functions.
pub fn structure_checks() -> Result<Vec<Check>, CliError> {
    let s = square2(0.2, 3, true)?;
    let prob = crystal_problem(1.0)?;
    let sf = global_matrix(&s, &prob)?;
    let sf_sym = sf.symmetry_defect() / sf.max_abs();
    let asm = assemble_fem(&s, &prob)?;
    let ie = 4;
    let basis = build_basis(&s, &asm, ie, &EdgeModeCache::new())?;
    let loads = subdomain_loads(&s, &prob)?;
    let blocks = local_blocks(&s, &asm, &basis, &loads)?;
    let a = assemble_acms(&number_dofs(s.graph(), ie), &basis, &blocks)?.matrix.to_dense();
    let mut sa_sym: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..i {
            sa_sym = sa_sym.max((a[(i, j)] - a[(j, i)]).norm());
        }
    }
    let mut unity: f64 = 0.0;
    for b in &basis {
        let sd = s.subdomain(b.subdomain);
        for &l in &sd.boundary {
            if matches!(s.dof_entity(sd.dofs[l]), DofEntity::Vertex(_)) {
                unity = unity.max(((0..4).map(|k| b.data[(l, k)]).sum::<f64>() - 1.0).abs());
            }
        }
    }
    Ok(vec![
        Check::new("complex symmetry of S_F", sf_sym, 1e-14),
        Check::new("complex symmetry of S_A", sa_sym / a.max_abs(), 1e-13),
        Check::new("vertex functions: partition of unity", unity, 1e-14),
    ])
}

/// Banded LU against dense elimination on a random banded system of at most 200 unknowns.
pub fn banded_vs_dense(seed: u64) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(20..=200);
    let (kl, ku) = (rng.gen_range(0..=12usize).min(n - 1), rng.gen_range(0..=12usize).min(n - 1));
    let mut band = BandedMatrix::zeros(n, kl, ku);
    for i in 0..n {
        for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
            band.set(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))?;
        }
    }
    let b = random_complex(&mut rng, n);
    let dense = dense_solve(&band.to_dense(), &DenseMatrix::from_fn(n, 1, |i, _| b[i]))?.into_vec();
    let x = band.factor()?.solve(&b)?;
    Ok(vec![Check::new(format!("banded vs dense solve, n = {n} (seed {seed})"), rel_diff(&x, &dense), 1e-10)])
}

/// Runs every check; seeded checks once per seed.
pub fn run_suite(seeds: &[u64], inject_fault: bool) -> Result<Vec<Check>, CliError> {
    let mut checks = dense_equivalence(inject_fault)?;
    checks.extend(full_mode_equivalence()?);
    checks.extend(edge_mode_checks()?);
    checks.extend(structure_checks()?);
    for &seed in seeds {
        checks.extend(extension_checks(seed)?);
        checks.extend(banded_vs_dense(seed)?);
    }
    Ok(checks)
}
