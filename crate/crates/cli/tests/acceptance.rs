//! Acceptance criteria of the solver, one PASS/FAIL line each.
//!
//! Run a subset with `cargo test -p acms-cli --test acceptance -- 3 4`.

use acms_cli::config::{Config, GeometryConfig, Layout};
use acms_cli::experiments::{build_space, run_convergence, run_crystal, run_mode_sweep, run_scaling, Log, ModeSweep, Study};
use acms_cli::{oracle, CliError};
use acms_core::acms_basis::compute_edge_modes;
use acms_core::postprocess::SweepRecord;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, CliError>;

fn preset(name: &str) -> Config {
    let path = format!("{}/configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
    Config::load(&path).unwrap_or_else(|e| panic!("preset {name}: {e}"))
}

fn log() -> Log {
    Log {
        verbose: std::env::var_os("ACMS_VERBOSE").is_some(),
    }
}

fn shared<T>(cell: &'static OnceLock<Result<T, String>>, f: impl FnOnce() -> Result<T, CliError>) -> Result<&'static T, CliError> {
    cell.get_or_init(|| f().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| CliError::Config(format!("shared study failed: {e}")))
}

fn square_sweep() -> Result<&'static ModeSweep, CliError> {
    static CELL: OnceLock<Result<ModeSweep, String>> = OnceLock::new();
    shared(&CELL, || run_mode_sweep(&preset("square-analogue-mode-sweep"), log()))
}

fn crystal_study() -> Result<&'static Study, CliError> {
    static CELL: OnceLock<Result<Study, String>> = OnceLock::new();
    shared(&CELL, || run_convergence(&preset("crystal-decompositions"), log()))
}

fn dense_oracle() -> Result<Outcome, CliError> {
    let checks = oracle::dense_equivalence(false)?;
    let (s, u) = (&checks[0], &checks[1]);
    Ok(Outcome {
        passed: s.passed && u.passed,
        detail: format!("S_A {:.1e} (tol 1e-10), u_A {:.1e} (tol 1e-9)", s.value, u.value),
    })
}

fn full_modes() -> Result<Outcome, CliError> {
    let c = &oracle::full_mode_equivalence()?[0];
    Ok(Outcome {
        passed: c.passed,
        detail: format!("rel L2 {:.1e} (tol 1e-9)", c.value),
    })
}

fn edge_eigenvalues() -> Result<Outcome, CliError> {
    let unit = GeometryConfig {
        jx: 1,
        jy: 1,
        cells_per_subdomain: vec![1],
        cell_size: 1.0,
        origin: Some([0.0, 0.0]),
        pore: None,
        layout: Layout::Full,
    };
    let space = build_space(&unit, 1, 1.0 / 32.0, 0, 4)?;
    let modes = compute_edge_modes(&space, 0, 8)?;
    let dev = modes
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (l / ((i + 1) as f64 * PI).powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        passed: dev <= 1e-5,
        detail: format!("max |lambda_i / (i pi)^2 - 1| = {dev:.1e} (tol 1e-5)"),
    })
}

fn onset_of(sweep: &ModeSweep, kappa: f64) -> Option<&acms_cli::experiments::OnsetRow> {
    sweep.onsets.iter().find(|o| o.kappa == kappa)
}

fn mode_rate() -> Result<Outcome, CliError> {
    let slope = onset_of(square_sweep()?, 16.0).and_then(|o| o.slope);
    Ok(Outcome {
        passed: slope.is_some_and(|s| (-4.0..=-2.4).contains(&s)),
        detail: format!("post-onset slope at kappa 16: {slope:?} (want [-4.0, -2.4])"),
    })
}

fn mode_linearity() -> Result<Outcome, CliError> {
    let sweep = square_sweep()?;
    let on: Vec<Option<usize>> = [8.0, 16.0, 32.0].iter().map(|&k| onset_of(sweep, k).and_then(|o| o.onset)).collect();
    let ratios: Vec<Option<f64>> = on.windows(2).map(|w| Some(w[1]? as f64 / w[0]? as f64)).collect();
    Ok(Outcome {
        passed: ratios.iter().all(|r| r.is_some_and(|r| (1.4..=3.0).contains(&r))),
        detail: format!("onsets (kappa 8, 16, 32) {on:?}, ratios {ratios:?} (want [1.4, 3.0])"),
    })
}

fn high_order() -> Result<Outcome, CliError> {
    let mut cfg = preset("square-analogue-convergence");
    let d = cfg.discretization.as_mut().expect("preset has discretization");
    d.p = vec![1, 4];
    d.ie = vec![32, 128];
    let study = run_convergence(&cfg, log())?;
    let err = |p: usize| study.records.iter().find(|r| r.p == Some(p)).and_then(|r| r.err_rel);
    let ratio = err(4).zip(err(1)).map(|(a, b)| a / b);
    Ok(Outcome {
        passed: ratio.is_some_and(|r| r <= 1e-3),
        detail: format!("err(p=1) {:?}, err(p=4) {:?}, ratio {ratio:?} (tol 1e-3)", err(1), err(4)),
    })
}

fn crystal_err(per_subdomain: usize) -> Result<Option<f64>, CliError> {
    let j = 64 / (per_subdomain * per_subdomain);
    Ok(crystal_study()?.records.iter().find(|r| r.j == Some(j)).and_then(|r| r.err_rel))
}

fn crystal_accuracy() -> Result<Outcome, CliError> {
    let e = crystal_err(2)?;
    Ok(Outcome {
        passed: e.is_some_and(|e| e <= 5e-5),
        detail: format!("Dincl2, p=3, I_E=64: rel L2 {e:?} (tol 5e-5)"),
    })
}

fn decomposition_dependence() -> Result<Outcome, CliError> {
    let (e1, e2) = (crystal_err(1)?, crystal_err(2)?);
    let ratio = e1.zip(e2).map(|(a, b)| a.max(b) / a.min(b));
    Ok(Outcome {
        passed: ratio.is_some_and(|r| r <= 2.0),
        detail: format!("Dincl1/I_E=32 {e1:?}, Dincl2/I_E=64 {e2:?}, ratio {ratio:?} (tol 2)"),
    })
}

fn scaling() -> Result<Outcome, CliError> {
    let s = run_scaling(&preset("scaling"), log())?;
    let slope = |study: &str, q: &str| {
        s.slopes
            .iter()
            .find(|r| r.study == study && r.quantity == q)
            .map(|r| r.slope)
            .unwrap_or(f64::NAN)
    };
    let (ass, bas, sol) = (slope("I_E", "t_ass"), slope("I_E", "t_bas"), slope("J", "t_sol"));
    Ok(Outcome {
        passed: (1.6..=2.4).contains(&ass) && (0.6..=1.5).contains(&bas) && sol <= 2.2,
        detail: format!("t_ass~I_E^{ass:.2} (want [1.6, 2.4]), t_bas~I_E^{bas:.2} (want [0.6, 1.5]), t_sol~J^{sol:.2} (want <= 2.2)"),
    })
}

fn transmission() -> Result<Outcome, CliError> {
    let dir = tempfile::tempdir().map_err(|e| CliError::Config(e.to_string()))?;
    let study = run_crystal(&preset("waveguide-contrast"), dir.path(), log())?;
    let t = |k: f64| -> Option<f64> {
        let r: &SweepRecord = study.records.iter().find(|r| r.kappa == Some(k))?;
        Some(r.e_out? / r.e_in?)
    };
    let ratio = t(1.48).zip(t(1.26)).map(|(a, b)| a / b);
    Ok(Outcome {
        passed: ratio.is_some_and(|r| r >= 10.0),
        detail: format!("E_out/E_in: {:?} at 1.26, {:?} at 1.48, contrast {ratio:?} (want >= 10)", t(1.26), t(1.48)),
    })
}

fn properties() -> Result<Outcome, CliError> {
    let mut checks = oracle::structure_checks()?;
    checks.extend(oracle::edge_mode_checks()?);
    for seed in 0..5 {
        checks.extend(oracle::extension_checks(seed)?);
        checks.extend(oracle::banded_vs_dense(seed)?);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{} = {:.1e}", c.name, c.value)).collect();
    Ok(Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks passed", checks.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    })
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("oracle equivalence", dense_oracle),
        ("full-mode equivalence", full_modes),
        ("edge eigenvalue convergence", edge_eigenvalues),
        ("I_E^-3 rate", mode_rate),
        ("wavenumber-mode linearity", mode_linearity),
        ("high-order benefit", high_order),
        ("crystal accuracy vs reference", crystal_accuracy),
        ("weak decomposition dependence", decomposition_dependence),
        ("scaling slopes", scaling),
        ("transmission contrast", transmission),
        ("property suites", properties),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        failed += usize::from(!outcome.passed);
        println!(
            "criterion {:>2} {}: {} [{}; {:.0}s]",
            i + 1,
            name,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
