//! Experiment harness for the ACMS Helmholtz solver: JSON configs in, CSV records out.

pub mod config;
pub mod experiments;
pub mod oracle;

use acms_core::postprocess::{write_sweep_csv, SweepRecord};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use thiserror::Error;

use config::{Command, Config};
use experiments::Log;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] acms_core::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{failed} of {total} oracle checks failed")]
    OracleFailed { failed: usize, total: usize },
    #[error("{0} sweep rows failed numerically; see the warnings above")]
    RowsFailed(usize),
}

impl CliError {
    /// 1 for bad configuration or output, 2 for numerical failures, 3 for failed oracle checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::RowsFailed(_) => 2,
            CliError::OracleFailed { .. } => 3,
            _ => 1,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn write_records(path: &Path, records: &[SweepRecord]) -> Result<(), CliError> {
    write_sweep_csv(records, create(path)?)?;
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// `dir/stem_suffix.csv` next to the main output file.
fn sibling(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    main.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Runs the configured command and writes its outputs below `out_dir`.
pub fn run(cfg: &Config, out_dir: &Path, log: Log) -> Result<(), CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Output {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let main = out_dir.join(&cfg.output.csv);
    let failures = match cfg.command {
        Command::Convergence => {
            let s = experiments::run_convergence(cfg, log)?;
            write_records(&main, &s.records)?;
            s.failures.len()
        }
        Command::ModeSweep => {
            let s = experiments::run_mode_sweep(cfg, log)?;
            write_records(&main, &s.study.records)?;
            write_rows(&sibling(&main, "onset"), &s.onsets)?;
            for o in &s.onsets {
                println!("kappa {}: onset {:?}, post-onset slope {:?}", o.kappa, o.onset, o.slope);
            }
            s.study.failures.len()
        }
        Command::Scaling => {
            let s = experiments::run_scaling(cfg, log)?;
            let mut all = s.vs_ie.clone();
            all.extend(s.vs_j.iter().cloned());
            write_records(&main, &all)?;
            write_rows(&sibling(&main, "slopes"), &s.slopes)?;
            for r in &s.slopes {
                println!("slope of {} vs {}: {:.3}", r.quantity, r.study, r.slope);
            }
            println!("interior factorization (excluded from t_bas): {:.3}s", s.t_factor);
            0
        }
        Command::Crystal => {
            let s = experiments::run_crystal(cfg, out_dir, log)?;
            write_records(&main, &s.records)?;
            s.failures.len()
        }
        Command::OracleCheck => {
            let inject = cfg.oracle.as_ref().is_some_and(|o| o.inject_fault);
            let checks = oracle::run_suite(&cfg.seeds, inject)?;
            write_rows(&main, &checks)?;
            for c in &checks {
                println!(
                    "{} {:<52} {:.3e} (tolerance {:.1e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::OracleFailed {
                    failed,
                    total: checks.len(),
                });
            }
            0
        }
    };
    if failures > 0 {
        return Err(CliError::RowsFailed(failures));
    }
    Ok(())
}
