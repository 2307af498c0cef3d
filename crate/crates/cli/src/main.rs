use acms_cli::config::Config;
use acms_cli::experiments::Log;
use acms_cli::CliError;
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs ACMS Helmholtz experiments described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "acms", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and field files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for the per-subdomain stages.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<(), CliError> {
        let cfg = Config::load(&cli.config)?;
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
        }
        acms_cli::run(&cfg, &cli.out, Log { verbose: cli.verbose })
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
