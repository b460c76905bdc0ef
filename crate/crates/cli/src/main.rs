use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use pisim::config::{load_config, ConfigError};
use pisim::experiment::{describe_matrix, expand_matrix, run_experiment, ExperimentError};

/// Monte Carlo benchmarking of floor-protected portfolio strategies
/// (constrained CPPI vs. VaR-based insurance) under a regime-switching
/// market.
#[derive(Debug, Parser)]
#[command(name = "pisim", version, about)]
struct Cli {
    /// Experiment configuration file (TOML; see docs/config.md).
    #[arg(long)]
    config: PathBuf,

    /// Override sim.paths from the config.
    #[arg(long)]
    paths: Option<usize>,

    /// Override sim.seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Override output.directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print the expanded experiment matrix and matched multiples, then
    /// exit without simulating.
    #[arg(long)]
    dry_run: bool,

    /// Also dump per-date return distributions (t, s, pdf, cdf).
    #[arg(long)]
    dump_distributions: bool,

    /// Worker threads (default: all cores). Results are identical for
    /// any value.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let mut cfg = match load_config(&cli.config) {
        Ok(cfg) => cfg,
        Err(e @ (ConfigError::Io { .. } | ConfigError::Parse { .. } | ConfigError::Validation(_))) => {
            eprintln!("pisim: {e}");
            return ExitCode::from(1);
        }
    };

    // Flag values override config-file values.
    if let Some(paths) = cli.paths {
        if paths < 2 {
            eprintln!("pisim: --paths must be >= 2");
            return ExitCode::from(1);
        }
        cfg.paths = paths;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    if cli.dump_distributions {
        cfg.dump_distributions = true;
    }

    let body = || -> Result<(), ExperimentError> {
        if cli.dry_run {
            let cells = expand_matrix(&cfg)?;
            println!("{}", describe_matrix(&cfg, &cells));
            return Ok(());
        }
        let out_dir = PathBuf::from(&cfg.out_dir);
        let summary = run_experiment(&cfg, &out_dir)?;
        println!(
            "wrote {} metric rows and {} files to {}",
            summary.metric_rows,
            summary.files_written,
            summary.out_dir.display()
        );
        Ok(())
    };

    let result = match cli.workers {
        Some(w) if w >= 1 => {
            match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                Ok(pool) => pool.install(body),
                Err(e) => {
                    eprintln!("pisim: cannot build worker pool: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        Some(_) => {
            eprintln!("pisim: --workers must be >= 1");
            return ExitCode::from(1);
        }
        None => body(),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ ExperimentError::Config(_)) => {
            eprintln!("pisim: {e}");
            ExitCode::from(1)
        }
        Err(e @ ExperimentError::Numeric(_)) => {
            eprintln!("pisim: {e}");
            ExitCode::from(2)
        }
    }
}
