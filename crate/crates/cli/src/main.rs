//! `nep`: run configured eigenvalue computations, dump probe tables and
//! re-emit result tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nep_core::io::{self, OutputPaths, ResultRecord, RunMetadata};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "NEP_THREADS";

#[derive(Parser)]
#[command(name = "nep", version, about = "Nonlinear eigenvalue solvers on a target region")]
struct Cli {
    /// Worker threads (overrides NEP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a TOML config and write result tables.
    Solve {
        config: PathBuf,
        /// Replaces the configured output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compute and dump only the probe table of a config.
    Probe {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-emit CSV tables from a result JSON file.
    Report {
        result: PathBuf,
        /// Directory for the tables; defaults to the result's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        prefix: String,
    },
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn print_summary(record: &ResultRecord) {
    println!(
        "{} eigenvalues ({} inside), gap {:.3e} {}",
        record.eigenpairs.len(),
        record.eigenpairs.iter().filter(|r| r.inside).count(),
        record.gap.g_max,
        if record.accepted { "accepted" } else { "NOT accepted" }
    );
    println!("{:>5}  {:>24}  {:>24}  {:>10}  inside", "index", "Re", "Im", "residual");
    for r in &record.eigenpairs {
        println!("{:>5}  {:>24.16e}  {:>24.16e}  {:>10.3e}  {}", r.index, r.re, r.im, r.residual, r.inside);
    }
}

fn load(config: &Path, out_dir: Option<PathBuf>) -> Result<io::RunConfig, nep_core::Error> {
    let mut cfg = io::load_config(config)?;
    if let Some(d) = out_dir {
        cfg.output.directory = std::path::absolute(d)?;
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<bool, nep_core::Error> {
    match command {
        Command::Solve { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let output = io::execute(&cfg)?;
            log::info!("{} finished in {:.3} s", cfg.algorithm.name(), output.elapsed_seconds);
            let record = ResultRecord::from_result(&output.result);
            let paths = cfg.output_paths();
            let mut written = io::write_results(&record, &paths)?;
            io::write_metadata(&RunMetadata::new(&cfg, &output), &paths.metadata_json)?;
            written.push(paths.metadata_json.clone());
            print_summary(&record);
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(record.accepted)
        }
        Command::Probe { config, out_dir } => {
            let cfg = load(&config, out_dir)?;
            let table = io::probe_only(&cfg)?;
            let path = cfg.output_paths().probe_json;
            io::write_probe_table(&table, &path)?;
            println!(
                "{} points, L = {}, {} failed solves",
                table.len(),
                table.width(),
                table.failed_points()
            );
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Report { result, out_dir, prefix } => {
            let record = io::read_result(&result)?;
            let dir = out_dir.unwrap_or_else(|| result.parent().map(Path::to_path_buf).unwrap_or_default());
            let written = io::write_results(&record, &OutputPaths::new(dir, &prefix))?;
            print_summary(&record);
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(record.accepted)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: no singular value gap above tol_gap; results are not accepted");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
