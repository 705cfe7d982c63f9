use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nep_bench::experiments::{
    run_fig2, run_fig3, run_fig4, run_gun_data, run_identities, run_oracles, run_string, run_two_stage, Fig4Params,
};
use nep_bench::report::Report;

/// Runs the reference experiments and writes plot-ready CSV tables.
#[derive(Parser)]
#[command(name = "nep-bench", version)]
struct Cli {
    /// Directory for CSV tables and JSON summaries.
    #[arg(long, default_value = "bench-out", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Single-threaded RSRR count, accuracy and runtime on the loaded string.
    String,
    /// SS-RI versus SS-CI for several block sizes.
    Fig2,
    /// Sampling versus moment scheme.
    Fig3,
    /// Largest residual against N·L for several block sizes.
    Fig4 {
        /// Number of probing seeds averaged per point.
        #[arg(long, default_value_t = 5)]
        repeats: u64,
    },
    /// Small problems against independent references.
    Oracles,
    /// Randomized interpolation identities.
    Identities {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Two-stage refinement on the synthetic cavity model.
    TwoStage,
    /// Two-stage refinement on cavity data read from Matrix Market files.
    GunData { dir: PathBuf },
    /// Every experiment except the data-gated one.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runs: Vec<nep_bench::Result<Report>> = match cli.experiment {
        Experiment::String => vec![run_string()],
        Experiment::Fig2 => vec![run_fig2()],
        Experiment::Fig3 => vec![run_fig3()],
        Experiment::Fig4 { repeats } => vec![run_fig4(&Fig4Params {
            seeds: (1..=repeats).collect(),
            ..Fig4Params::default()
        })],
        Experiment::Oracles => vec![run_oracles()],
        Experiment::Identities { cases, seed } => vec![run_identities(cases, seed)],
        Experiment::TwoStage => vec![run_two_stage()],
        Experiment::GunData { dir } => vec![run_gun_data(&dir)],
        Experiment::All => vec![
            run_string(),
            run_fig2(),
            run_fig3(),
            run_fig4(&Fig4Params::default()),
            run_oracles(),
            run_identities(100, 2024),
            run_two_stage(),
        ],
    };
    let mut ok = true;
    for run in runs {
        match run {
            Ok(report) => {
                for v in &report.verdicts {
                    println!("{}", v.line());
                }
                ok &= report.passed();
                match report.write(&cli.out_dir) {
                    Ok(files) => {
                        for f in files {
                            println!("  wrote {}", f.display());
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        ok = false;
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
