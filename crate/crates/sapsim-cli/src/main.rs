//! `sapsim` — run simulation and verification experiments for S-asymptotically
//! ω-periodic mild solutions of stochastic evolution equations from a TOML
//! configuration.
//!
//! Exit codes: 0 the experiment completed and its check (if any) passed;
//! 1 usage, configuration, or I/O error; 2 the experiment ran but its check
//! failed; 3 the analytic contraction condition is not certified, so the
//! check is not applicable.

use clap::Parser;
use sapsim_core::driver::run_experiment;
use sapsim_core::{config::ExperimentConfig, Error};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "sapsim", version, about = "Simulate and verify S-asymptotically ω-periodic mild solutions of stochastic evolution equations", long_about = None)]
struct Args {
    /// Experiment configuration file (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Output directory (overrides the config's `output.dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for path-parallel sections; 0 uses all cores.
    /// Affects speed only — results are bitwise independent of it.
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Suppress informational output (files are still written).
    #[arg(long)]
    quiet: bool,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    // clap's default exit code for usage errors is 2, which this tool
    // reserves for "ran but the check failed"; route usage errors to 1.
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) => {
            let is_usage_error = err.use_stderr();
            let _ = err.print();
            return if is_usage_error { 1 } else { 0 };
        }
    };

    let cfg = match ExperimentConfig::from_path(&args.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return 1;
        }
    };

    let out_dir = args.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("error: failed to build thread pool: {err}");
            return 1;
        }
    };

    match pool.install(|| run_experiment(&cfg, &out_dir, args.quiet)) {
        Ok(outcome) => outcome.verdict.exit_code(),
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                // The run itself was sound but every sample diverged: the
                // check ran and failed.
                Error::PathBlowUp { .. } => 2,
                _ => 1,
            }
        }
    }
}
