//! Command-line driver for the mesh-free solver.
//!
//! Subcommands:
//! * `solve`   - march a configured problem and write artifacts;
//! * `oracle`  - classical reference solution on the same grid;
//! * `compare` - error metrics between two solution tables;
//! * `metrics` - post-run training diagnostics.
//!
//! Exit codes: 0 success, 1 error (invalid config, unusable inputs,
//! numerical failure), 2 march finished but some slabs did not converge.

pub mod compare;
pub mod config;
pub mod grid;
pub mod metrics;
pub mod oracle;
pub mod solve;
pub mod svg;
pub mod table;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{load_config, resolve, Overrides};

#[derive(Parser)]
#[command(
    name = "rulesolve",
    about = "Mesh-free ODE/PDE solver driven by a rule-based critic",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the time-marching solver and write run artifacts.
    Solve {
        /// Experiment TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override (overrides march.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Profile tag override.
        #[arg(long)]
        profile: Option<String>,
        /// Force deterministic output (zeroed wall-clock fields).
        #[arg(long)]
        deterministic: bool,
    },
    /// Write the classical reference solution for a config.
    Oracle {
        /// Experiment TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Oracle override (overrides the config's oracle field).
        #[arg(long)]
        oracle: Option<String>,
    },
    /// Compare a candidate solution table against a reference table.
    Compare {
        /// Candidate CSV (typically solution.csv).
        candidate: PathBuf,
        /// Reference CSV (typically oracle.csv or another solution).
        reference: PathBuf,
        /// Report CSV path; defaults to printing only.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare even when config hashes differ.
        #[arg(long)]
        force: bool,
    },
    /// Derive training diagnostics from a finished run directory.
    Metrics {
        /// Run directory containing metrics_*.csv.
        run_dir: PathBuf,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command, returning the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve {
            config,
            out,
            seed,
            profile,
            deterministic,
        } => {
            let parsed = load_config(&config)?;
            let base = config.parent().unwrap_or(std::path::Path::new("."));
            let overrides = Overrides {
                out,
                seed,
                profile,
                oracle: None,
                deterministic,
            };
            let run = resolve(parsed, &overrides, base)?;
            let report = solve::run_solve(&run)?;
            println!(
                "marched {} steps ({} converged) in {} iterations",
                report.n_steps,
                report.n_steps - report.flagged.len(),
                report.total_iterations
            );
            println!("artifacts in {}", report.out_dir.display());
            if report.all_converged {
                Ok(0)
            } else {
                let list: Vec<String> = report.flagged.iter().map(|s| s.to_string()).collect();
                eprintln!(
                    "steps not converged within the iteration budget: {}",
                    list.join(", ")
                );
                Ok(2)
            }
        }
        Command::Oracle {
            config,
            out,
            oracle,
        } => {
            let parsed = load_config(&config)?;
            let base = config.parent().unwrap_or(std::path::Path::new("."));
            let overrides = Overrides {
                oracle,
                ..Overrides::default()
            };
            let run = resolve(parsed, &overrides, base)?;
            let out_dir = out.unwrap_or_else(|| run.out_dir.clone());
            let path = oracle::run_oracle(&run, &out_dir)?;
            println!("wrote {} ({})", path.display(), run.oracle);
            Ok(0)
        }
        Command::Compare {
            candidate,
            reference,
            out,
            force,
        } => {
            let a = table::Table::load(&candidate)?;
            let b = table::Table::load(&reference)?;
            let report = compare::compare_tables(&a, &b, force)?;
            print!("{}", compare::summarize(&report));
            if let Some(path) = out {
                compare::report_table(&report, &candidate, &reference).save(&path)?;
                println!("report written to {}", path.display());
            }
            Ok(0)
        }
        Command::Metrics { run_dir, out } => {
            let out_dir = out.unwrap_or_else(|| run_dir.clone());
            let report = metrics::run_metrics(&run_dir, &out_dir)?;
            match report.ratio {
                Some(r) => println!(
                    "first step {} iterations; median late-half {}; ratio {r:.4}",
                    report.first_step_iterations, report.median_late_iterations
                ),
                None => println!(
                    "first step {} iterations; warm-start ratio undefined",
                    report.first_step_iterations
                ),
            }
            println!("diagnostics in {}", report.out_dir.display());
            Ok(0)
        }
    }
}
