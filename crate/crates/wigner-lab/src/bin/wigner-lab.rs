use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wigner_lab::harness::{
    identity_suite_maxima, run_experiment, ExperimentConfig, ExperimentKind,
};
use wigner_lab::report::fmt_g;

#[derive(Parser)]
#[command(name = "wigner-lab", about = "Random-matrix spectral laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the thread budget.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the available experiments.
    List,
    /// Run the fast identity suite and report each check.
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> wigner_lab::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = Some(t);
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = run_experiment(&cfg)?;
            println!(
                "{}: {} ({} trial records) -> {}",
                cfg.experiment.name(),
                if outcome.violations.is_empty() {
                    "pass"
                } else {
                    "FAIL"
                },
                outcome.science["trials"].as_array().map_or(0, |t| t.len()),
                outcome.report_path.display()
            );
            for v in &outcome.violations {
                println!("violation: {v}");
            }
            Ok(outcome.violations.is_empty())
        }
        Command::List => {
            for kind in ExperimentKind::ALL {
                println!("{:<18} {}", kind.name(), kind.description());
            }
            Ok(true)
        }
        Command::Check => {
            let (_records, mx) = identity_suite_maxima(50, 1)?;
            let mut ok = true;
            for (label, value, threshold) in mx.checks() {
                let pass = value <= threshold;
                ok &= pass;
                println!(
                    "{}: {} (max {}, tolerance {})",
                    label,
                    if pass { "pass" } else { "FAIL" },
                    fmt_g(value),
                    fmt_g(threshold)
                );
            }
            println!(
                "first-component identity pairs skipped by degeneracy guard: {}",
                mx.v1_skipped
            );
            Ok(ok)
        }
    }
}
