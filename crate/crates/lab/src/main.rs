//! hardy-lab: run declarative spectral-evolution experiments and verify the
//! weighted-norm, Carleman and interpolation inequalities at desk scale.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hardy_lab::runspec::{self, RunSpec};

#[derive(Parser)]
#[command(name = "hardy-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON run spec.
    Run {
        /// Path to the RunSpec JSON document.
        spec: PathBuf,
        /// Output directory for bundle.json and series/.
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Thread limit (experiments are single-threaded; reserved for sweeps).
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Run a predefined suite of experiments.
    Suite {
        /// Suite name; `acceptance` runs every experiment's default spec.
        name: String,
        /// Output directory, one subdirectory per experiment.
        #[arg(long)]
        out: PathBuf,
        /// Parallel experiment limit.
        #[arg(long, default_value_t = 4)]
        threads: usize,
    },
    /// Print the RunSpec JSON schema.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            out,
            seed,
            threads: _,
        } => {
            let doc = match std::fs::read_to_string(&spec) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", spec.display());
                    return ExitCode::from(2);
                }
            };
            let mut parsed: RunSpec = match runspec::parse_runspec(&doc) {
                Ok(s) => s,
                Err(errs) => {
                    for e in errs {
                        eprintln!("error: {e}");
                    }
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                parsed.seed = s;
            }
            let dir = parsed.output.clone().map(PathBuf::from).unwrap_or(out);
            match hardy_lab::run_and_write(&parsed, &dir) {
                Ok(bundle) => {
                    report(&bundle);
                    if bundle.all_pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Suite { name, out, threads } => {
            if name != "acceptance" {
                eprintln!("error: unknown suite '{name}' (available: acceptance)");
                return ExitCode::from(2);
            }
            match hardy_lab::run_suite(&out, threads) {
                Ok(bundles) => {
                    let mut all = true;
                    for b in &bundles {
                        report(b);
                        all &= b.all_pass();
                    }
                    println!("suite acceptance: {}", if all { "PASS" } else { "FAIL" });
                    if all {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Schema => {
            println!("{}", runspec::RUNSPEC_SCHEMA);
            ExitCode::SUCCESS
        }
    }
}

fn report(bundle: &hardy_lab::bundle::ResultBundle) {
    let status = if bundle.all_pass() { "PASS" } else { "FAIL" };
    println!(
        "[{status}] {} ({:.2}s)",
        bundle.experiment, bundle.provenance.wall_time_s
    );
    if let Some(err) = &bundle.error {
        println!("    error: {err}");
    }
    for (name, ok) in &bundle.verdicts {
        println!("    {} {}", if *ok { "ok  " } else { "FAIL" }, name);
    }
}
