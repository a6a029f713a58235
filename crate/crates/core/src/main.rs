use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quantum_ensemble::experiment::{
    default_1d_grid, run_experiment, run_oracle_check, run_replication_2d, write_replication_1d,
    ExperimentConfig, TwoDOptions,
};
use quantum_ensemble::replicate::DEFAULT_MEMBERS;
use quantum_ensemble::train::Execution;
use quantum_ensemble::Result;

#[derive(Parser)]
#[command(
    name = "qensemble",
    version,
    about = "Accuracy-weighted quantum ensemble experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides `base_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Use untrained members regardless of the config.
        #[arg(long)]
        untrained: bool,
        /// Exit nonzero if any combination failed.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        sequential: bool,
        /// Feed raw features to the members instead of standardized ones.
        #[arg(long)]
        no_standardize: bool,
    },
    /// Expectation curves for the two 1D Gaussian class setups.
    #[command(name = "replicate-1d")]
    Replicate1d {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Perceptron ensemble decision grids on 2D blobs.
    #[command(name = "replicate-2d")]
    Replicate2d {
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MEMBERS)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
    /// Compare the closed-form hit probability with the state-vector simulation.
    #[command(name = "oracle-check")]
    OracleCheck {
        #[arg(long, default_value_t = 64)]
        max_ensemble: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            untrained,
            strict,
            sequential,
            no_standardize,
        } => {
            let mut cfg = ExperimentConfig::parse_file(&config)?;
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            if untrained {
                cfg.trained = false;
            }
            if sequential {
                cfg.parallel = false;
            }
            if no_standardize {
                cfg.standardize = false;
            }
            let result = run_experiment(&cfg, &out)?;
            for c in result.cells() {
                println!(
                    "{} E={} epochs={} mpps_hit={:.4} overall_accuracy={:.4} ok={} failed={}",
                    cfg.dataset,
                    c.ensemble_size,
                    c.epochs,
                    c.mpps_hit_mean,
                    c.overall_accuracy_mean,
                    c.repeats_ok,
                    c.repeats_failed
                );
            }
            for r in result.records.iter().filter(|r| r.outcome.is_err()) {
                eprintln!(
                    "error: E={} epochs={} repeat={}: {}",
                    r.ensemble_size,
                    r.epochs,
                    r.repeat,
                    r.outcome.as_ref().unwrap_err()
                );
            }
            println!("wrote {}", out.join("summary.csv").display());
            Ok(!(strict && result.has_errors()))
        }
        Command::Replicate1d { out } => {
            for path in write_replication_1d(&out, &default_1d_grid())? {
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Replicate2d {
            out,
            members,
            seed,
            sequential,
        } => {
            let opts = TwoDOptions {
                n_members: members,
                seed,
                ..TwoDOptions::default()
            };
            for c in run_replication_2d(&opts, execution(sequential), Some(&out))? {
                println!(
                    "{}: untrained votes {:.4} / {:.4}, trained votes {:.4} / {:.4}, disagreement {:.4}",
                    c.variant,
                    c.untrained_center_votes[0],
                    c.untrained_center_votes[1],
                    c.trained_center_votes[0],
                    c.trained_center_votes[1],
                    c.disagreement_fraction
                );
            }
            println!("wrote {}", out.join("replication").display());
            Ok(true)
        }
        Command::OracleCheck {
            max_ensemble,
            trials,
            seed,
            out,
        } => {
            let report = run_oracle_check(max_ensemble, trials, seed)?;
            print!("{}", report.to_text());
            if let Some(dir) = out {
                println!("wrote {}", report.write(&dir)?.display());
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
