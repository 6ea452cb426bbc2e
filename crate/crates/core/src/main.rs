use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noregret::error::{Error, Result};
use noregret::games::{ec_probe, load_instance, monotonicity_probe};
use noregret::harness::{self, acceptance, ExperimentConfig, Row};
use noregret::schedules::{stream, substream};

#[derive(Parser)]
#[command(version, about = "Adaptive no-regret learners: experiments and acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment at its `horizon` and write the CSV trace.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every horizon in `horizons` and append fitted rates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance suite.
    Verify {
        /// Halve replication counts and widen Monte Carlo limits by √2.
        #[arg(long)]
        quick: bool,
    },
    /// Sample the curvature constants an instance file claims.
    Probe {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => experiment(&config, harness::run),
        Command::Sweep { config } => experiment(&config, harness::sweep),
        Command::Verify { quick } => Ok(verify(quick)),
        Command::Probe { game, pairs } => probe(&game, pairs),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Io(_) | Error::Json(_) => 2,
        Error::Solver { .. } | Error::Contract(_) | Error::Csv(_) => 3,
    }
}

fn experiment(path: &Path, exec: fn(&ExperimentConfig) -> Result<Vec<Row>>) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(path)?;
    // Fail on an unwritable output before spending time on the run.
    let out: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Error::config("output", format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let rows = exec(&cfg)?;
    harness::write_csv(&rows, out)?;
    if let Some(p) = &cfg.output {
        eprintln!("wrote {} rows to {}", rows.len(), p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(quick: bool) -> ExitCode {
    let outcomes = acceptance::run_suite(quick, |o| println!("{o}"));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let total: f64 = outcomes.iter().map(|o| o.elapsed.as_secs_f64()).sum();
    println!("{} of {} criteria passed in {total:.1}s", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn probe(path: &Path, pairs: usize) -> Result<ExitCode> {
    let game = load_instance(path)?;
    let mut rng = substream(0, stream::PROBE);
    let mut passed = true;
    let mut any = false;
    if let Some(beta) = game.strong_monotonicity() {
        let r = monotonicity_probe(&game, beta, pairs, &mut rng)?;
        println!(
            "monotonicity: claimed beta {beta:.6}, min ratio {:.6}, min margin {:.3e} over {} pairs: {}",
            r.min_ratio,
            r.min_margin,
            r.pairs,
            if r.passed { "pass" } else { "FAIL" }
        );
        passed &= r.passed;
        any = true;
    }
    if let Some(alpha) = game.exp_concavity() {
        let env = game.environment(1)?;
        let g = game.second_moment_bound(&env, pairs, &mut rng)?.sqrt();
        let d = game.joint_set()?.diameter();
        let r = ec_probe(&game, alpha, g, d, pairs, &mut rng)?;
        println!(
            "exp-concavity: claimed alpha {alpha:.6} (G {g:.4}, D {d:.4}), min ratio {:.6}, min margin {:.3e}: {}",
            r.min_ratio,
            r.min_margin,
            if r.passed { "pass" } else { "FAIL" }
        );
        passed &= r.passed;
        any = true;
    }
    if !any {
        println!("{} has no curvature calculator to probe", game.name());
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
