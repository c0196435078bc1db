//! fbm-chaos: runs the experiment suites and writes CSV reports.
//!
//! Exit status: 0 when every verdict passes, 1 on usage, config or runtime
//! errors, 2 when a verdict fails.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbm_chaos::harness::{fdd_convergence_study, Report};
use fbm_chaos::studies;

#[derive(Parser)]
#[command(name = "fbm-chaos", version, about = "Noise-kernel approximations of fractional multiple integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel identities and the indicator inner-product oracle
    KernelCheck(Common),
    /// Covariance of the smoothed fBm increments against R(s, t)
    EtaCov(Common),
    /// Mean-square error of the band functional against its limit
    Lemma3(Common),
    /// Second moment of the doubly banded triple integral
    Lemma7(Common),
    /// Finite-dimensional convergence study of the approximations
    FddConverge(Common),
    /// Raw samples of the approximations and of the exact integrals
    Sample(Common),
}

#[derive(Args)]
struct Common {
    /// experiment file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// output directory for CSVs and summary.txt
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (0: one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::KernelCheck(c)
            | Command::EtaCov(c)
            | Command::Lemma3(c)
            | Command::Lemma7(c)
            | Command::FddConverge(c)
            | Command::Sample(c) => c,
        }
    }
}

enum Failure {
    Usage(String),
    Run(String),
}

fn run(command: &Command) -> Result<Report, Failure> {
    let c = command.common();
    let file = config::load(&c.config).map_err(Failure::Usage)?;
    let seed = c.seed.unwrap_or(file.defaults.seed);
    let w = c.workers;
    let run = |r: fbm_chaos::Result<Report>| r.map_err(|e| Failure::Run(e.to_string()));
    match command {
        Command::KernelCheck(_) => run(studies::kernel_check(&file.kernel_check().map_err(Failure::Usage)?)),
        Command::EtaCov(_) => run(studies::eta_cov(&file.eta_cov(seed).map_err(Failure::Usage)?, w)),
        Command::Lemma3(_) => run(studies::lemma3(&file.band("lemma3", seed).map_err(Failure::Usage)?, w)),
        Command::Lemma7(_) => run(studies::lemma7(&file.band("lemma7", seed).map_err(Failure::Usage)?, w)),
        Command::FddConverge(_) => {
            let e = file.experiment(seed).map_err(Failure::Usage)?;
            run(fdd_convergence_study(&e, w).map(|r| r.into_report("fdd-converge")))
        }
        Command::Sample(_) => run(studies::sample(&file.experiment(seed).map_err(Failure::Usage)?, w)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let report = match run(&cli.command) {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let c = cli.command.common();
    if let Err(e) = report.write(&c.out) {
        eprintln!("cannot write to {}: {e}", c.out.display());
        return ExitCode::from(1);
    }
    print!("{}", report.summary());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
