use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddiqkd::harness::{self, ExperimentConfig};
use ddiqkd::Error;

#[derive(Parser)]
#[command(name = "ddiqkd", version, about = "Detector-device-independent QKD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and store its transcript and tally.
    Simulate(Common),
    /// Distill a stored session into a secret key.
    Distill {
        #[command(flatten)]
        common: Common,
        /// Session directory; the output directory when omitted.
        #[arg(long)]
        session: Option<PathBuf>,
    },
    /// Optimize μ and distill one block at each sweep point.
    Sweep(Common),
    /// Evaluate the finite-key bound on a stored record.
    FiniteKey {
        input: PathBuf,
    },
    /// Run an attack scenario and report the countermeasure verdict.
    Attack(Common),
}

fn load(c: &Common) -> ddiqkd::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> ddiqkd::Result<()> {
    match cli.command {
        Command::Simulate(c) => print!("{}", harness::cmd_simulate(&load(&c)?)?.to_text()),
        Command::Distill { common, session } => {
            let s = harness::cmd_distill(&load(&common)?, session.as_deref())?;
            let r = &s.row;
            println!("n = {}\nqber = {:.6}\ndisclosed = {}\nell = {}\nskr_bps = {:.3}", r.n, r.qber, r.disclosed, r.ell, r.skr_bps);
            if !r.note.is_empty() {
                println!("note = {}", r.note);
            }
            println!("log = {}", s.log_path.display());
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let rows = harness::cmd_sweep(&cfg)?;
            harness::write_sweep_csv(std::io::stdout().lock(), &rows)?;
        }
        Command::FiniteKey { input } => print!("{}", harness::cmd_finite_key(&input)?.to_record()),
        Command::Attack(c) => print!("{}", harness::cmd_attack(&load(&c)?)?.verdict_table()),
    }
    Ok(())
}

fn missing_input(e: &Error) -> Option<&Path> {
    match e {
        Error::File { path, source } if source.kind() == std::io::ErrorKind::NotFound => Some(path),
        _ => None,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ddiqkd: {e}");
            if missing_input(&e).is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
