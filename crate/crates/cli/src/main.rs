use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use tfspectra::experiment::{run, ExperimentConfig, Subcommand};
use tfspectra::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spectra",
    version,
    about = "Spectra of random finite Gabor frames: figure data, baselines and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Extreme singular values for random Λ with τ = C/M.
    FigureSingvals(Common),
    /// Normalized trace expectation over an (M, C) grid.
    FigureTrace(Common),
    /// Δ(p) for uniform-sphere windows on F×Z_M.
    FigureErasure(Common),
    /// i.i.d. Gaussian matrices next to Gabor systems of the same shape.
    BaselineIid(Common),
    /// Run the invariant suite; exits 3 if any check fails.
    Verify(Common),
    /// Spectral summary of one Gabor system.
    Spectrum(Common),
    /// Dual frame reconstruction of a random signal.
    Reconstruct(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Decimal or 0x-prefixed hexadecimal seed.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated dimensions.
    #[arg(long = "m-grid", value_name = "LIST")]
    m_grid: Option<String>,
    /// Any config key, e.g. --set p=0.25. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(&self) -> (Subcommand, &Common) {
        match self {
            Command::FigureSingvals(c) => (Subcommand::FigureSingvals, c),
            Command::FigureTrace(c) => (Subcommand::FigureTrace, c),
            Command::FigureErasure(c) => (Subcommand::FigureErasure, c),
            Command::BaselineIid(c) => (Subcommand::BaselineIid, c),
            Command::Verify(c) => (Subcommand::Verify, c),
            Command::Spectrum(c) => (Subcommand::Spectrum, c),
            Command::Reconstruct(c) => (Subcommand::Reconstruct, c),
        }
    }
}

fn build_config(sub: Subcommand, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for pair in &args.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        cfg.apply(k, v)?;
    }
    let flags = [
        ("seed", args.seed.clone()),
        ("threads", args.threads.clone()),
        ("trials", args.trials.clone()),
        ("m_grid", args.m_grid.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.apply(key, &v)?;
        }
    }
    cfg.subcommand = Some(sub);
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Verification(_) => EXIT_VERIFICATION,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (sub, args) = cli.command.split();
    let result = build_config(sub, args).and_then(|cfg| {
        log::info!("running {sub} with config hash {}", cfg.config_hash());
        let outcome = run(&cfg)?;
        outcome.artifacts.write_to(&cfg.out)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            if let Some(text) = &outcome.stdout {
                print!("{text}");
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("spectra: failed checks: {}", outcome.failures.join(", "));
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
        Err(err) => {
            eprintln!("spectra: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
