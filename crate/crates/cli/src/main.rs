//! `acimresp <command> --config <path> [--out <dir>] [--n <N>] [--plot-data]`
//!
//! Exit status: 0 when every assertion of the command passes, 1 on a
//! numerical failure, 2 on a usage or configuration error.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acimresp", version, about = "Invariant densities and linear response of interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for all artifacts; without it the primary artifact goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the grid size from the config.
    #[arg(long)]
    n: Option<usize>,
    /// Also emit dense series for plotting.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Invariant density σ₀ at the nodes and ρ on an interior grid.
    Acim(Common),
    /// Eigenvalues of the transfer operator and the spectral gap.
    Spectrum(Common),
    /// Response coefficients κ_n by all available routes.
    Kappa(Common),
    /// The susceptibility Ψ on the configured λ values.
    Psi(Common),
    /// Ψ(1), compared with finite differences when X vanishes at ±1.
    Respond(Common),
    /// Poles and residues of a Padé approximant to Σ κ_n λⁿ.
    Pade(Common),
    /// Markov validation, operator invariants and endpoint construction.
    Check(Common),
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Acim(c) => ("acim", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Kappa(c) => ("kappa", c),
        Command::Psi(c) => ("psi", c),
        Command::Respond(c) => ("respond", c),
        Command::Pade(c) => ("pade", c),
        Command::Check(c) => ("check", c),
    };
    let cfg = match config::load(&common.config, common.n) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("acimresp {name}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match &cli.command {
        Command::Acim(_) => commands::acim(&cfg, common.plot_data),
        Command::Spectrum(_) => commands::spectrum(&cfg),
        Command::Kappa(_) => commands::kappa(&cfg),
        Command::Psi(_) => commands::psi(&cfg, common.plot_data),
        Command::Respond(_) => commands::respond(&cfg),
        Command::Pade(_) => commands::pade_cmd(&cfg),
        Command::Check(_) => commands::check(&cfg),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("acimresp {name}: numerical failure: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    if let Err(e) = emit(&outcome, common.out.as_deref()) {
        eprintln!("acimresp {name}: cannot write output: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("acimresp {name}: FAILED {f}");
        }
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn emit(outcome: &commands::Outcome, out: Option<&std::path::Path>) -> std::io::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for a in &outcome.artifacts {
                std::fs::write(dir.join(&a.name), &a.contents)?;
            }
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if let Some(a) = outcome.artifacts.first() {
                stdout.write_all(a.contents.as_bytes())?;
            }
            stdout.flush()
        }
    }
}
