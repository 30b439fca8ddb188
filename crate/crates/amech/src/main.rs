use std::path::PathBuf;
use std::process::ExitCode;

use amech::commands::{self, Outcome, EXIT_MALFORMED};
use amech::registry::diff_from_env;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amech", version, about = "Mechanics on Lie algebroids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structure equations of a model's chart at random points.
    Validate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrate a scenario and write a CSV trajectory plus a JSON sidecar.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's model.
        #[arg(long)]
        model: Option<String>,
    },
    /// Run a named cross-check at random points.
    Check {
        /// One of involution, triple, legendre, sl-eq-sh, hp-lp.
        name: String,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let diff = diff_from_env()?;
    match cli.command {
        Command::Validate {
            model,
            points,
            tol,
            seed,
        } => commands::validate(&model, points, tol, seed, diff),
        Command::Simulate { config, out, model } => {
            commands::simulate(&config, model.as_deref(), &out, diff)
        }
        Command::Check {
            name,
            model,
            points,
            tol,
            seed,
        } => commands::check(&name, &model, points, tol, seed, diff),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.report).expect("reports serialize")
            );
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_MALFORMED)
        }
    }
}
