use anyhow::Result;
use arm_service::commands::{self, BuildDbArgs, EvalArgs, GenArgs, ServeArgs, TableArgs, TrainArgs};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

/// Two-layer additive risk models with globally consistent rule explanations.
#[derive(Debug, Parser)]
#[command(name = "arm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write its JSON document.
    Train(TrainArgs),
    /// Compare against logistic and majority baselines over random splits.
    Eval(EvalArgs),
    /// Generate a synthetic HELOC-like dataset.
    Gen(GenArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Precompute rules for every dataset row.
    BuildDb(BuildDbArgs),
    /// Print a model's scoring tables.
    Table(TableArgs),
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::BuildDb(a) => commands::build_db(&a),
        Command::Table(a) => commands::table(&a),
        Command::Serve(a) => tokio::runtime::Runtime::new()?.block_on(commands::serve(a)),
    }
}
