//! `pigou` — audits how much each column of a tabular dataset reveals about
//! a protected intersectional profile, and prices that leakage.

use clap::{Parser, Subcommand};
use std::path::PathBuf;

mod atomic;
mod config;
mod pipeline;
mod summary;

use pipeline::Session;

#[derive(Parser)]
#[command(
    name = "pigou",
    version,
    about = "Prices per-channel privacy leakage of tabular data as a surcharge",
    long_about = "Measures the mutual information between each feature channel and the joint \
protected-attribute profile of a dataset, then prices each channel at \
V = c_p + lambda * I. Runs are fully described by a JSON config and are \
reproducible bit for bit given the same seed."
)]
struct Cli {
    /// Path to the run-config JSON
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the estimator seed from the config
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Suppress progress notes and the printed summary
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check schema, data, and config coherence without computing anything
    Validate,
    /// Estimate per-channel leakage and write the leakage report
    Estimate,
    /// Estimate, price, and write the valuation report
    Price,
    /// Full run: validate, estimate, price, write report and text summary
    Audit,
}

fn main() {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        eprintln!("error: --config <PATH> is required");
        std::process::exit(pipeline::EXIT_VALIDATION);
    };
    let session = Session {
        config_path,
        seed_override: cli.seed,
        quiet: cli.quiet,
    };
    let code = match cli.command {
        Command::Validate => session.cmd_validate(),
        Command::Estimate => session.cmd_estimate(),
        Command::Price => session.cmd_price(),
        Command::Audit => session.cmd_audit(),
    };
    std::process::exit(code);
}
