//! `factordim`: estimate factor-space dimensions, simulate panels, run Monte
//! Carlo tables and analyze observed panels from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "FACTORDIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "factordim", version, about)]
pub struct Cli {
    /// Master seed; overrides the seed in any configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress diagnostics on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a panel from a DGP configuration.
    Simulate {
        /// DGP configuration (JSON).
        config: PathBuf,
        /// Output directory for `panel.csv` and `truth.json`.
        output: PathBuf,
    },
    /// Estimate the factor counts of a panel; the report goes to stdout.
    Test {
        /// Panel CSV.
        panel: PathBuf,
        /// Test configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scaling scheme (BT1, BT2 or BT3); overrides the configuration.
        #[arg(long)]
        scheme: Option<String>,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Run a Monte Carlo scenario, table or weak-factor experiment.
    Montecarlo {
        /// Job description (JSON).
        scenario: PathBuf,
        /// Output directory.
        output: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the full empirical pipeline on a panel.
    Analyze {
        /// Panel CSV, one column per maturity when time is in rows.
        panel: PathBuf,
        /// Output directory for the report and figure data.
        #[arg(long, short)]
        output: PathBuf,
        /// Test configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Analysis options (JSON).
        #[arg(long)]
        options: Option<PathBuf>,
        /// External series as NAME=PATH, a two-column (date, value) CSV.
        #[arg(long = "external", value_name = "NAME=PATH")]
        external: Vec<String>,
        /// Number of factors to extract instead of the estimated count.
        #[arg(long)]
        factors: Option<usize>,
        /// Skip the level/slope/curvature proxies.
        #[arg(long)]
        no_proxies: bool,
        /// Largest autocorrelation lag.
        #[arg(long)]
        max_lag: Option<usize>,
        #[command(flatten)]
        layout: LayoutArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LayoutArgs {
    /// Rows are series and columns are periods.
    #[arg(long)]
    pub series_in_rows: bool,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// The file has no label column.
    #[arg(long)]
    pub no_label_column: bool,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(failure) => {
            if !cli.quiet {
                eprintln!("error: {:#}", failure.error);
            }
            ExitCode::from(failure.code)
        }
    }
}
