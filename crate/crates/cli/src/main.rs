//! `tcsl` binary: argument parsing and exit-code policy. All real work
//! lives in the library so it stays testable.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tcsl_cli::commands::{self, GlobalOpts, SimulateArgs};
use tcsl_cli::CliError;
use tcsl_core::{RunFormat, TieMode, TiePolicy};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TieArg {
    /// Average the tied models' size and depth.
    Mean,
    /// Keep the largest tied model.
    Larger,
    /// Keep the smallest tied model.
    Smaller,
    /// Drop the tied budget from law fits.
    Exclude,
}

impl From<TieArg> for TieMode {
    fn from(arg: TieArg) -> TieMode {
        match arg {
            TieArg::Mean => TieMode::ArithmeticMean,
            TieArg::Larger => TieMode::PickLarger,
            TieArg::Smaller => TieMode::PickSmaller,
            TieArg::Exclude => TieMode::ExcludeBudget,
        }
    }
}

/// Time-constrained scaling toolkit: fit wall-clock scaling laws, classify
/// budget regimes, plan model sizes, and simulate the loss mechanism.
#[derive(Debug, Parser)]
#[command(name = "tcsl", version, max_term_width = 100)]
struct Cli {
    /// Run data: "embedded" for the built-in reference dataset, or a path
    /// to a .csv/.json runs file.
    #[arg(long, global = true, default_value = "embedded")]
    input: String,

    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Format for data outputs (fit tables, simulated grids).
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// How within-epsilon loss ties are resolved at a budget.
    #[arg(long, global = true, value_enum, default_value_t = TieArg::Mean)]
    tie: TieArg,

    /// Seed for all randomized procedures (bootstrap, calibration).
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Hardware profile: "rtx4090" or a path to a profile JSON file.
    #[arg(long, global = true, default_value = "rtx4090")]
    hardware: String,

    /// Machine-readable output where a command supports it.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full analysis: report.json, report.csv, and four SVG charts.
    Analyze,
    /// Fit the scaling laws and print them.
    Fit,
    /// Recommend a model size for a wall-clock budget.
    Plan {
        /// Budget as minutes or with a suffix: "90", "30m", "8h".
        #[arg(long)]
        budget: String,
    },
    /// Run the mechanistic loss simulator, or calibrate it.
    Simulate {
        /// Simulator parameter JSON file (shipped defaults when omitted).
        #[arg(long)]
        params: Option<String>,
        /// Comma-separated budgets ("5m,2h,1440"); reference ladder when
        /// omitted.
        #[arg(long)]
        budgets: Option<String>,
        /// Output file for the simulated grid (format from extension).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Calibrate against "embedded" or a runs file instead of sweeping.
        #[arg(long)]
        calibrate: Option<String>,
        /// Calibration iteration cap.
        #[arg(long, default_value_t = 4000)]
        max_iters: usize,
    },
    /// Print the full analysis as sectioned text.
    Report,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let opts = GlobalOpts {
        input: cli.input,
        output_dir: cli.output_dir,
        format: match cli.format {
            FormatArg::Json => RunFormat::Json,
            FormatArg::Csv => RunFormat::Csv,
        },
        tie: TiePolicy::new(cli.tie.into(), tcsl_core::DEFAULT_EPSILON_BPB)
            .expect("default epsilon is valid"),
        seed: cli.seed,
        hardware: cli.hardware,
        json: cli.json,
    };
    match cli.command {
        Command::Analyze => commands::cmd_analyze(&opts),
        Command::Fit => commands::cmd_fit(&opts),
        Command::Plan { budget } => commands::cmd_plan(&opts, &budget),
        Command::Simulate {
            params,
            budgets,
            out,
            calibrate,
            max_iters,
        } => commands::cmd_simulate(
            &opts,
            &SimulateArgs {
                params,
                budgets,
                out,
                calibrate,
                max_iters,
            },
        ),
        Command::Report => commands::cmd_report(&opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
