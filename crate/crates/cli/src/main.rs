use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use volmoe_cli::{cmd_backtest, cmd_classify, cmd_forecast, cmd_report, cmd_synth, parse_config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "volmoe", version, about = "Volatility-regime mixture-of-experts forecaster")]
struct Cli {
    /// Config file (`section.key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic price universe as CSV.
    Synth {
        #[arg(long, default_value = "synthetic.csv")]
        out: PathBuf,
    },
    /// Print the regime of every ticker.
    Classify,
    /// Run the walk-forward and holdout backtest and store records and models.
    Backtest,
    /// Recursive forecast for one ticker from a stored fold.
    Forecast {
        #[arg(long)]
        ticker: String,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// Fold to forecast from; the latest stored fold by default.
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Render tables, summaries and plot data from stored records.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Synth { out: path } => {
            let n = cmd_synth(&cfg, &path)?;
            writeln!(out, "wrote {n} series to {}", path.display())?;
        }
        Command::Classify => {
            cmd_classify(&cfg, &mut out)?;
        }
        Command::Backtest => {
            let files = cmd_backtest(&cfg)?;
            writeln!(out, "fingerprint {} seed {}", cfg.fingerprint(), cfg.seed)?;
            writeln!(out, "{} records -> {}", files.n_records, files.records.display())?;
            writeln!(out, "predictions -> {}", files.predictions.display())?;
            writeln!(out, "regimes -> {}", files.regimes.display())?;
            writeln!(out, "models -> {}", files.models.display())?;
        }
        Command::Forecast { ticker, horizon, fold } => {
            cmd_forecast(&cfg, &ticker, horizon, fold, &mut out)?;
        }
        Command::Report => {
            let text = cmd_report(&cfg)?;
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
