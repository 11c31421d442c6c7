//! `crn-sim` command line.
//!
//! Exit codes: 0 on success, 1 when `run` ends without a deal, 2 on usage,
//! scenario or I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Parser, Subcommand};

use crate::engine::{run_negotiation, NegotiationOutcome, OutcomeStatus};
use crate::evaluation::{cost_csv, elapsed_csv, sweep_num_pus, sweep_success_rate};
use crate::scenario::{parse_scenario, write_trace, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_DEAL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "crn-sim",
    version,
    about = "One-to-many spectrum negotiation simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one negotiation and print its outcome.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the sniffer trace (JSON Lines) here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// SU response time for the first 1..=n PUs of a scenario.
    SweepPus {
        #[arg(long)]
        scenario: PathBuf,
        /// Defaults to every PU in the scenario.
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// SU spend at success rates 0%, 10%, ..., 100%.
    SweepCost {
        #[arg(long = "p-success", default_value_t = 100)]
        p_success: u64,
        #[arg(long = "p-fail", default_value_t = 500)]
        p_fail: u64,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_ERROR
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn load(path: &Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, String> {
    match command {
        Command::Run { scenario, trace } => {
            let scenario = load(&scenario)?;
            let run = run_negotiation(&scenario).map_err(|e| e.to_string())?;
            if let Some(path) = trace {
                let file =
                    fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                write_trace(&run.trace, std::io::BufWriter::new(file))
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            out.write_all(summary(&run.outcome).as_bytes())
                .map_err(|e| e.to_string())?;
            Ok(if run.outcome.is_success() {
                EXIT_OK
            } else {
                EXIT_NO_DEAL
            })
        }
        Command::SweepPus {
            scenario,
            n_max,
            csv,
        } => {
            let scenario = load(&scenario)?;
            let n_max = n_max.unwrap_or(scenario.pus.len());
            let rows = sweep_num_pus(&scenario, n_max).map_err(|e| e.to_string())?;
            emit(&elapsed_csv(&rows), csv.as_deref(), out)?;
            Ok(EXIT_OK)
        }
        Command::SweepCost {
            p_success,
            p_fail,
            runs,
            csv,
        } => {
            let rows = sweep_success_rate(p_success, p_fail, runs).map_err(|e| e.to_string())?;
            emit(&cost_csv(&rows), csv.as_deref(), out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Human-readable outcome, one `key: value` per line.
pub fn summary(outcome: &NegotiationOutcome) -> String {
    let mut s = String::new();
    match outcome.status {
        OutcomeStatus::Success {
            winner,
            unit_price,
            amount_paid,
        } => {
            s.push_str("status: success\n");
            s.push_str(&format!("winner: {winner}\n"));
            s.push_str(&format!("unit_price: {unit_price}\n"));
            s.push_str(&format!("amount_paid: {amount_paid}\n"));
        }
        OutcomeStatus::Failure => s.push_str("status: failure (no PU can satisfy the demand)\n"),
    }
    s.push_str(&format!("responses: {}\n", outcome.responses));
    s.push_str(&format!("elapsed: {}\n", outcome.elapsed));
    s.push_str(&format!("message_count: {}\n", outcome.message_count));
    s
}
