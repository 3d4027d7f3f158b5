mod commands;
mod error;
mod input;
mod output;
mod simulate;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CovtestArgs, DesparsArgs, PathArgs, RefitArgs};
use error::{CliError, Result};
use output::{echoed_command, unix_now, Table, VERSION};
use simulate::SimulateArgs;

#[derive(Parser, Debug)]
#[command(
    name = "covtest",
    version,
    about = "Lasso path significance tests and desparsified lasso inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Knots and events of the lasso path.
    Path(PathArgs),
    /// Covariance test along the path.
    Covtest(CovtestArgs),
    /// Least-squares refit drop along the path.
    Refit(RefitArgs),
    /// Desparsified lasso p-values and confidence intervals.
    Despars(DesparsArgs),
    /// Figure and table scenario runs.
    Simulate(SimulateArgs),
}

fn emit(table: Table, out: Option<&std::path::Path>, command: &str, start: f64) -> Result<()> {
    let text = table.render();
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let manifest = format!(
                "tool: {VERSION}\ncommand: {command}\nstart_unix: {start:.3}\nend_unix: {:.3}\n",
                unix_now()
            );
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.txt");
            std::fs::write(&name, manifest).map_err(CliError::from)
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::from),
    }
}

fn run(cli: Cli, command: &str) -> Result<()> {
    let start = unix_now();
    match &cli.command {
        Command::Path(a) => emit(
            commands::run_path(a, command)?,
            a.data.out.as_deref(),
            command,
            start,
        ),
        Command::Covtest(a) => emit(
            commands::run_covtest(a, command)?,
            a.data.out.as_deref(),
            command,
            start,
        ),
        Command::Refit(a) => emit(
            commands::run_refit(a, command)?,
            a.data.out.as_deref(),
            command,
            start,
        ),
        Command::Despars(a) => emit(
            commands::run_despars(a, command)?,
            a.data.out.as_deref(),
            command,
            start,
        ),
        Command::Simulate(a) => simulate::run_simulate(a, command),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let command = echoed_command(&args);
    match run(cli, &command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
