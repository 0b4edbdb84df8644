mod args;
mod commands;
mod config;
mod dist;
mod error;
mod output;
mod poly;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use error::CliError;

const EXIT_INVARIANT: u8 = 2;

fn default_format(cmd: &Command) -> Format {
    match cmd {
        Command::Monotonicity(_) | Command::Density(_) => Format::Csv,
        _ => Format::Json,
    }
}

fn run(argv: Vec<OsString>) -> Result<u8, CliError> {
    let argv = config::expand(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(0);
        }
        Err(e) => {
            let _ = e.print();
            return Ok(error::EXIT_USAGE);
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return error::usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut config = serde_json::to_value(&cli).expect("arguments serialize");
    if let Some(global) = config.get_mut("global").and_then(|g| g.as_object_mut()) {
        global.remove("output");
    }
    let report = commands::run(&cli, config)?;
    let text = report.render(cli.global.format.unwrap_or_else(|| default_format(&cli.command)));
    match &cli.global.output {
        Some(path) => std::fs::write(path, text)?,
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        },
    }
    Ok(if report.pass { 0 } else { EXIT_INVARIANT })
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("freeprob: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
