//! Command-line front end: signal generation, offline and streaming
//! decomposition, and artifact export.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;

use std::io::{BufRead, Write};

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::artifacts::RunManifest;
use crate::error::{CliError, CliResult};

/// Runs the CLI on `argv` (program name excluded) and returns the exit code.
pub fn run(
    argv: &[String],
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("stvmd".to_string()).chain(argv.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(cli.command, argv, stdin, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn execute(
    command: Command,
    argv: &[String],
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    match command {
        Command::Generate(a) => commands::generate(&a, argv, stdout),
        Command::Decompose(a) => commands::decompose(&a, argv, stdout, stderr),
        Command::Stream(a) => commands::stream(&a, stdin, stdout, stderr),
        Command::BenchTable2(a) => commands::bench_table2(&a, argv, stdout),
        Command::Replay(a) => {
            let manifest = RunManifest::load(&a.manifest)?;
            let replay = manifest.replay_argv(a.out.as_deref());
            if replay.first().map(String::as_str) == Some("replay") {
                return Err(CliError::Usage("manifest records a replay".into()));
            }
            let cli = Cli::try_parse_from(std::iter::once("stvmd".to_string()).chain(replay.iter().cloned()))
                .map_err(|e| CliError::Usage(format!("manifest arguments: {e}")))?;
            execute(cli.command, &replay, stdin, stdout, stderr)
        }
    }
}
