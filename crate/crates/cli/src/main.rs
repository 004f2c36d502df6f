mod args;
mod commands;
mod error;
mod load;
mod manifest;
mod output;
mod svg;

use std::path::{absolute, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;
use manifest::RunManifest;

fn absolutize(path: &mut PathBuf) -> Result<(), CliError> {
    *path = absolute(&*path)?;
    Ok(())
}

/// Runs `command`, writing its manifest next to its outputs.
fn execute(mut command: Command) -> Result<(), CliError> {
    for input in command.inputs_mut() {
        absolutize(input)?;
    }
    if let Some(dir) = command.out_dir_mut() {
        absolutize(dir)?;
    }
    let finished = commands::run(&command)?;
    let manifest = RunManifest::new(&command, finished.outputs.paths.clone());
    manifest.write(&finished.manifest)?;
    for path in &finished.outputs.paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn replay(manifest: PathBuf, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut recorded = RunManifest::read(&manifest)?;
    if let (Some(dir), Some(target)) = (out_dir, recorded.invocation.out_dir_mut()) {
        *target = dir;
    }
    execute(recorded.invocation)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Replay(a) => replay(a.manifest, a.out_dir),
        other => execute(other),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
