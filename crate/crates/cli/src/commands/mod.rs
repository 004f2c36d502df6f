pub mod analyze;
pub mod cluster;
pub mod fit;
pub mod ingest;
pub mod simulate;

use std::path::PathBuf;

use crate::args::Command;
use crate::error::CliError;
use crate::output::Outputs;

/// Files written by a command and the name of its manifest.
pub struct Finished {
    pub outputs: Outputs,
    pub manifest: PathBuf,
}

pub fn run(command: &Command) -> Result<Finished, CliError> {
    match command {
        Command::Ingest(a) => ingest::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Cluster(a) => cluster::run(a),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}
