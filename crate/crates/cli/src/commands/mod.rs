//! One module per subcommand. Each writes its outputs and a
//! `<command>_manifest.json` next to them.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::args::{Command, ReplayArgs};
use crate::error::{CliError, Result};
use crate::manifest::{versions, Check, RunManifest};
use crate::output::{read_json, write_json, OutDir};

pub mod bounds;
pub mod fig2;
pub mod fit;
pub mod gaussians25;
pub mod landscape;
pub mod sample;
pub mod table1;

pub fn execute(command: &Command) -> Result<RunManifest> {
    match command {
        Command::Table1(a) => table1::run(a),
        Command::Fig2(a) => fig2::run(a),
        Command::Landscape(a) => landscape::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Bounds(a) => bounds::run(a),
        Command::Gaussians25(a) => gaussians25::run(a),
        Command::Solve(a) => sample::solve(a),
        Command::Sample(a) => sample::run(a),
        Command::Replay(a) => replay(a),
    }
}

/// Path of the manifest `command` writes into `dir`.
pub fn manifest_path(dir: &std::path::Path, command: &str) -> PathBuf {
    dir.join(format!("{command}_manifest.json"))
}

pub(crate) struct Finish<'a, A> {
    pub command: &'a str,
    pub args: &'a A,
    pub seed: Option<u64>,
    pub out: OutDir,
    pub start: Instant,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl<A: Serialize> Finish<'_, A> {
    pub fn write(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.into(),
            config: serde_json::to_value(self.args)?,
            seed: self.seed,
            versions: versions(),
            outputs: self.out.written(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            results: self.results,
            checks: self.checks,
        };
        write_json(&manifest_path(self.out.path(), self.command), &manifest)?;
        Ok(manifest)
    }
}

fn config<T: serde::de::DeserializeOwned>(manifest: &RunManifest) -> Result<T> {
    serde_json::from_value(manifest.config.clone())
        .map_err(|e| CliError::Usage(format!("manifest config for {}: {e}", manifest.command)))
}

fn replay(args: &ReplayArgs) -> Result<RunManifest> {
    let manifest: RunManifest = read_json(&args.manifest)?;
    let mut command = match manifest.command.as_str() {
        "table1" => Command::Table1(config(&manifest)?),
        "fig2" => Command::Fig2(config(&manifest)?),
        "landscape" => Command::Landscape(config(&manifest)?),
        "fit" => Command::Fit(config(&manifest)?),
        "bounds" => Command::Bounds(config(&manifest)?),
        "gaussians25" => Command::Gaussians25(config(&manifest)?),
        "solve" => Command::Solve(config(&manifest)?),
        "sample" => Command::Sample(config(&manifest)?),
        other => return Err(CliError::Usage(format!("cannot replay command {other:?}"))),
    };
    if let Some(out) = &args.out {
        match &mut command {
            Command::Table1(a) => a.out = out.clone(),
            Command::Fig2(a) => a.out = out.clone(),
            Command::Landscape(a) => a.out = out.clone(),
            Command::Fit(a) => a.out = out.clone(),
            Command::Bounds(a) => a.out = out.clone(),
            Command::Gaussians25(a) => a.out = out.clone(),
            Command::Solve(a) => a.out = out.clone(),
            Command::Sample(a) => a.out = out.clone(),
            Command::Replay(_) => unreachable!("replay manifests are never written"),
        }
    }
    execute(&command)
}
