use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA: &str = "csskit.manifest.v1";

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Timing {
    pub phase: &'static str,
    pub seconds: f64,
}

/// Everything needed to re-run a command: its flags, seeds, library version
/// and input digests. Only `timings` differs between identical runs.
#[derive(Serialize)]
pub struct RunManifest<'a, A: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub version: &'static str,
    pub flags: &'a A,
    pub seeds: BTreeMap<&'static str, u64>,
    pub threads: usize,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub timings: Vec<Timing>,
}

/// Input file read once, with its digest kept for the manifest.
pub struct Input {
    pub bytes: Vec<u8>,
    pub digest: InputDigest,
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Input {
        bytes,
        digest: InputDigest {
            path: path.display().to_string(),
            sha256,
        },
    })
}

/// Wall-clock phases of a run.
pub struct Clock {
    start: Instant,
    last: Instant,
    pub timings: Vec<Timing>,
}

impl Clock {
    pub fn start() -> Self {
        let now = Instant::now();
        Clock {
            start: now,
            last: now,
            timings: Vec::new(),
        }
    }

    pub fn lap(&mut self, phase: &'static str) {
        let now = Instant::now();
        self.timings.push(Timing {
            phase,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }

    pub fn finish(mut self) -> Vec<Timing> {
        self.timings.push(Timing {
            phase: "total",
            seconds: self.start.elapsed().as_secs_f64(),
        });
        self.timings
    }
}

/// `<path>.<suffix>` next to an output file.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(format!("json: {e}")))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Compute(format!("io: cannot write {}: {e}", path.display())))
}
