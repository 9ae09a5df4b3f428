use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::io::write_atomic;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub dry_run: bool,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub exit_code: u8,
    pub started_unix_s: f64,
    pub duration_s: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory plus the record of everything written to it.
pub struct Run {
    out_dir: PathBuf,
    dry_run: bool,
    command: String,
    parameters: serde_json::Value,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    pub fn new(out_dir: &Path, dry_run: bool, command: &str, parameters: serde_json::Value) -> CliResult<Self> {
        if !dry_run {
            std::fs::create_dir_all(out_dir)
                .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
        }
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            dry_run,
            command: command.to_string(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    pub fn dry_run(&self) -> bool {
        self.dry_run
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileRecord {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }

    /// Writes `name` under the output directory and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(FileRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self, exit_code: u8) -> CliResult<()> {
        let m = RunManifest {
            tool: "cicdec",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            parameters: self.parameters,
            dry_run: self.dry_run,
            inputs: self.inputs,
            outputs: self.outputs,
            exit_code,
            started_unix_s: self.started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            duration_s: self.clock.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_vec_pretty(&m).expect("manifest serializes");
        if self.dry_run {
            std::fs::create_dir_all(&self.out_dir)
                .map_err(|e| CliError::io(format!("creating {}", self.out_dir.display()), e))?;
        }
        write_atomic(&self.out_dir.join(MANIFEST_NAME), &json)
    }
}
