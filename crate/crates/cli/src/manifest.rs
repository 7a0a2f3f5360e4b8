//! Output files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files under one directory and records their digests.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    prefix: String,
    digests: BTreeMap<String, String>,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path, prefix: &str) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), prefix: prefix.to_string(), digests: BTreeMap::new(), written: Vec::new() })
    }

    pub fn file_name(&self, stem: &str, ext: &str) -> String {
        format!("{}_{stem}.{ext}", self.prefix)
    }

    /// Renders `stem` into memory, then writes it and records its SHA-256.
    pub fn write<F>(&mut self, stem: &str, render: F) -> io::Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let name = self.file_name(stem, "csv");
        let mut buf = Vec::new();
        render(&mut buf)?;
        let path = self.dir.join(&name);
        fs::write(&path, &buf)?;
        self.digests.insert(name, sha256_hex(&buf));
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Everything needed to regenerate the outputs of one command.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub family: String,
    pub seed: u64,
    pub paths: usize,
    pub config: String,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub termination: String,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let v = json!({
            "command": self.command,
            "version": self.version,
            "family": self.family,
            "seed": self.seed,
            "paths": self.paths,
            "config": self.config,
            "started_unix": self.started_unix,
            "wall_clock_seconds": self.wall_clock_seconds,
            "termination": self.termination,
            "outputs": self.outputs,
            "reproduce": format!(
                "ranksde --config <config> --seed {} --paths {} {}",
                self.seed, self.paths, self.command
            ),
        });
        let mut s = serde_json::to_string_pretty(&v).expect("manifest serialises");
        s.push('\n');
        s
    }
}

/// Wall-clock bookkeeping for a command.
pub struct Clock {
    started: SystemTime,
    timer: Instant,
}

impl Clock {
    pub fn start() -> Self {
        Self { started: SystemTime::now(), timer: Instant::now() }
    }

    pub fn manifest(&self, command: &str, config: &RunConfig, outputs: &Outputs, termination: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            family: config.model.family().to_string(),
            seed: config.sim.seed,
            paths: config.analysis.paths,
            config: config.source.clone(),
            started_unix: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            wall_clock_seconds: self.timer.elapsed().as_secs_f64(),
            termination: termination.to_string(),
            outputs: outputs.digests().clone(),
        }
    }
}

/// Writes `manifest` next to the outputs as `<prefix>_<command>_manifest.json`.
pub fn write_manifest(outputs: &Outputs, manifest: &RunManifest) -> io::Result<PathBuf> {
    let path = outputs.dir().join(outputs.file_name(&format!("{}_manifest", manifest.command), "json"));
    let mut f = fs::File::create(&path)?;
    f.write_all(manifest.to_json().as_bytes())?;
    Ok(path)
}
