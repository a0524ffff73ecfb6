//! Output files, the run manifest and content hashes.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Config, Resolved};

/// One file of a task's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, body: String) -> Self {
        Artifact {
            name: name.into(),
            body,
        }
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `key=value` lines stamped on every output file.
#[derive(Clone, Debug)]
pub struct Stamp {
    pub config_hash: String,
    pub task: String,
    pub mode: String,
    pub seed: u64,
}

impl Stamp {
    pub fn from_resolved(res: &Resolved) -> Self {
        Stamp {
            config_hash: sha256_hex(res.canonical.as_bytes()),
            task: res.task.name().to_string(),
            mode: res.config.dynamics.mode_name().to_string(),
            seed: res.config.seed,
        }
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("config_hash", self.config_hash.clone()),
            ("task", self.task.clone()),
            ("mode", self.mode.clone()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Prefixes `body` with the stamp as `#` comment lines.
    pub fn comment(&self, body: &str) -> String {
        let mut s = String::new();
        for (k, v) in self.pairs() {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(body);
        s
    }
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct ResolvedModel {
    n_sites: usize,
    node_fields: Vec<f64>,
    double_fields: Vec<f64>,
    couplings: Vec<[f64; 3]>,
    defects: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    task: &'a str,
    mode: &'a str,
    seed: u64,
    version: &'a str,
    files: Vec<FileEntry>,
    model: ResolvedModel,
    config: Config,
}

#[derive(Serialize)]
struct RunInfo {
    unix_time: u64,
    threads: usize,
    output: String,
}

/// Writes the artifacts, `manifest.toml` (deterministic) and
/// `run_info.toml` (timestamp, thread count, output directory).
pub fn write_all(dir: &Path, res: &Resolved, stamp: &Stamp, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.body).with_context(|| format!("writing {}", path.display()))?;
        files.push(FileEntry {
            name: a.name.clone(),
            sha256: sha256_hex(a.body.as_bytes()),
            bytes: a.body.len(),
        });
    }
    let spec = &res.spec;
    let manifest = Manifest {
        config_hash: &stamp.config_hash,
        task: &stamp.task,
        mode: &stamp.mode,
        seed: stamp.seed,
        version: env!("CARGO_PKG_VERSION"),
        files,
        model: ResolvedModel {
            n_sites: spec.n_sites(),
            node_fields: spec.node_fields.clone(),
            double_fields: spec.double_fields.clone(),
            couplings: spec.couplings.clone(),
            defects: spec
                .defects
                .iter()
                .map(|d| format!("{:?}: {}", d.target, d.replacement))
                .collect(),
        },
        config: Config {
            output: None,
            ..res.config.clone()
        },
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    std::fs::write(dir.join("manifest.toml"), text).context("writing manifest.toml")?;
    let info = RunInfo {
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        threads: rayon::current_num_threads(),
        output: dir.display().to_string(),
    };
    std::fs::write(dir.join("run_info.toml"), toml::to_string(&info)?)
        .context("writing run_info.toml")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
