//! Writing command outputs and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::OutputFile;
use crate::error::Result;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// Hash of the resolved configuration together with the seed.
    pub config_sha256: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Manifest {
    pub fn new(
        command: &str,
        config_path: Option<&Path>,
        config_sha256: String,
        seed: u64,
        started: DateTime<Utc>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            config_sha256,
            seed,
            started_at: timestamp(started),
            finished_at: String::new(),
            files: Vec::new(),
        }
    }
}

/// Write `files` into `dir`, then the manifest describing them.
pub fn write_outputs(dir: &Path, files: &[OutputFile], mut manifest: Manifest) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    for f in files {
        fs::write(dir.join(&f.name), &f.bytes)?;
        manifest.files.push(FileEntry {
            name: f.name.clone(),
            sha256: sha256_hex(&f.bytes),
            bytes: f.bytes.len(),
        });
    }
    manifest.finished_at = timestamp(Utc::now());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_NAME), json + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![OutputFile {
            name: "a.csv".into(),
            bytes: b"x,y\n1,2\n".to_vec(),
        }];
        let m = write_outputs(
            dir.path(),
            &files,
            Manifest::new("budget", None, "h".into(), 3, Utc::now()),
        )
        .unwrap();
        assert_eq!(m.files[0].sha256, sha256_hex(b"x,y\n1,2\n"));
        let back: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap())
                .unwrap();
        assert_eq!(back, m);
    }
}
