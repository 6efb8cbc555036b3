//! Output directory bookkeeping and the JSON run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub status: String,
    pub error: Option<String>,
    pub duration_seconds: f64,
    /// Headline numbers of the run, experiment specific.
    pub results: serde_json::Value,
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn read(dir: &Path) -> io::Result<RunManifest> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Files whose current content no longer matches the recorded digest.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(bytes) => sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes artifacts into one directory and remembers their digests.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Outputs {
    pub fn create(dir: &Path) -> io::Result<Outputs> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> io::Result<PathBuf> {
        let bytes = contents.as_ref();
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileDigest { path: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn files(&self) -> &[FileDigest] {
        &self.files
    }

    pub fn into_files(self) -> Vec<FileDigest> {
        self.files
    }
}
