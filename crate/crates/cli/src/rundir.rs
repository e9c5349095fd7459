//! Self-describing run directories.
//!
//! Every command materializes its outputs under `<run_root>/<name>` next
//! to a snapshot of the configuration that produced them and a
//! `digests.txt` manifest of SHA-256 hashes over the inputs it read and
//! the files it wrote. Two runs produced the same way are byte-identical
//! exactly when their digest files are.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use gaze_zsl::{Error, Result};

use crate::config::RunConfig;

pub struct RunDir {
    path: PathBuf,
    entries: Vec<(String, String)>,
}

impl RunDir {
    /// Creates (or reuses) `<root>/<name>` and snapshots the merged
    /// configuration into it as `config.toml`.
    pub fn create(root: &Path, name: &str, config: &RunConfig) -> Result<RunDir> {
        let path = root.join(name);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        let mut dir = RunDir {
            path,
            entries: Vec::new(),
        };
        let snapshot = toml::to_string_pretty(config)
            .map_err(|e| Error::invalid("config snapshot", e.to_string()))?;
        dir.write("config.toml", &snapshot)?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes a text file into the run directory and records its digest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.entries.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// Records the digest of an existing file (an input read or an output
    /// another writer produced) under `label`.
    pub fn record(&mut self, label: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.entries.push((label.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    /// Writes `digests.txt`: one `<sha256>  <label>` line per entry,
    /// sorted by label. Duplicate labels are rejected; they would make
    /// the manifest ambiguous.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.entries.sort();
        for pair in self.entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::invalid(
                    "run dir",
                    format!("duplicate digest label '{}'", pair[0].0),
                ));
            }
        }
        let mut out = String::new();
        for (label, digest) in &self.entries {
            out.push_str(digest);
            out.push_str("  ");
            out.push_str(label);
            out.push('\n');
        }
        let path = self.path.join("digests.txt");
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        Ok(self.path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
