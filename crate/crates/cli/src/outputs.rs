//! Output files are assembled in memory and written together, followed by a
//! manifest of their SHA-256 hashes. Nothing is written if an earlier step
//! fails, and the manifest is only written after every file landed.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Serialize)]
struct Entry {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    files: Vec<Entry>,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    /// Adds a file produced by a writer callback.
    pub fn add_with(
        &mut self,
        name: impl Into<String>,
        write: impl FnOnce(&mut Vec<u8>) -> thzkit::Result<()>,
    ) -> Outcome {
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        self.add(name, bytes);
        Ok(())
    }

    /// Writes every file and then `manifest_name`; prints the paths.
    pub fn commit(self, command: &str, manifest_name: &str) -> Outcome {
        std::fs::create_dir_all(&self.dir).map_err(|e| Failure::io(&self.dir, e))?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
            entries.push(Entry { path: name.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        }
        let manifest = Manifest { command, files: entries };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        let path = self.dir.join(manifest_name);
        std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        for (name, _) in &self.files {
            println!("wrote {}", self.dir.join(name).display());
        }
        println!("wrote {}", path.display());
        Ok(())
    }
}
