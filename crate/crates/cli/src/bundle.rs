//! Output directories: every artifact is listed in `manifest.sha256`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Result;

pub struct Bundle {
    dir: PathBuf,
    files: Vec<String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.path(name), contents)?;
        self.record(name);
        Ok(())
    }

    /// Register a file written directly under the bundle directory.
    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    /// Write `metadata.json` and the manifest; returns the manifest path.
    pub fn finish(mut self, metadata: Map<String, Value>) -> Result<PathBuf> {
        let mut meta = metadata;
        meta.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        let text = serde_json::to_string_pretty(&Value::Object(meta)).expect("metadata serializes") + "\n";
        self.write("metadata.json", text)?;
        self.files.sort();
        let mut manifest = String::new();
        for name in &self.files {
            let digest = Sha256::digest(fs::read(self.path(name))?);
            manifest.push_str(&format!("{digest:x}  {name}\n"));
        }
        let path = self.path("manifest.sha256");
        fs::write(&path, manifest)?;
        Ok(path)
    }
}

/// Config entries as a JSON object, in key order.
pub fn config_json(cfg: &superchain::config::KeyValueConfig) -> Value {
    Value::Object(cfg.iter().map(|(k, v)| (k.to_string(), Value::from(v))).collect())
}
