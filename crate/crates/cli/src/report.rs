//! Output directories and run manifests.
//!
//! Every command writes its data files plus exactly one `manifest.json`
//! naming them. Data files carry no timestamps, so re-running an identical
//! configuration reproduces them byte for byte; the manifest's wall time is
//! the one field that varies between runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest (which names every file, itself included) and
    /// returns the list of files produced.
    pub fn finish(
        mut self,
        command: &str,
        config: &BTreeMap<String, String>,
        input_hash: u64,
    ) -> Result<Vec<String>> {
        self.files.push("manifest.json".to_string());
        let manifest = json!({
            "command": command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "precision_mode": "binary64",
            "config": config,
            "input_hash": format!("{input_hash:016x}"),
            "outputs": self.files,
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        });
        let path = self.root.join("manifest.json");
        std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&manifest)?))
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(self.files)
    }
}

/// FNV-1a hash of the inputs that define a run.
pub fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for b in part.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
