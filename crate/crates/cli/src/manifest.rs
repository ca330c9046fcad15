//! Run manifests: every subcommand writes one next to its outputs, carrying
//! the fully resolved configuration and an equivalent argv, so any output can
//! be regenerated from the manifest alone.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    /// Fully resolved configuration, defaults materialized.
    pub config: serde_json::Value,
    /// Re-running the binary with these arguments reproduces the outputs
    /// byte for byte (SVG content-identical).
    pub argv: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: serde_json::Value, argv: Vec<String>) -> Self {
        RunManifest {
            tool: "spacorr".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            seed,
            config,
            argv,
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest.json", self.subcommand));
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, body + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn write_text(manifest: Option<&mut RunManifest>, path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    if let Some(m) = manifest {
        m.record(path);
    }
    Ok(())
}

pub fn write_json<T: Serialize>(manifest: Option<&mut RunManifest>, path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)?;
    write_text(manifest, path, &(body + "\n"))
}

pub fn write_csv_rows(manifest: Option<&mut RunManifest>, path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut body = String::new();
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write_text(manifest, path, &body)
}
