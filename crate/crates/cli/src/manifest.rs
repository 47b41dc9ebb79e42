//! Output directory handling. Every command that writes files also writes
//! `manifest.json` next to them, holding the resolved configuration so the
//! outputs can be regenerated from the manifest alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub outputs: Vec<PathBuf>,
    /// Command-line overrides applied on top of the file.
    pub flags: Vec<String>,
    /// The configuration after applying every override.
    pub resolved_config: RunConfig,
}

/// Collects files written into one output directory.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(write_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(write_err(&path))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest last, listing every file written before it.
    pub fn finish(
        mut self,
        command: &str,
        config_path: Option<&Path>,
        seed: Option<u64>,
        flags: Vec<String>,
        resolved_config: RunConfig,
    ) -> Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.written.clone(),
            flags,
            resolved_config,
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(self.written)
    }
}
