//! File emission. Everything is written from the calling thread.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::setup::Resolution;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(OutputDir {
            root,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Header row followed by one record per row.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Metadata written next to every result. The `config` member can be fed
/// back to the loader to repeat the run.
#[derive(Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub experiment: &'static str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<&'a Resolution>,
    pub result: T,
}

impl<'a, T: Serialize> Sidecar<'a, T> {
    pub fn new(experiment: &'static str, config: &'a ExperimentConfig, resolution: Option<&'a Resolution>, result: T) -> Self {
        Sidecar {
            experiment,
            version: env!("CARGO_PKG_VERSION"),
            config,
            resolution,
            result,
        }
    }
}
