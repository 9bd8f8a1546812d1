//! Output files stamped with the toolkit version and the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const TOOLKIT: &str = "amdim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    toolkit: &'static str,
    version: &'static str,
    config_hash: &'a str,
    result: &'a T,
}

#[derive(Debug, Clone)]
pub struct Sink {
    dir: PathBuf,
    config_hash: String,
}

impl Sink {
    pub fn new(dir: &Path, config_hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Sink { dir: dir.to_path_buf(), config_hash })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let stamped = Stamped { toolkit: TOOLKIT, version: VERSION, config_hash: &self.config_hash, result: value };
        let mut text = serde_json::to_string_pretty(&stamped)?;
        text.push('\n');
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Comma-separated, LF-terminated; the first line is a `#` comment
    /// carrying version and config hash.
    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let mut buf = format!("# {TOOLKIT} {VERSION} config={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        let path = self.path(name);
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
