//! Output files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chaos_market_core::export::CsvTable;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::CommandKind;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, table: &CsvTable) -> Self {
        Self {
            name: name.into(),
            contents: table.to_string(),
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let mut contents = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numeric(format!("cannot encode JSON: {e}")))?;
        contents.push('\n');
        Ok(Self {
            name: name.into(),
            contents,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub command: CommandKind,
    pub preset: Option<&'a str>,
    pub figure: Option<&'a str>,
    pub seed: u64,
    pub files: Vec<String>,
    pub config: &'a RunConfig,
}

/// Numbers in file names: shortest round-trip form.
pub fn tag(x: f64) -> String {
    format!("{x}")
}

/// Write each file to a temporary sibling and rename it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(contents.as_bytes())
        .and_then(|_| file.sync_all())
        .map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))?;
    Ok(target)
}

pub fn write_outputs(dir: &Path, artifacts: &[Artifact], manifest: &Manifest<'_>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        written.push(write_atomic(dir, &a.name, &a.contents)?);
    }
    let m = Artifact::json(MANIFEST_NAME, manifest)?;
    written.push(write_atomic(dir, &m.name, &m.contents)?);
    Ok(written)
}
