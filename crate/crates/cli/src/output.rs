//! Output files: the run manifest and CSV/JSON tables that point back to it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything that determines the data a command writes. Hashing this gives
/// the manifest id, so two invocations with the same inputs share an id.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestInputs {
    pub command: String,
    /// Canonical TOML of the parsed scenario (after flag overrides).
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub format: Format,
    pub trace: bool,
    pub options: serde_json::Value,
}

impl ManifestInputs {
    pub fn id(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("manifest inputs serialize");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub id: String,
    pub tool_version: &'static str,
    pub scenario_path: Option<String>,
    #[serde(flatten)]
    pub inputs: &'a ManifestInputs,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

/// Writes tables into one output directory, all tagged with the same id.
pub struct OutputDir {
    dir: PathBuf,
    pub manifest_id: String,
    pub format: Format,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest_id: String, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            manifest_id,
            format,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Table `stem` in the configured format.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let bytes = match self.format {
            Format::Csv => csv_bytes(&self.manifest_id, rows)?,
            Format::Json => {
                #[derive(Serialize)]
                struct Doc<'a, T> {
                    manifest: &'a str,
                    rows: &'a [T],
                }
                let doc = Doc {
                    manifest: &self.manifest_id,
                    rows,
                };
                let mut v = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
                v.push(b'\n');
                v
            }
        };
        self.file(&format!("{stem}.{}", self.format.extension()), &bytes)
    }

    /// A raw file (relative name); parent directories are created.
    pub fn file(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_manifest(&self, inputs: &ManifestInputs, scenario_path: Option<&Path>, wall_clock_s: f64) -> Result<PathBuf, CliError> {
        let m = Manifest {
            id: self.manifest_id.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            scenario_path: scenario_path.map(|p| p.display().to_string()),
            inputs,
            outputs: self.written.clone(),
            wall_clock_s,
        };
        let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// CSV text with a leading `# manifest=<id>` line.
pub fn csv_bytes<T: Serialize>(manifest_id: &str, rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = format!("# manifest={manifest_id}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Internal(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| CliError::Internal(format!("csv: {e}")))?;
    }
    Ok(out)
}

/// Reads a CSV written by [`csv_bytes`], skipping the manifest line.
pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(String, Vec<T>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let id = first
        .strip_prefix("# manifest=")
        .ok_or_else(|| CliError::Input(format!("{}: missing manifest line", path.display())))?
        .to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let rows = r
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((id, rows))
}
