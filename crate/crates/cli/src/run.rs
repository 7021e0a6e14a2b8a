use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: Option<u64>,
    config: &'a C,
    inputs: &'a [InputRecord],
    outputs: &'a [OutputRecord],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Tracks inputs read and files written by one subcommand.
pub struct Run {
    subcommand: &'static str,
    out: PathBuf,
    inputs: Vec<InputRecord>,
    input_paths: Vec<PathBuf>,
    outputs: Vec<OutputRecord>,
}

impl Run {
    pub fn new(subcommand: &'static str, out: &Path) -> Self {
        Run {
            subcommand,
            out: out.to_path_buf(),
            inputs: Vec::new(),
            input_paths: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Fails with the path when the file is absent.
    pub fn require(role: &str, path: &Path) -> CliResult<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(CliError::MissingInput {
                role: role.to_string(),
                path: path.to_path_buf(),
            })
        }
    }

    /// Reads an input and records its hash.
    pub fn read(&mut self, role: &str, path: &Path) -> CliResult<Vec<u8>> {
        Self::require(role, path)?;
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(InputRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        self.input_paths
            .push(fs::canonicalize(path).map_err(|e| CliError::io(path, e))?);
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join(name);
        if let Ok(canon) = fs::canonicalize(&path) {
            if self.input_paths.contains(&canon) {
                return Err(CliError::WouldOverwriteInput(path));
            }
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record_output(name, bytes);
        Ok(path)
    }

    fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn finish<C: Serialize>(mut self, seed: Option<u64>, config: &C) -> CliResult<()> {
        self.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            tool: "metaeng",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            seed,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}
