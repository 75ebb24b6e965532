use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Written next to every run's outputs. Contains no clock or host data, so
/// equal inputs give an equal manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub engine_version: String,
    /// Role to path, e.g. `events`.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of each input's bytes, keyed like `inputs`.
    pub input_sha256: BTreeMap<String, String>,
    pub config: Option<String>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            engine_version: fisc_core::ENGINE_VERSION.into(),
            inputs: BTreeMap::new(),
            input_sha256: BTreeMap::new(),
            config: None,
            config_sha256: None,
            seed: None,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.insert(role.into(), path.display().to_string());
        self.input_sha256.insert(role.into(), fisc_core::ledger::sha256(bytes).to_hex());
    }

    pub fn config(&mut self, path: &Path, bytes: &[u8]) {
        self.config = Some(path.display().to_string());
        self.config_sha256 = Some(fisc_core::ledger::sha256(bytes).to_hex());
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }
}

/// Collects output files, then writes them and the manifest.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        OutputSet { dir: dir.into(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn write(self, mut manifest: RunManifest) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        manifest.outputs.push("manifest.json".into());
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        }
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))
    }
}
