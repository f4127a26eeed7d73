use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gwi_core::ModelFile;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Sidecar written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub model_path: PathBuf,
    /// Coefficients as loaded, so a manifest is self-contained.
    pub model: ModelFile,
    pub knobs: BTreeMap<String, Value>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn write(&self, output: &Path) -> Result<(), CliError> {
        let path = sidecar_path(output);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }

    pub fn read_for(output: &Path) -> Result<Self, CliError> {
        let path = sidecar_path(output);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}
