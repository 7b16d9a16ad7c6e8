use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tagging_game::design::{DesignKnobs, MechanismDesign};
use tagging_game::model::{DesignTarget, SystemParams};

/// Design output, also the input of `verify-ne`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignBundle {
    #[serde(flatten)]
    pub design: MechanismDesign,
    pub system: SystemParams,
    pub knobs: DesignKnobs,
    /// SHA-256 of the JSON encoding of `(system, target)`.
    pub params_hash: String,
}

pub fn params_hash(system: &SystemParams, target: &DesignTarget) -> String {
    let text = serde_json::to_string(&(system, target)).expect("parameters serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Everything needed to rerun a command and get the same output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub argv: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub system: Option<SystemParams>,
    pub target: Option<DesignTarget>,
    pub knobs: Option<DesignKnobs>,
    pub seeds: Vec<u64>,
    pub rng: Option<String>,
    pub outputs: Vec<PathBuf>,
    /// Command-specific resolved settings.
    pub resolved: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            argv: std::env::args().collect(),
            config_path: None,
            system: None,
            target: None,
            knobs: None,
            seeds: Vec::new(),
            rng: None,
            outputs: Vec::new(),
            resolved: serde_json::Value::Null,
        }
    }

    /// Writes `<out>.manifest.json` next to `out`.
    pub fn write_beside(&mut self, out: &Path) -> Result<PathBuf> {
        self.outputs = vec![out.to_path_buf()];
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// 17 significant digits, enough to recover the exact `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
