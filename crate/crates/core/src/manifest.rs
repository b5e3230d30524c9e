//! Run manifests: everything needed to regenerate a run's outputs and check
//! them byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_NAME: &str = "tpbsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Run,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    /// Resolved configuration with every default and override applied.
    pub config: String,
    pub base_seed: u64,
    pub svg: bool,
    pub snapshot_states: bool,
    /// Not covered by any digest.
    pub timestamp: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_outputs(outputs: &[(String, String)]) -> Vec<OutputDigest> {
    outputs
        .iter()
        .map(|(file, contents)| OutputDigest {
            file: file.clone(),
            sha256: sha256_hex(contents.as_bytes()),
        })
        .collect()
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Compares regenerated outputs against the recorded digests.
    pub fn verify(&self, regenerated: &[OutputDigest]) -> Result<()> {
        let mut problems = Vec::new();
        for expected in &self.outputs {
            match regenerated.iter().find(|d| d.file == expected.file) {
                None => problems.push(format!("{} was not regenerated", expected.file)),
                Some(d) if d.sha256 != expected.sha256 => problems.push(format!(
                    "{} digest {} does not match recorded {}",
                    expected.file, d.sha256, expected.sha256
                )),
                Some(_) => {}
            }
        }
        for d in regenerated {
            if !self.outputs.iter().any(|e| e.file == d.file) {
                problems.push(format!("{} is not listed in the manifest", d.file));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Verification(problems.join("; ")))
        }
    }
}
