//! Run manifests: the reproducibility record written at the end of every
//! CLI run, successful or not. Data outputs of identical configs are
//! byte-identical; manifests differ only in timing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::errors::Result;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub resolved_config: serde_json::Value,
    /// sha256 of every input file, keyed by its path as given.
    pub input_hashes: BTreeMap<String, String>,
    pub output_files: Vec<String>,
    pub duration_seconds: f64,
    /// t_final_reached, big_rip, unphysical, numerical_instability,
    /// validation_error, or error.
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted_step: Option<usize>,
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(hex::encode(digest))
}

impl RunManifest {
    /// Write atomically: serialize to a temp file in the target directory,
    /// then rename over the destination.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::errors::Error::Format(e.to_string()))?;
        let tmp: PathBuf = path.with_extension("json.tmp");
        std::fs::write(&tmp, json)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_write_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.txt");
        std::fs::write(&input, "data").unwrap();
        let h = sha256_file(&input).unwrap();
        assert_eq!(h.len(), 64);

        let mut hashes = BTreeMap::new();
        hashes.insert("input.txt".to_string(), h);
        let m = RunManifest {
            tool_version: tool_version(),
            experiment: "evolve".into(),
            resolved_config: serde_json::json!({"experiment": "evolve"}),
            input_hashes: hashes,
            output_files: vec!["trajectory.csv".into()],
            duration_seconds: 0.5,
            termination: "t_final_reached".into(),
            aborted_step: None,
        };
        let path = dir.path().join("manifest.json");
        m.write_atomic(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("t_final_reached"));
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }
}
