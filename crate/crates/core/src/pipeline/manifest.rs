//! Run manifest: per-stage input, configuration and output digests.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: String,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
}

/// Stage records with paths relative to the output root.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    root: PathBuf,
    config_digest: String,
    stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn new(root: &Path, config_text: &str) -> Self {
        Self {
            root: root.to_path_buf(),
            config_digest: sha256_hex(config_text.as_bytes()),
            stages: Vec::new(),
        }
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    fn rel(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).display().to_string()
    }

    /// Digest `inputs` and `outputs` and append a stage record.
    pub fn record(&mut self, stage: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
        let digest = |ps: &[PathBuf]| -> Result<Vec<(String, String)>> {
            ps.iter().map(|p| Ok((self.rel(p), sha256_file(p)?))).collect()
        };
        let rec = StageRecord {
            stage: stage.to_string(),
            inputs: digest(inputs)?,
            outputs: digest(outputs)?,
        };
        self.stages.push(rec);
        Ok(())
    }

    pub fn stages(&self) -> &[StageRecord] {
        &self.stages
    }

    /// `stage,role,path,sha256` rows; each stage also lists the config digest.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for s in &self.stages {
            rows.push(vec![s.stage.clone(), "config".into(), "config.txt".into(), self.config_digest.clone()]);
            for (role, list) in [("input", &s.inputs), ("output", &s.outputs)] {
                for (p, d) in list {
                    rows.push(vec![s.stage.clone(), role.into(), p.clone(), d.clone()]);
                }
            }
        }
        crate::io::write_rows(path, &["stage", "role", "path", "sha256"], rows)
    }
}
