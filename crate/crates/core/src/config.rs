//! Run configuration: one structured file covering every stage's
//! parameters, hashed into a digest that every artifact embeds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::CorpusSpec;
use crate::digest::hex_digest;
use crate::features::FeatureConfig;
use crate::ingest::{ClinicalSchema, DEFAULT_CLINICAL_FIELDS};
use crate::model::ModelConfig;
use crate::split::{BalanceTargets, SplitPlan};
use crate::train::Hyperparams;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub certainty_threshold: f64,
    pub clinical_schema: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            certainty_threshold: 0.9,
            clinical_schema: DEFAULT_CLINICAL_FIELDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl IngestConfig {
    pub fn schema(&self) -> ClinicalSchema {
        ClinicalSchema {
            fields: self.clinical_schema.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkConfig {
    pub chunk_seconds: f64,
    pub hop_seconds: f64,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            chunk_seconds: 2.0,
            hop_seconds: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub decision_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            decision_threshold: 0.9,
        }
    }
}

/// Everything a run needs. The desk-scale defaults train in minutes on a
/// laptop CPU; `paper_targets()` switches the balancing to the full-corpus
/// 600/75/75 shape.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: CorpusSpec,
    pub ingest: IngestConfig,
    pub chunking: ChunkConfig,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub split: SplitPlan,
    pub targets: BalanceTargets,
    pub train: Hyperparams,
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Desk-scale demo: 200 recordings per class balanced to 200/25/25.
    pub fn desk_demo() -> RunConfig {
        RunConfig {
            seed: 7,
            targets: BalanceTargets {
                train: 200,
                val: 25,
                test: 25,
            },
            train: Hyperparams {
                max_epochs: 12,
                patience: 4,
                ..Hyperparams::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path.as_ref(), json + "\n").map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ingest.certainty_threshold) {
            return Err(Error::Config(format!(
                "certainty_threshold {} outside [0, 1]",
                self.ingest.certainty_threshold
            )));
        }
        if self.ingest.clinical_schema.is_empty() {
            return Err(Error::Config("clinical schema is empty".into()));
        }
        if self.model.clinical_dim != self.ingest.clinical_schema.len() {
            return Err(Error::Config(format!(
                "model clinical_dim {} != schema length {}",
                self.model.clinical_dim,
                self.ingest.clinical_schema.len()
            )));
        }
        if !(0.0 < self.eval.decision_threshold && self.eval.decision_threshold < 1.0) {
            return Err(Error::Config(format!(
                "decision_threshold {} outside (0, 1)",
                self.eval.decision_threshold
            )));
        }
        self.model.validate()
    }

    /// Content digest of the canonical JSON form; embedded in every
    /// artifact this run produces.
    pub fn digest(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
        RunConfig::desk_demo().validate().unwrap();
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = RunConfig::default();
        assert_eq!(a.digest(), RunConfig::default().digest());
        let mut b = RunConfig::default();
        b.seed = 8;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn file_roundtrip() {
        let dir = std::env::temp_dir().join("coughscreen_config_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        let cfg = RunConfig::desk_demo();
        cfg.save(&path).unwrap();
        let loaded = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.digest(), loaded.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = std::env::temp_dir().join("coughscreen_config_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(&path, r#"{"seed": 1, "no_such_stage": {}}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn schema_model_width_mismatch_is_caught() {
        let mut cfg = RunConfig::default();
        cfg.ingest.clinical_schema.push("extra_field".into());
        assert!(cfg.validate().is_err());
    }
}
