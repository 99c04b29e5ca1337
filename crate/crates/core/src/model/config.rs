//! Model architecture configuration.

use serde::{Deserialize, Serialize};

use crate::digest::hex_digest;
use crate::{Error, Result};

/// CNN backbone for the heatmap branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackboneConfig {
    /// Stem + `widths.len()` stages of basic blocks. The desk-scale choice.
    SmallResidual {
        blocks_per_stage: usize,
        widths: Vec<usize>,
    },
    /// The full bottleneck topology ([3,4,6,3] stages, widths 64..512,
    /// expansion 4), trained from scratch. Far too heavy for CPU training;
    /// present for completeness and shape checks.
    Resnet50Topology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Heatmap edge length; branch 1 consumes `image_size^2 x 3` pixels.
    pub image_size: usize,
    pub backbone: BackboneConfig,
    /// Clinical-vector width (bits in the schema).
    pub clinical_dim: usize,
    /// Dense layer width after the GAP/GMP concatenation.
    pub branch1_out: usize,
    /// The clinical branch's two dense widths.
    pub branch2_widths: [usize; 2],
    /// Two parallel stacks over the MFCC vector, two layers each.
    pub branch3_stack_widths: [[usize; 2]; 2],
    /// Dense layer width after the stack concatenation.
    pub branch3_out: usize,
    /// Feed-forward widths between fusion and the 3-way classifier.
    pub fusion_widths: Vec<usize>,
    pub dropout_rate: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// Desk-scale defaults: 64x64 heatmaps into a small residual backbone.
    fn default() -> Self {
        ModelConfig {
            image_size: 64,
            backbone: BackboneConfig::SmallResidual {
                blocks_per_stage: 2,
                widths: vec![8, 16, 32],
            },
            clinical_dim: 8,
            branch1_out: 64,
            branch2_widths: [8, 64],
            branch3_stack_widths: [[16, 32], [16, 32]],
            branch3_out: 32,
            fusion_widths: vec![64, 32],
            dropout_rate: 0.3,
            lr: 1e-3,
            seed: 7,
        }
    }
}

impl ModelConfig {
    /// Paper-scale shape: 224x224 heatmaps into the full bottleneck
    /// topology.
    pub fn paper_scale() -> ModelConfig {
        ModelConfig {
            image_size: 224,
            backbone: BackboneConfig::Resnet50Topology,
            ..ModelConfig::default()
        }
    }

    /// Gradient-check scale: 16x16 images, widths halved, single blocks.
    pub fn tiny() -> ModelConfig {
        ModelConfig {
            image_size: 16,
            backbone: BackboneConfig::SmallResidual {
                blocks_per_stage: 1,
                widths: vec![4, 8, 16],
            },
            branch1_out: 32,
            branch2_widths: [4, 32],
            branch3_stack_widths: [[8, 16], [8, 16]],
            branch3_out: 16,
            fusion_widths: vec![32, 16],
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size < 8 {
            return Err(Error::Config(format!("image_size {} too small", self.image_size)));
        }
        if self.clinical_dim == 0 {
            return Err(Error::Config("clinical_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if let BackboneConfig::SmallResidual { blocks_per_stage, widths } = &self.backbone {
            if *blocks_per_stage == 0 || widths.is_empty() {
                return Err(Error::Config("small_residual needs >= 1 block and stage".into()));
            }
            if widths.contains(&0) {
                return Err(Error::Config(format!("zero-width stage in {widths:?}")));
            }
            // The stem plus per-stage strides each halve the spatial size.
            let reductions = 2 + (widths.len() - 1);
            if self.image_size < (1 << reductions) {
                return Err(Error::Config(format!(
                    "image_size {} collapses before stage {} of the backbone",
                    self.image_size,
                    widths.len()
                )));
            }
        }
        if self.branch1_out == 0
            || self.branch2_widths.contains(&0)
            || self.branch3_out == 0
            || self.branch3_stack_widths.iter().flatten().any(|&w| w == 0)
            || self.fusion_widths.contains(&0)
        {
            return Err(Error::Config("zero-width layer in branch or fusion".into()));
        }
        Ok(())
    }

    /// Content digest over the canonical JSON serialization.
    pub fn digest(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_digest_is_stable() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.digest(), ModelConfig::default().digest());
        assert_eq!(cfg.digest().len(), 16);
    }

    #[test]
    fn digest_changes_with_any_field() {
        let a = ModelConfig::default();
        let mut b = a.clone();
        b.lr = 2e-3;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = ModelConfig::default();
        cfg.image_size = 4;
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.dropout_rate = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.backbone = BackboneConfig::SmallResidual {
            blocks_per_stage: 2,
            widths: vec![8, 0],
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let cfg = ModelConfig::paper_scale();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"image_size": 64, "no_such_field": 3}"#;
        assert!(serde_json::from_str::<ModelConfig>(json).is_err());
    }
}
