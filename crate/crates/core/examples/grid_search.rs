//! Grid search over architecture hyperparameters on a tiny synthetic set:
//! each candidate trains briefly and is scored by validation micro-average
//! AUC; ties break toward fewer parameters.
//!
//! Run with: cargo run --release --example grid_search

use coughscreen::features::{FeatureTriple, HeatmapImage, MfccVector, N_MFCC};
use coughscreen::ingest::{ClassLabel, ClinicalVector, Split};
use coughscreen::model::{grid_search, BackboneConfig, ModelConfig};
use coughscreen::rng::Rng;
use coughscreen::train::Hyperparams;

/// Synthetic separable triples, class signal in all three inputs.
fn toy(cfg: &ModelConfig, per_class: usize, split: Split, seed: u64) -> Vec<FeatureTriple> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    for class in ClassLabel::ALL {
        for i in 0..per_class {
            let base = 0.2 + 0.3 * class.index() as f32;
            let mut coeffs = [0.0; N_MFCC];
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c = (class.index() as f64 + 1.0) * (k as f64 + 1.0) / 10.0 + 0.05 * rng.normal();
            }
            let mut bits = vec![0u8; 8];
            bits[class.index()] = 1;
            out.push(FeatureTriple {
                record_id: format!("{}-{}-{i}", split.as_str(), class.name()),
                chunk_index: 0,
                label: class,
                split,
                heatmap: HeatmapImage {
                    height: cfg.image_size,
                    width: cfg.image_size,
                    pixels: (0..cfg.image_size * cfg.image_size * 3)
                        .map(|_| base + 0.05 * rng.uniform() as f32)
                        .collect(),
                },
                mfcc: MfccVector { coeffs },
                clinical: ClinicalVector { bits },
            });
        }
    }
    out
}

fn main() -> coughscreen::Result<()> {
    let base = ModelConfig::tiny();

    // Three candidates: the tiny default, a wider MFCC branch, and a deeper
    // backbone.
    let mut wider = base.clone();
    wider.branch3_out = 24;
    wider.seed = 2;
    let mut deeper = base.clone();
    deeper.backbone = BackboneConfig::SmallResidual {
        blocks_per_stage: 2,
        widths: vec![4, 8, 16],
    };
    deeper.seed = 3;
    let grid = vec![base.clone(), wider, deeper];

    let train_set = toy(&base, 12, Split::Train, 1);
    let val_set = toy(&base, 5, Split::Val, 2);
    let train_refs: Vec<&FeatureTriple> = train_set.iter().collect();
    let val_refs: Vec<&FeatureTriple> = val_set.iter().collect();

    let hyper = Hyperparams {
        batch_size: 12,
        max_epochs: 3,
        patience: 3,
        seed: 5,
    };

    println!("searching {} configs x {} epochs...\n", grid.len(), hyper.max_epochs);
    let result = grid_search(&grid, &train_refs, &val_refs, &hyper)?;

    println!("{:<6} {:>12} {:>15} {:>8}", "index", "params", "val micro AUC", "status");
    for row in &result.rows {
        println!(
            "{:<6} {:>12} {:>15} {:>8}{}",
            row.index,
            row.param_count.map(|p| p.to_string()).unwrap_or_default(),
            row.val_micro_auc.map(|a| format!("{a:.4}")).unwrap_or_default(),
            row.status,
            if row.index == result.best_index { "  <- best" } else { "" }
        );
    }
    println!("\nwinner: config {} (seed {})", result.best_index, result.best.seed);
    Ok(())
}
