//! Grid search over model configurations, scored by validation
//! micro-average AUC.

use std::path::Path;

use super::{build_model, Model, ModelConfig};
use crate::features::FeatureTriple;
use crate::train::{train, Hyperparams};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GridRow {
    pub index: usize,
    pub param_count: Option<usize>,
    pub val_micro_auc: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub best: ModelConfig,
    pub rows: Vec<GridRow>,
}

/// Train every config in the grid and return the one with the best
/// validation micro-average AUC. Ties break toward fewer parameters, then
/// the lower grid index. Configs that fail to build or train are recorded
/// as failed rows and skipped.
pub fn grid_search(
    grid: &[ModelConfig],
    train_triples: &[&FeatureTriple],
    val_triples: &[&FeatureTriple],
    hyper: &Hyperparams,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty config grid".into()));
    }

    let mut rows = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, usize, usize)> = None; // (auc, params, index)

    for (index, config) in grid.iter().enumerate() {
        let outcome: Result<(Model, f64)> = (|| {
            let mut model = build_model(config)?;
            let report = train(&mut model, train_triples, val_triples, hyper)?;
            Ok((model, report.best_val_micro_auc))
        })();
        match outcome {
            Ok((model, auc)) => {
                let params = model.param_count();
                rows.push(GridRow {
                    index,
                    param_count: Some(params),
                    val_micro_auc: Some(auc),
                    status: "ok".into(),
                });
                let better = match &best {
                    None => true,
                    Some((b_auc, b_params, b_index)) => {
                        auc > *b_auc
                            || (auc == *b_auc && params < *b_params)
                            || (auc == *b_auc && params == *b_params && index < *b_index)
                    }
                };
                if better {
                    best = Some((auc, params, index));
                }
            }
            Err(e) => {
                rows.push(GridRow {
                    index,
                    param_count: None,
                    val_micro_auc: None,
                    status: format!("failed: {e}"),
                });
            }
        }
    }

    let (_, _, best_index) =
        best.ok_or_else(|| Error::Config("every grid config failed".into()))?;
    Ok(GridSearchResult {
        best_index,
        best: grid[best_index].clone(),
        rows,
    })
}

pub fn write_grid_csv(path: impl AsRef<Path>, result: &GridSearchResult) -> Result<()> {
    let mut out = String::from("index,param_count,val_micro_auc,status,best\n");
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.index,
            row.param_count.map(|p| p.to_string()).unwrap_or_default(),
            row.val_micro_auc.map(|a| format!("{a:.6}")).unwrap_or_default(),
            row.status.replace(',', ";"),
            if row.index == result.best_index { "*" } else { "" }
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{HeatmapImage, MfccVector, N_MFCC};
    use crate::ingest::{ClassLabel, ClinicalVector, Split};

    fn toy(cfg: &ModelConfig, per_class: usize, split: Split, seed: u64) -> Vec<FeatureTriple> {
        let mut rng = crate::rng::Rng::new(seed);
        let mut out = Vec::new();
        for class in ClassLabel::ALL {
            for i in 0..per_class {
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
                        pixels: vec![0.2 + 0.3 * class.index() as f32; cfg.image_size * cfg.image_size * 3],
                    },
                    mfcc: MfccVector { coeffs },
                    clinical: ClinicalVector { bits },
                });
            }
        }
        out
    }

    fn quick_hyper() -> Hyperparams {
        Hyperparams {
            batch_size: 8,
            max_epochs: 2,
            patience: 2,
            seed: 3,
        }
    }

    #[test]
    fn single_config_grid_returns_it() {
        let cfg = ModelConfig::tiny();
        let train_set = toy(&cfg, 6, Split::Train, 1);
        let val_set = toy(&cfg, 3, Split::Val, 2);
        let train_refs: Vec<&FeatureTriple> = train_set.iter().collect();
        let val_refs: Vec<&FeatureTriple> = val_set.iter().collect();
        let result = grid_search(&[cfg.clone()], &train_refs, &val_refs, &quick_hyper()).unwrap();
        assert_eq!(result.best_index, 0);
        assert_eq!(result.best, cfg);
        assert_eq!(result.rows.len(), 1);
    }

    #[test]
    fn failing_config_is_recorded_and_skipped() {
        let good = ModelConfig::tiny();
        let mut bad = ModelConfig::tiny();
        bad.image_size = 4; // collapses in the backbone; build fails
        let train_set = toy(&good, 6, Split::Train, 1);
        let val_set = toy(&good, 3, Split::Val, 2);
        let train_refs: Vec<&FeatureTriple> = train_set.iter().collect();
        let val_refs: Vec<&FeatureTriple> = val_set.iter().collect();
        let result =
            grid_search(&[bad, good.clone()], &train_refs, &val_refs, &quick_hyper()).unwrap();
        assert_eq!(result.best_index, 1);
        assert!(result.rows[0].status.starts_with("failed"));
        assert_eq!(result.rows[1].status, "ok");
    }

    #[test]
    fn grid_search_is_deterministic() {
        let mut small = ModelConfig::tiny();
        small.seed = 1;
        let mut wide = ModelConfig::tiny();
        wide.branch3_out = 24;
        wide.seed = 2;
        let train_set = toy(&small, 6, Split::Train, 1);
        let val_set = toy(&small, 3, Split::Val, 2);
        let train_refs: Vec<&FeatureTriple> = train_set.iter().collect();
        let val_refs: Vec<&FeatureTriple> = val_set.iter().collect();
        let grid = [small, wide];
        let a = grid_search(&grid, &train_refs, &val_refs, &quick_hyper()).unwrap();
        let b = grid_search(&grid, &train_refs, &val_refs, &quick_hyper()).unwrap();
        assert_eq!(a.best_index, b.best_index);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.val_micro_auc, y.val_micro_auc);
        }
    }
}
