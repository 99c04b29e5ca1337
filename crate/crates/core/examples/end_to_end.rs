//! The complete pipeline in one call: synthesize a corpus, ingest and
//! filter, split and balance with augmentation, featurize, train both the
//! multi-branch model and the ResNet-only ablation, evaluate, slice, and
//! emit the report bundle.
//!
//! This is a compact version of the desk-scale run (the default CLI config
//! uses 200 recordings per class); it finishes in about a minute.
//!
//! Run with: cargo run --release --example end_to_end

use coughscreen::config::RunConfig;
use coughscreen::pipeline::{run_end_to_end, RunDir};
use coughscreen::split::BalanceTargets;

fn main() -> coughscreen::Result<()> {
    let mut cfg = RunConfig::desk_demo();
    cfg.synth.n_per_class = 45;
    cfg.targets = BalanceTargets {
        train: 45,
        val: 6,
        test: 6,
    };
    cfg.train.max_epochs = 8;
    cfg.train.patience = 3;

    let dir = RunDir::new(std::env::temp_dir().join("coughscreen_example_e2e"));
    let _ = std::fs::remove_dir_all(&dir.root);

    println!("running the full pipeline into {}\n", dir.root.display());
    let start = std::time::Instant::now();
    let summary = run_end_to_end(&cfg, &dir, 2)?;
    let elapsed = start.elapsed().as_secs_f64();

    println!("ingest:    {} recordings kept, {:?} per class", summary.ingest.kept, summary.ingest.class_counts);
    println!("split:     {} augmented children", summary.split.children);
    println!(
        "featurize: {} records -> {} chunks (store {})",
        summary.featurize.records, summary.featurize.chunks, summary.featurize.store_digest
    );
    println!(
        "train:     multi-branch best val micro AUC {:.4} in {} epochs",
        summary.train_primary.best_val_micro_auc, summary.train_primary.epochs
    );
    println!(
        "ablation:  resnet-only best val micro AUC {:.4} in {} epochs",
        summary.train_ablation.best_val_micro_auc, summary.train_ablation.epochs
    );
    println!(
        "test:      multi-branch micro AUC {:.4}, class3 AUC {:.4}",
        summary.eval_primary.micro_auc, summary.eval_primary.class3_auc
    );
    println!(
        "           resnet-only micro AUC {:.4}, class3 AUC {:.4}",
        summary.eval_ablation.micro_auc, summary.eval_ablation.class3_auc
    );

    println!("\nreport bundle:");
    for f in &summary.report_files {
        println!("  {}", f.display());
    }
    println!("\ndone in {elapsed:.1}s");
    Ok(())
}
