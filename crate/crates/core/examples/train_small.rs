//! Train the three-branch model on a small synthetic set and watch the
//! per-epoch curve. Uses a reduced backbone so it finishes in well under a
//! minute.
//!
//! Run with: cargo run --release --example train_small

use coughscreen::config::RunConfig;
use coughscreen::model::BackboneConfig;
use coughscreen::pipeline::{run_end_to_end, RunDir};
use coughscreen::split::BalanceTargets;

fn main() -> coughscreen::Result<()> {
    let mut cfg = RunConfig::desk_demo();
    cfg.synth.n_per_class = 20;
    cfg.synth.params.max_secs = 4.0;
    cfg.targets = BalanceTargets {
        train: 20,
        val: 4,
        test: 4,
    };
    cfg.model.image_size = 32;
    cfg.model.backbone = BackboneConfig::SmallResidual {
        blocks_per_stage: 1,
        widths: vec![8, 16],
    };
    cfg.train.max_epochs = 6;
    cfg.train.patience = 3;

    let dir = RunDir::new(std::env::temp_dir().join("coughscreen_example_train"));
    let _ = std::fs::remove_dir_all(&dir.root);

    println!(
        "training on {} recordings per class (image {}, reduced backbone)...\n",
        cfg.synth.n_per_class, cfg.model.image_size
    );
    let summary = run_end_to_end(&cfg, &dir, 2)?;

    let report = std::fs::read_to_string(dir.train_report("multi_branch")).unwrap();
    println!("epoch  train_loss  val_loss  val_micro_auc");
    for line in report.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        println!("{:>5}  {:>10}  {:>8}  {:>13}", cells[0], cells[1], cells[2], cells[3]);
    }

    println!(
        "\nbest epoch {} (val micro AUC {:.4}), checkpoint digest {}",
        summary.train_primary.best_epoch,
        summary.train_primary.best_val_micro_auc,
        summary.train_primary.checkpoint_digest
    );
    println!(
        "test: micro AUC {:.4}, class3 AUC {:.4}",
        summary.eval_primary.micro_auc, summary.eval_primary.class3_auc
    );
    println!(
        "ablation test micro AUC {:.4} (multi-branch {:.4})",
        summary.eval_ablation.micro_auc, summary.eval_primary.micro_auc
    );
    println!("\nartifacts in {}", dir.root.display());
    Ok(())
}
