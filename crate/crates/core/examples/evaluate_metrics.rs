//! The evaluation toolkit on hand-made scores: one-vs-all ROC/AUC with
//! ties, micro and macro averaging, threshold confusion metrics, and a
//! demographic slice.
//!
//! Run with: cargo run --release --example evaluate_metrics

use coughscreen::eval::{
    macro_average_auc, micro_average_auc, roc_auc_one_vs_all, slice_analysis, threshold_metrics,
    ScoredExample, Slicer,
};
use coughscreen::ingest::{ClassLabel, Gender};
use coughscreen::rng::Rng;

fn main() -> coughscreen::Result<()> {
    // A mediocre synthetic classifier: probability mass biased toward the
    // true class, with noise.
    let mut rng = Rng::new(123);
    let examples: Vec<ScoredExample> = (0..120)
        .map(|i| {
            let label = ClassLabel::from_index(i % 3).unwrap();
            let mut probs = [rng.uniform() * 0.6, rng.uniform() * 0.6, rng.uniform() * 0.6];
            probs[label.index()] += 0.55;
            let sum: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= sum);
            ScoredExample {
                record_id: format!("r{i:03}"),
                true_label: label,
                probs,
                age: Some(10 + (i as u32 * 7) % 70),
                gender: Some(if i % 2 == 0 { Gender::Male } else { Gender::Female }),
            }
        })
        .collect();

    println!("one-vs-all AUC per class:");
    for class in ClassLabel::ALL {
        let (curve, auc) = roc_auc_one_vs_all(&examples, class)?;
        println!("  {}: AUC {auc:.4} ({} ROC points)", class.name(), curve.len());
    }
    println!("micro-average AUC: {:.4}", micro_average_auc(&examples)?);
    println!("macro-average AUC: {:.4}", macro_average_auc(&examples)?);

    let m = threshold_metrics(&examples, ClassLabel::CovidPositive, 0.5);
    println!("\nclass3 confusion at threshold 0.5:");
    println!("  tp={} fp={} tn={} fn={}", m.tp, m.fp, m.tn, m.fn_);
    let show = |name: &str, v: Option<f64>| {
        println!(
            "  {name}: {}",
            v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undefined".into())
        );
    };
    show("sensitivity", m.sensitivity);
    show("specificity", m.specificity);
    show("ppv", m.ppv);
    show("npv", m.npv);
    println!("  prevalence: {:.4}", m.prevalence);

    println!("\nage-slice micro-average AUC:");
    let slices = slice_analysis(&examples, Slicer::AgeBins, 0.5);
    for g in &slices.groups {
        println!(
            "  {:<12} n={:<3} micro AUC {}",
            g.group,
            g.n,
            g.micro_auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "undefined".into())
        );
    }
    Ok(())
}
