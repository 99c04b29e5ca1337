//! Acceptance suite: one test per criterion, each ending in a printed
//! PASS line (visible with `--nocapture`; the harness result line doubles
//! as the pass/fail record).
//!
//! Criterion 10 needs a user-supplied real manifest and is skipped unless
//! `COUGHVID_MANIFEST` points at it.

use std::collections::BTreeMap;
use std::time::Instant;

use coughscreen::audio::Signal;
use coughscreen::augment::{add_gaussian_noise, pitch_shift, time_shift, time_stretch};
use coughscreen::config::RunConfig;
use coughscreen::digest::file_digest;
use coughscreen::eval::{
    age_group, micro_average_auc, slice_analysis, threshold_metrics, ScoredExample, Slicer,
};
use coughscreen::ingest::{
    filter_by_certainty, map_label, parse_manifest, ClassLabel, ClinicalSchema, Gender, Record,
    RecordSet, Status,
};
use coughscreen::oracle::{fft_bin_hz, fft_peak_hz};
use coughscreen::pipeline::{run_end_to_end, RunDir};
use coughscreen::rng::Rng;
use coughscreen::selftest::{
    auc_oracle_check, dsp_oracle_check, full_graph_gradient_check, layer_gradient_checks,
    AUC_TOLERANCE, DSP_TOLERANCE, GRAPH_GRAD_TOLERANCE, LAYER_GRAD_TOLERANCE,
};
use coughscreen::split::{
    assemble_balanced_splits, check_leakage, split_records, BalanceTargets, SplitPlan,
};

fn metadata_record(id: String, class: ClassLabel) -> Record {
    let mut symptoms = BTreeMap::new();
    let status = match class {
        ClassLabel::AsymptomaticNegative => Status::Healthy,
        ClassLabel::SymptomaticNegative => {
            symptoms.insert("fever".to_string(), true);
            Status::Symptomatic
        }
        ClassLabel::CovidPositive => Status::CovidPositive,
    };
    Record {
        id,
        audio_path: String::new(),
        cough_certainty: 0.95,
        status,
        symptoms,
        age: None,
        gender: None,
        parent_id: None,
        split: None,
    }
}

fn metadata_set(counts: [usize; 3]) -> RecordSet {
    let mut records = Vec::new();
    for (ci, &n) in counts.iter().enumerate() {
        let class = ClassLabel::from_index(ci).unwrap();
        for i in 0..n {
            records.push(metadata_record(format!("{}-{i:05}", class.name()), class));
        }
    }
    RecordSet::new(records)
}

#[test]
fn criterion_1_gradient_correctness() {
    let start = Instant::now();
    let (layer_err, layer_coords) = layer_gradient_checks().unwrap();
    assert!(
        layer_err < LAYER_GRAD_TOLERANCE,
        "layer gradients: max rel err {layer_err} >= {LAYER_GRAD_TOLERANCE}"
    );
    let graph = full_graph_gradient_check(50).unwrap();
    assert!(
        graph.max_rel_err < GRAPH_GRAD_TOLERANCE,
        "full graph: max rel err {} >= {GRAPH_GRAD_TOLERANCE}",
        graph.max_rel_err
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "gradient checks took {elapsed:.0}s (budget 120s)");
    println!(
        "criterion 1 PASS: layers {layer_err:.2e} over {layer_coords} coords, graph {:.2e} over {} coords, {elapsed:.1}s",
        graph.max_rel_err, graph.coords_checked
    );
}

#[test]
fn criterion_2_dsp_oracle_equivalence() {
    let start = Instant::now();
    let diff = dsp_oracle_check(10).unwrap();
    assert!(diff < DSP_TOLERANCE, "mfcc max abs diff {diff} >= {DSP_TOLERANCE}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "dsp oracle took {elapsed:.0}s (budget 60s)");
    println!("criterion 2 PASS: mfcc max abs diff {diff:.2e} over 10 signals, {elapsed:.1}s");
}

#[test]
fn criterion_3_auc_oracle_equivalence() {
    let diff = auc_oracle_check(10_000).unwrap();
    assert!(diff < AUC_TOLERANCE, "auc deviation {diff} >= {AUC_TOLERANCE}");
    println!("criterion 3 PASS: max |trapezoid - pair count| {diff:.2e} over 10000 instances");
}

#[test]
fn criterion_4_split_fidelity_table_counts() {
    let originals = metadata_set([4446, 923, 380]);
    let with_splits = split_records(&originals, &SplitPlan::default()).unwrap();
    let assembled =
        assemble_balanced_splits(&with_splits, &BalanceTargets::default(), 7).unwrap();

    let count = |set: &RecordSet, class: ClassLabel, originals_only: bool| {
        set.iter()
            .filter(|r| {
                map_label(r).unwrap() == class && (!originals_only || r.parent_id.is_none())
            })
            .count()
    };
    for class in ClassLabel::ALL {
        assert_eq!(count(&assembled.train, class, false), 600, "{class} train");
        assert_eq!(count(&assembled.val, class, false), 75, "{class} val");
        assert_eq!(count(&assembled.test, class, false), 75, "{class} test");
    }
    let c3 = ClassLabel::CovidPositive;
    assert_eq!(count(&assembled.train, c3, true), 304);
    assert_eq!(count(&assembled.val, c3, true), 38);
    assert_eq!(count(&assembled.test, c3, true), 38);
    println!("criterion 4 PASS: 600/75/75 per class with class3 originals 304/38/38");
}

#[test]
fn criterion_5_leakage_property() {
    let mut rng = Rng::new(4242);
    for trial in 0..1000u64 {
        let counts = [
            3 + rng.below(40),
            3 + rng.below(25),
            3 + rng.below(12),
        ];
        let set = metadata_set(counts);
        let plan = SplitPlan {
            fractions: (0.8, 0.1, 0.1),
            seed: trial,
        };
        let with_splits = split_records(&set, &plan).unwrap();
        // Random targets around the class sizes force both downsampling and
        // child creation.
        let targets = BalanceTargets {
            train: 2 + rng.below(2 * counts[0].max(4)),
            val: 1 + rng.below(4),
            test: 1 + rng.below(4),
        };
        let assembled = assemble_balanced_splits(&with_splits, &targets, trial).unwrap();
        check_leakage(&assembled).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
    }
    println!("criterion 5 PASS: 0 leakage violations over 1000 randomized record sets");
}

#[test]
fn criterion_6_augmentation_contracts() {
    let tone = |freq: f64, rate: u32, secs: f64| {
        let n = (secs * rate as f64) as usize;
        Signal::new(
            (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
    };
    let input = tone(440.0, 22_050, 1.0);

    // Empirical SNR within +/- 0.5 dB of target.
    for snr_db in [15.0, 20.0, 30.0] {
        let noisy = add_gaussian_noise(&input, snr_db, 5).unwrap();
        let noise: Vec<f64> = noisy
            .samples
            .iter()
            .zip(&input.samples)
            .map(|(a, b)| a - b)
            .collect();
        let noise_rms = (noise.iter().map(|x| x * x).sum::<f64>() / noise.len() as f64).sqrt();
        let measured = 20.0 * (input.rms() / noise_rms).log10();
        assert!(
            (measured - snr_db).abs() <= 0.5,
            "snr {measured} vs target {snr_db}"
        );
    }

    // Pitch shift: tone relocated within one FFT bin, length exact.
    for semitones in [2.0, -2.0, 12.0] {
        let shifted = pitch_shift(&input, semitones);
        assert_eq!(shifted.len(), input.len(), "length at {semitones} st");
        let target = 440.0 * 2f64.powf(semitones / 12.0);
        let peak = fft_peak_hz(&shifted.samples, shifted.sample_rate);
        let bin = fft_bin_hz(&shifted.samples, shifted.sample_rate);
        assert!(
            (peak - target).abs() <= bin,
            "{semitones} st: peak {peak} vs target {target} (bin {bin})"
        );
    }

    // Time stretch: length ratio within +/- 2%.
    for rate in [0.85, 1.0, 1.15, 1.25] {
        let stretched = time_stretch(&input, rate).unwrap();
        let expected = input.len() as f64 / rate;
        let err = (stretched.len() as f64 - expected).abs() / expected;
        assert!(err <= 0.02, "rate {rate}: length error {err}");
    }

    // Time shift: sample multiset preserved.
    let mut rng = Rng::new(6);
    let noise_signal = Signal::new((0..9973).map(|_| rng.normal()).collect(), 22_050);
    for frac in [-0.25, -0.1, 0.05, 0.2] {
        let shifted = time_shift(&noise_signal, frac);
        let mut a = noise_signal.samples.clone();
        let mut b = shifted.samples.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b, "multiset at shift {frac}");
    }
    println!("criterion 6 PASS: SNR, pitch relocation, stretch ratio, and shift multiset contracts hold");
}

/// Minimal XML well-formedness scan: tag nesting and attribute quoting.
fn assert_well_formed_xml(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        rest = &rest[open + 1..];
        let close = rest.find('>').expect("unterminated tag");
        let tag = &rest[..close];
        rest = &rest[close + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes in <{tag}>");
        if let Some(name) = tag.strip_prefix('/') {
            let top = stack.pop().unwrap_or_else(|| panic!("stray closing </{name}>"));
            assert_eq!(top, name.trim(), "mismatched closing tag");
        } else if !tag.ends_with('/') {
            let name = tag.split_whitespace().next().unwrap().to_string();
            stack.push(name);
        }
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
}

/// Criteria 7 and 8 share the two end-to-end runs: the first run carries the
/// quality and runtime assertions, the second the byte-identity assertions.
#[test]
fn criterion_7_and_8_end_to_end_and_determinism() {
    let cfg = RunConfig::desk_demo();
    assert_eq!(cfg.synth.n_per_class * 3, 600);
    assert_eq!(cfg.model.image_size, 64);

    let base = std::env::temp_dir().join("coughscreen_acceptance");
    let dir_a = RunDir::new(base.join("run_a"));
    let dir_b = RunDir::new(base.join("run_b"));
    let _ = std::fs::remove_dir_all(&dir_a.root);
    let _ = std::fs::remove_dir_all(&dir_b.root);

    let start = Instant::now();
    let summary_a = run_end_to_end(&cfg, &dir_a, 2).unwrap();
    let elapsed_a = start.elapsed().as_secs_f64();

    // Criterion 7: budget and quality on the held-out test split.
    assert_eq!(summary_a.ingest.kept, 600);
    assert_eq!(summary_a.ingest.class_counts, [200, 200, 200]);
    assert!(elapsed_a <= 600.0, "pipeline took {elapsed_a:.0}s (budget 600s)");
    assert!(
        summary_a.eval_primary.micro_auc >= 0.95,
        "micro AUC {} < 0.95",
        summary_a.eval_primary.micro_auc
    );
    assert!(
        summary_a.eval_primary.class3_auc >= 0.97,
        "class3 AUC {} < 0.97",
        summary_a.eval_primary.class3_auc
    );
    assert!(
        summary_a.eval_ablation.micro_auc <= summary_a.eval_primary.micro_auc,
        "ablation micro AUC {} exceeds multi-branch {}",
        summary_a.eval_ablation.micro_auc,
        summary_a.eval_primary.micro_auc
    );

    // Report structure: well-formed SVG with the five curves.
    let svg = std::fs::read_to_string(dir_a.report_dir().join("roc.svg")).unwrap();
    assert_well_formed_xml(&svg);
    assert_eq!(svg.matches("<path class=\"curve-").count(), 5);

    println!(
        "criterion 7 PASS: e2e in {elapsed_a:.0}s; micro AUC {:.4}, class3 AUC {:.4}, ablation {:.4} <= {:.4}",
        summary_a.eval_primary.micro_auc,
        summary_a.eval_primary.class3_auc,
        summary_a.eval_ablation.micro_auc,
        summary_a.eval_primary.micro_auc
    );

    // Criterion 8: identical seed, identical artifacts.
    let summary_b = run_end_to_end(&cfg, &dir_b, 2).unwrap();
    assert_eq!(
        summary_a.train_primary.checkpoint_digest,
        summary_b.train_primary.checkpoint_digest,
        "checkpoint digests differ"
    );
    assert_eq!(
        summary_a.train_ablation.checkpoint_digest,
        summary_b.train_ablation.checkpoint_digest
    );
    assert_eq!(
        file_digest(dir_a.feature_store()).unwrap(),
        file_digest(dir_b.feature_store()).unwrap(),
        "feature stores differ"
    );

    // Path-free artifacts must be byte-identical.
    let mut compared = 0usize;
    let byte_compare = [
        "splits.csv",
        "augment_ledger.csv",
        "train_report_multi_branch.csv",
        "train_report_resnet_only.csv",
        "scored_multi_branch.csv",
        "scored_multi_branch_chunks.csv",
        "scored_resnet_only.csv",
        "scored_resnet_only_chunks.csv",
        "slices.csv",
    ];
    for name in byte_compare {
        let a = std::fs::read(dir_a.root.join(name)).unwrap();
        let b = std::fs::read(dir_b.root.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        compared += 1;
    }
    let mut report_names: Vec<String> = std::fs::read_dir(dir_a.report_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    report_names.sort();
    for name in &report_names {
        let a = std::fs::read(dir_a.report_dir().join(name)).unwrap();
        let b = std::fs::read(dir_b.report_dir().join(name)).unwrap();
        assert_eq!(a, b, "report/{name} differs between runs");
        compared += 1;
    }
    println!(
        "criterion 8 PASS: checkpoint digest {} reproduced; {compared} artifact files byte-identical",
        summary_a.train_primary.checkpoint_digest
    );

    let _ = std::fs::remove_dir_all(&dir_a.root);
    let _ = std::fs::remove_dir_all(&dir_b.root);
}

#[test]
fn criterion_9_slice_mechanics() {
    // Age boundary cases land per the table's group definitions.
    assert_eq!(age_group(20), 0);
    assert_eq!(age_group(21), 1);
    assert_eq!(age_group(40), 1);
    assert_eq!(age_group(41), 2);
    assert_eq!(age_group(60), 2);
    assert_eq!(age_group(61), 3);

    // Slicing equals filtering the example list externally then evaluating.
    let mut rng = Rng::new(77);
    let examples: Vec<ScoredExample> = (0..240)
        .map(|i| {
            let label = ClassLabel::from_index(rng.below(3)).unwrap();
            let mut probs = [rng.uniform(), rng.uniform(), rng.uniform()];
            probs[label.index()] += 0.8;
            let sum: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= sum);
            ScoredExample {
                record_id: format!("r{i}"),
                true_label: label,
                probs,
                age: (i % 13 != 0).then(|| [20, 21, 40, 41, 60, 61, 15, 75][i % 8]),
                gender: match i % 5 {
                    0 | 1 => Some(Gender::Male),
                    2 | 3 => Some(Gender::Female),
                    _ => None,
                },
            }
        })
        .collect();

    for slicer in [Slicer::AgeBins, Slicer::Gender] {
        let report = slice_analysis(&examples, slicer, 0.9);
        for (g, group) in report.groups.iter().enumerate() {
            let filtered: Vec<ScoredExample> = examples
                .iter()
                .filter(|e| match slicer {
                    Slicer::AgeBins => e.age.is_some_and(|a| age_group(a) == g),
                    Slicer::Gender => {
                        e.gender
                            == Some(if g == 0 { Gender::Male } else { Gender::Female })
                    }
                })
                .cloned()
                .collect();
            assert_eq!(group.n, filtered.len(), "group {} size", group.group);
            let expect_micro = micro_average_auc(&filtered).ok();
            match (group.micro_auc, expect_micro) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a.is_some(), b.is_some()),
            }
            assert_eq!(
                group.class3_metrics,
                threshold_metrics(&filtered, ClassLabel::CovidPositive, 0.9)
            );
        }
    }

    // Generated metadata lands in the expected groups by construction.
    let by_age = slice_analysis(&examples, Slicer::AgeBins, 0.9);
    let expected: [usize; 4] = {
        let mut counts = [0usize; 4];
        for e in &examples {
            if let Some(a) = e.age {
                counts[age_group(a)] += 1;
            }
        }
        counts
    };
    for (group, expect) in by_age.groups.iter().zip(expected) {
        assert_eq!(group.n, expect);
    }
    println!("criterion 9 PASS: slice groups equal external filtering; boundaries 20/21/40/41/60/61 correct");
}

#[test]
fn criterion_10_optional_real_data_integration() {
    let Ok(manifest) = std::env::var("COUGHVID_MANIFEST") else {
        println!("criterion 10 SKIPPED: set COUGHVID_MANIFEST=<metadata csv> to run the real-data check");
        return;
    };
    let (records, _skips) = parse_manifest(&manifest, &ClinicalSchema::default()).unwrap();
    assert_eq!(records.len(), 20_072, "manifest row count");
    let kept = filter_by_certainty(&records, 0.9);
    let mut counts = [0usize; 3];
    let mut labeled = 0usize;
    for r in kept.iter() {
        if let Ok(label) = map_label(r) {
            counts[label.index()] += 1;
            labeled += 1;
        }
    }
    assert_eq!(labeled, 5_749, "labeled records after the 0.9 filter");
    assert_eq!(counts, [4_446, 923, 380], "per-class counts");
    println!("criterion 10 PASS: 20072 -> 5749 records with classes 4446/923/380");
}

#[test]
fn split_requires_splittable_classes() {
    // The pre-split contract surfaced by the acceptance pipeline: a class
    // with fewer than 3 originals cannot reach all three splits.
    let set = metadata_set([10, 10, 2]);
    assert!(split_records(&set, &SplitPlan::default()).is_err());
}
