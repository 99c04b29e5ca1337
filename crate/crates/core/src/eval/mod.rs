//! Evaluation: one-vs-all ROC/AUC with tie grouping, micro/macro averaging,
//! threshold confusion metrics, and slice-based analysis by age and gender.

mod report;

pub use report::{emit_report, render_roc_svg, ModelEvalResult, ReportInputs};

use crate::ingest::{ClassLabel, Gender};
use crate::{Error, Result};

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.9;

/// One scored recording (or chunk): true label, the 3-class probability
/// vector, and the demographic fields the slice analysis needs.
#[derive(Debug, Clone)]
pub struct ScoredExample {
    pub record_id: String,
    pub true_label: ClassLabel,
    pub probs: [f64; 3],
    pub age: Option<u32>,
    pub gender: Option<Gender>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC curve and trapezoid AUC over binary (score, is_positive) pairs.
/// Tied scores collapse into one curve point, which makes the trapezoid
/// area equal the Mann-Whitney statistic with ties counting one half.
pub fn binary_roc(pairs: &[(f64, bool)]) -> Result<(Vec<RocPoint>, f64)> {
    let positives = pairs.iter().filter(|(_, p)| *p).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc(format!(
            "need both classes; got {positives} positives, {negatives} negatives"
        )));
    }

    let mut sorted: Vec<(f64, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: score,
        });
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

fn one_vs_all_pairs(examples: &[ScoredExample], target: ClassLabel) -> Vec<(f64, bool)> {
    examples
        .iter()
        .map(|e| (e.probs[target.index()], e.true_label == target))
        .collect()
}

/// One-vs-all ROC and AUC for `target`, scored by its probability.
pub fn roc_auc_one_vs_all(
    examples: &[ScoredExample],
    target: ClassLabel,
) -> Result<(Vec<RocPoint>, f64)> {
    binary_roc(&one_vs_all_pairs(examples, target))
}

fn pooled_pairs(examples: &[ScoredExample]) -> Vec<(f64, bool)> {
    let mut pooled = Vec::with_capacity(examples.len() * 3);
    for class in ClassLabel::ALL {
        pooled.extend(one_vs_all_pairs(examples, class));
    }
    pooled
}

/// Micro-average: pool the three binarized one-vs-all problems (3N points)
/// into one binary AUC.
pub fn micro_average_auc(examples: &[ScoredExample]) -> Result<f64> {
    Ok(micro_average_roc(examples)?.1)
}

pub fn micro_average_roc(examples: &[ScoredExample]) -> Result<(Vec<RocPoint>, f64)> {
    for class in ClassLabel::ALL {
        if !examples.iter().any(|e| e.true_label == class) {
            return Err(Error::UndefinedAuc(format!(
                "micro-average needs all three classes; {} absent",
                class.name()
            )));
        }
    }
    binary_roc(&pooled_pairs(examples))
}

/// Macro-average: unweighted mean of the three per-class AUCs.
pub fn macro_average_auc(examples: &[ScoredExample]) -> Result<f64> {
    let mut sum = 0.0;
    for class in ClassLabel::ALL {
        sum += roc_auc_one_vs_all(examples, class)?.1;
    }
    Ok(sum / 3.0)
}

/// Macro-average ROC curve: per-class TPR linearly interpolated onto the
/// union of FPR knots, then averaged. Drawn in reports next to the micro
/// curve.
pub fn macro_average_roc(examples: &[ScoredExample]) -> Result<Vec<RocPoint>> {
    let curves: Vec<Vec<RocPoint>> = ClassLabel::ALL
        .iter()
        .map(|&c| roc_auc_one_vs_all(examples, c).map(|(pts, _)| pts))
        .collect::<Result<_>>()?;
    let mut grid: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.iter().map(|p| p.fpr))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let interp = |curve: &[RocPoint], fpr: f64| -> f64 {
        // Curves are stepwise non-decreasing in fpr; take the max tpr at or
        // below fpr, interpolating across sloped segments.
        let mut prev = curve[0];
        for p in curve {
            if p.fpr > fpr {
                if p.fpr > prev.fpr {
                    let t = (fpr - prev.fpr) / (p.fpr - prev.fpr);
                    return prev.tpr + t * (p.tpr - prev.tpr);
                }
                return prev.tpr;
            }
            prev = *p;
        }
        prev.tpr
    };

    Ok(grid
        .iter()
        .map(|&fpr| RocPoint {
            fpr,
            tpr: curves.iter().map(|c| interp(c, fpr)).sum::<f64>() / 3.0,
            threshold: f64::NAN,
        })
        .collect())
}

/// Confusion counts and the four ratios at a decision threshold. Ratios
/// whose denominator is zero are reported as absent, never as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    /// Fraction of target-class examples in the evaluated set.
    pub prevalence: f64,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Predicted-positive iff `prob(target) >= threshold` (inclusive).
pub fn threshold_metrics(
    examples: &[ScoredExample],
    target: ClassLabel,
    threshold: f64,
) -> ConfusionMetrics {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0, 0, 0);
    for e in examples {
        let actual = e.true_label == target;
        let predicted = e.probs[target.index()] >= threshold;
        match (actual, predicted) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    ConfusionMetrics {
        tp,
        fp,
        tn,
        fn_,
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        ppv: ratio(tp, tp + fp),
        npv: ratio(tn, tn + fn_),
        prevalence: if examples.is_empty() {
            0.0
        } else {
            (tp + fn_) as f64 / examples.len() as f64
        },
    }
}

/// Demographic slicing axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slicer {
    AgeBins,
    Gender,
}

pub const AGE_GROUP_NAMES: [&str; 4] = ["age<=20", "20<age<=40", "40<age<=60", "60<age"];

/// Group index for an age: (0,20], (20,40], (40,60], (60,inf).
pub fn age_group(age: u32) -> usize {
    match age {
        0..=20 => 0,
        21..=40 => 1,
        41..=60 => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone)]
pub struct SliceGroup {
    pub group: String,
    pub n: usize,
    pub per_class_auc: [Option<f64>; 3],
    pub micro_auc: Option<f64>,
    /// Threshold metrics for the positive class (class3).
    pub class3_metrics: ConfusionMetrics,
}

#[derive(Debug, Clone)]
pub struct SliceReport {
    pub slicer: Slicer,
    pub groups: Vec<SliceGroup>,
    /// Examples without the slice field (or outside the two-group gender
    /// scheme), excluded and counted.
    pub excluded: usize,
}

fn evaluate_group(name: &str, subset: &[ScoredExample], threshold: f64) -> SliceGroup {
    let per_class_auc = ClassLabel::ALL
        .map(|c| roc_auc_one_vs_all(subset, c).ok().map(|(_, auc)| auc));
    SliceGroup {
        group: name.to_string(),
        n: subset.len(),
        per_class_auc,
        micro_auc: micro_average_auc(subset).ok(),
        class3_metrics: threshold_metrics(subset, ClassLabel::CovidPositive, threshold),
    }
}

/// Per-group evaluation: per-class AUC (absent when a group lacks a class),
/// micro-average, and positive-class threshold metrics.
pub fn slice_analysis(examples: &[ScoredExample], slicer: Slicer, threshold: f64) -> SliceReport {
    match slicer {
        Slicer::AgeBins => {
            let mut buckets: [Vec<ScoredExample>; 4] = Default::default();
            let mut excluded = 0;
            for e in examples {
                match e.age {
                    Some(a) => buckets[age_group(a)].push(e.clone()),
                    None => excluded += 1,
                }
            }
            SliceReport {
                slicer,
                groups: buckets
                    .iter()
                    .zip(AGE_GROUP_NAMES)
                    .map(|(subset, name)| evaluate_group(name, subset, threshold))
                    .collect(),
                excluded,
            }
        }
        Slicer::Gender => {
            let mut male = Vec::new();
            let mut female = Vec::new();
            let mut excluded = 0;
            for e in examples {
                match e.gender {
                    Some(Gender::Male) => male.push(e.clone()),
                    Some(Gender::Female) => female.push(e.clone()),
                    _ => excluded += 1,
                }
            }
            SliceReport {
                slicer,
                groups: vec![
                    evaluate_group("male", &male, threshold),
                    evaluate_group("female", &female, threshold),
                ],
                excluded,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::pair_count_auc;
    use crate::rng::Rng;

    fn example(label: ClassLabel, probs: [f64; 3]) -> ScoredExample {
        ScoredExample {
            record_id: String::new(),
            true_label: label,
            probs,
            age: None,
            gender: None,
        }
    }

    #[test]
    fn perfect_separation_is_auc_one() {
        let pairs = [(0.9, true), (0.8, true), (0.1, false), (0.2, false)];
        let (_, auc) = binary_roc(&pairs).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn all_ties_is_auc_half() {
        let pairs = [(0.5, true), (0.5, true), (0.5, false), (0.5, false)];
        let (points, auc) = binary_roc(&pairs).unwrap();
        assert!((auc - 0.5).abs() < 1e-12);
        assert_eq!(points.len(), 2);
    }

    #[test]
    fn worked_example_five_sixths() {
        let pairs = [
            (0.8, true),
            (0.4, true),
            (0.6, false),
            (0.3, false),
            (0.1, false),
        ];
        let (_, auc) = binary_roc(&pairs).unwrap();
        assert!((auc - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            binary_roc(&[(0.5, true), (0.9, true)]),
            Err(Error::UndefinedAuc(_))
        ));
    }

    #[test]
    fn trapezoid_equals_pair_count_with_random_ties() {
        let mut rng = Rng::new(31);
        for _ in 0..500 {
            let n = 2 + rng.below(49);
            // Coarse grid forces ties.
            let pairs: Vec<(f64, bool)> = (0..n)
                .map(|_| ((rng.below(8) as f64) / 8.0, rng.uniform() < 0.5))
                .collect();
            let has_both = pairs.iter().any(|p| p.1) && pairs.iter().any(|p| !p.1);
            if !has_both {
                continue;
            }
            let (_, trapezoid) = binary_roc(&pairs).unwrap();
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let mw = pair_count_auc(&scores, &labels).unwrap();
            assert!(
                (trapezoid - mw).abs() < 1e-9,
                "trapezoid {trapezoid} vs pair count {mw}"
            );
        }
    }

    #[test]
    fn auc_is_invariant_under_monotone_transforms() {
        let mut rng = Rng::new(32);
        let pairs: Vec<(f64, bool)> = (0..40)
            .map(|_| (rng.uniform(), rng.uniform() < 0.4))
            .collect();
        let (_, base) = binary_roc(&pairs).unwrap();
        let squashed: Vec<(f64, bool)> = pairs
            .iter()
            .map(|&(s, p)| (1.0 / (1.0 + (-5.0 * s).exp()), p))
            .collect();
        let (_, transformed) = binary_roc(&squashed).unwrap();
        assert!((base - transformed).abs() < 1e-12);
    }

    #[test]
    fn micro_average_of_perfect_classifier_is_one() {
        let examples = vec![
            example(ClassLabel::AsymptomaticNegative, [1.0, 0.0, 0.0]),
            example(ClassLabel::SymptomaticNegative, [0.0, 1.0, 0.0]),
            example(ClassLabel::CovidPositive, [0.0, 0.0, 1.0]),
        ];
        assert_eq!(micro_average_auc(&examples).unwrap(), 1.0);
        assert_eq!(macro_average_auc(&examples).unwrap(), 1.0);
    }

    #[test]
    fn uniform_probs_micro_is_half() {
        let u = [1.0 / 3.0; 3];
        let examples = vec![
            example(ClassLabel::AsymptomaticNegative, u),
            example(ClassLabel::SymptomaticNegative, u),
            example(ClassLabel::CovidPositive, u),
        ];
        assert!((micro_average_auc(&examples).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn micro_matches_pooled_pair_count_on_random_sets() {
        let mut rng = Rng::new(33);
        for _ in 0..50 {
            let examples: Vec<ScoredExample> = (0..12)
                .map(|_| {
                    let mut p = [rng.uniform(), rng.uniform(), rng.uniform()];
                    let sum: f64 = p.iter().sum();
                    p.iter_mut().for_each(|v| *v /= sum);
                    example(ClassLabel::from_index(rng.below(3)).unwrap(), p)
                })
                .collect();
            if ClassLabel::ALL
                .iter()
                .any(|&c| !examples.iter().any(|e| e.true_label == c))
            {
                continue;
            }
            let micro = micro_average_auc(&examples).unwrap();
            let pooled = pooled_pairs(&examples);
            let scores: Vec<f64> = pooled.iter().map(|p| p.0).collect();
            let labels: Vec<bool> = pooled.iter().map(|p| p.1).collect();
            let oracle = pair_count_auc(&scores, &labels).unwrap();
            assert!((micro - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn micro_equals_class_permuted_twin() {
        let mut rng = Rng::new(34);
        let examples: Vec<ScoredExample> = (0..20)
            .map(|_| {
                let mut p = [rng.uniform(), rng.uniform(), rng.uniform()];
                let sum: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= sum);
                example(ClassLabel::from_index(rng.below(3)).unwrap(), p)
            })
            .collect();
        // Rotate both the probabilities and the labels by one class.
        let rotated: Vec<ScoredExample> = examples
            .iter()
            .map(|e| {
                example(
                    ClassLabel::from_index((e.true_label.index() + 1) % 3).unwrap(),
                    [e.probs[2], e.probs[0], e.probs[1]],
                )
            })
            .collect();
        let a = micro_average_auc(&examples).unwrap();
        let b = micro_average_auc(&rotated).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn threshold_metrics_worked_example() {
        // pos scores {0.95, 0.92, 0.5}, neg {0.1, 0.91, 0.2} at 0.9.
        let mk = |label, p3: f64| {
            example(label, [(1.0 - p3) / 2.0, (1.0 - p3) / 2.0, p3])
        };
        let examples = vec![
            mk(ClassLabel::CovidPositive, 0.95),
            mk(ClassLabel::CovidPositive, 0.92),
            mk(ClassLabel::CovidPositive, 0.5),
            mk(ClassLabel::AsymptomaticNegative, 0.1),
            mk(ClassLabel::SymptomaticNegative, 0.91),
            mk(ClassLabel::AsymptomaticNegative, 0.2),
        ];
        let m = threshold_metrics(&examples, ClassLabel::CovidPositive, 0.9);
        assert_eq!((m.tp, m.fn_, m.fp, m.tn), (2, 1, 1, 2));
        assert_eq!(m.sensitivity, Some(2.0 / 3.0));
        assert_eq!(m.specificity, Some(2.0 / 3.0));
        assert_eq!(m.ppv, Some(2.0 / 3.0));
        assert_eq!(m.npv, Some(2.0 / 3.0));
        assert!((m.prevalence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_predicted_positives_leaves_ppv_absent() {
        let examples = vec![
            example(ClassLabel::CovidPositive, [0.4, 0.4, 0.2]),
            example(ClassLabel::AsymptomaticNegative, [0.8, 0.1, 0.1]),
        ];
        let m = threshold_metrics(&examples, ClassLabel::CovidPositive, 0.9);
        assert_eq!(m.ppv, None);
        assert_eq!(m.sensitivity, Some(0.0));
    }

    #[test]
    fn confusion_identities_hold() {
        let mut rng = Rng::new(35);
        let examples: Vec<ScoredExample> = (0..60)
            .map(|_| {
                let mut p = [rng.uniform(), rng.uniform(), rng.uniform()];
                let sum: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= sum);
                example(ClassLabel::from_index(rng.below(3)).unwrap(), p)
            })
            .collect();
        let positives = examples
            .iter()
            .filter(|e| e.true_label == ClassLabel::CovidPositive)
            .count();
        for threshold in [0.1, 0.5, 0.9] {
            let m = threshold_metrics(&examples, ClassLabel::CovidPositive, threshold);
            assert_eq!(m.tp + m.fn_, positives);
            assert_eq!(m.tn + m.fp, examples.len() - positives);
        }
        // Near-zero threshold calls everything positive.
        let low = threshold_metrics(&examples, ClassLabel::CovidPositive, 1e-12);
        assert_eq!(low.sensitivity, Some(1.0));
        // Near-one threshold calls nothing positive (probs sum to 1 over 3 classes).
        let high = threshold_metrics(&examples, ClassLabel::CovidPositive, 0.9999999);
        assert_eq!(high.sensitivity, Some(0.0));
    }

    #[test]
    fn age_boundaries_follow_the_table() {
        assert_eq!(age_group(20), 0);
        assert_eq!(age_group(21), 1);
        assert_eq!(age_group(40), 1);
        assert_eq!(age_group(41), 2);
        assert_eq!(age_group(60), 2);
        assert_eq!(age_group(61), 3);
    }

    #[test]
    fn slicing_equals_external_filtering() {
        let mut rng = Rng::new(36);
        let examples: Vec<ScoredExample> = (0..90)
            .map(|i| {
                let mut p = [rng.uniform(), rng.uniform(), rng.uniform()];
                let sum: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= sum);
                let mut e = example(ClassLabel::from_index(rng.below(3)).unwrap(), p);
                e.age = if i % 10 == 0 { None } else { Some(rng.below(90) as u32) };
                e.gender = match rng.below(3) {
                    0 => Some(Gender::Male),
                    1 => Some(Gender::Female),
                    _ => None,
                };
                e
            })
            .collect();

        let report = slice_analysis(&examples, Slicer::AgeBins, 0.9);
        for (g, group) in report.groups.iter().enumerate() {
            let filtered: Vec<ScoredExample> = examples
                .iter()
                .filter(|e| e.age.is_some_and(|a| age_group(a) == g))
                .cloned()
                .collect();
            assert_eq!(group.n, filtered.len());
            let expect_micro = micro_average_auc(&filtered).ok();
            match (group.micro_auc, expect_micro) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a.is_some(), b.is_some()),
            }
            let expect_m = threshold_metrics(&filtered, ClassLabel::CovidPositive, 0.9);
            assert_eq!(group.class3_metrics, expect_m);
        }
        let missing = examples.iter().filter(|e| e.age.is_none()).count();
        assert_eq!(report.excluded, missing);

        let by_gender = slice_analysis(&examples, Slicer::Gender, 0.9);
        let males = examples
            .iter()
            .filter(|e| e.gender == Some(Gender::Male))
            .count();
        assert_eq!(by_gender.groups[0].n, males);
    }

    #[test]
    fn single_class_group_has_undefined_auc() {
        let examples = vec![
            example(ClassLabel::CovidPositive, [0.1, 0.2, 0.7]),
            example(ClassLabel::CovidPositive, [0.3, 0.3, 0.4]),
        ];
        let group = evaluate_group("g", &examples, 0.9);
        assert_eq!(group.per_class_auc, [None, None, None]);
        assert_eq!(group.micro_auc, None);
    }
}
