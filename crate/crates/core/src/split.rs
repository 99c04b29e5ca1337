//! Leakage-safe 80-10-10 splitting over original recordings and the
//! balanced-split assembly.
//!
//! Splitting happens before augmentation, per class, over originals only.
//! Augmented children inherit their parent's split, so no original audio can
//! surface in two splits through its variants.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{balance_with_augmentation, AugmentLedgerEntry};
use crate::ingest::{map_label, ClassLabel, Record, RecordSet, Split};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            fractions: (0.8, 0.1, 0.1),
            seed: 7,
        }
    }
}

/// Per-class record counts each split is balanced to.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceTargets {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for BalanceTargets {
    fn default() -> Self {
        BalanceTargets {
            train: 600,
            val: 75,
            test: 75,
        }
    }
}

impl BalanceTargets {
    pub fn for_split(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

/// Floor-then-distribute rounding: floor every share, then hand the leftover
/// items to the largest remainders (train first on ties). If a split still
/// ends up empty with n >= 3, one item moves from the largest split.
pub fn split_counts(n: usize, fractions: (f64, f64, f64)) -> (usize, usize, usize) {
    let fr = [fractions.0, fractions.1, fractions.2];
    let mut counts = [0usize; 3];
    let mut remainders = [0f64; 3];
    for i in 0..3 {
        let exact = n as f64 * fr[i];
        counts[i] = exact.floor() as usize;
        remainders[i] = exact - exact.floor();
    }
    let mut leftover = n - counts.iter().sum::<usize>();
    // Largest remainder first; the tie order is (train, val, test).
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap().then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    // Minimum-one repair so every class reaches every split.
    if n >= 3 {
        for i in 0..3 {
            while counts[i] == 0 {
                let largest = (0..3).max_by_key(|&j| counts[j]).unwrap();
                counts[largest] -= 1;
                counts[i] += 1;
            }
        }
    }
    (counts[0], counts[1], counts[2])
}

/// Assign train/val/test to every original record, per class, by seeded
/// shuffle and floor-then-distribute rounding.
pub fn split_records(originals: &RecordSet, plan: &SplitPlan) -> Result<RecordSet> {
    let (f1, f2, f3) = plan.fractions;
    if (f1 + f2 + f3 - 1.0).abs() > 1e-9 || f1 <= 0.0 || f2 <= 0.0 || f3 <= 0.0 {
        return Err(Error::Parameter(format!(
            "fractions {:?} must be positive and sum to 1",
            plan.fractions
        )));
    }
    for r in originals.iter() {
        if r.parent_id.is_some() {
            return Err(Error::Protocol(format!(
                "record {} is an augmented child; split originals only",
                r.id
            )));
        }
    }

    let rng = Rng::new(plan.seed);
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();

    for class in ClassLabel::ALL {
        let mut ids: Vec<&str> = Vec::new();
        for r in originals.iter() {
            if map_label(r)? == class {
                ids.push(&r.id);
            }
        }
        if ids.len() < 3 {
            return Err(Error::CannotSplit {
                class: class.name().to_string(),
                count: ids.len(),
            });
        }
        let mut class_rng = rng.child(20 + class.index() as u64);
        class_rng.shuffle(&mut ids);
        let (n_train, n_val, _n_test) = split_counts(ids.len(), plan.fractions);
        for (i, id) in ids.iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            assignment.insert(id.to_string(), split);
        }
    }

    let records = originals
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.split = assignment.get(&r.id).copied();
            r
        })
        .collect();
    Ok(RecordSet::new(records))
}

#[derive(Debug, Clone)]
pub struct AssembledSplits {
    pub train: RecordSet,
    pub val: RecordSet,
    pub test: RecordSet,
    pub ledger: Vec<AugmentLedgerEntry>,
}

impl AssembledSplits {
    pub fn set_for(&self, split: Split) -> &RecordSet {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// All records of the three splits, train then val then test.
    pub fn all_records(&self) -> RecordSet {
        let mut records = Vec::new();
        records.extend(self.train.iter().cloned());
        records.extend(self.val.iter().cloned());
        records.extend(self.test.iter().cloned());
        RecordSet::new(records)
    }
}

/// Balance every split to the per-class targets via augmentation.
pub fn assemble_balanced_splits(
    records_with_splits: &RecordSet,
    targets: &BalanceTargets,
    seed: u64,
) -> Result<AssembledSplits> {
    let rng = Rng::new(seed);
    let mut outputs: Vec<(Split, crate::augment::BalanceOutcome)> = Vec::new();
    for (i, split) in Split::ALL.iter().enumerate() {
        let subset = RecordSet::new(
            records_with_splits
                .iter()
                .filter(|r| r.split == Some(*split))
                .cloned()
                .collect(),
        );
        let outcome =
            balance_with_augmentation(&subset, targets.for_split(*split), rng.child(i as u64).next_u64())?;
        let counts = outcome.records.class_counts();
        debug_assert!(counts.iter().all(|&c| c == targets.for_split(*split)));
        outputs.push((*split, outcome));
    }

    let mut ledger = Vec::new();
    let mut take = |split: Split, outputs: &mut Vec<(Split, crate::augment::BalanceOutcome)>| {
        let idx = outputs.iter().position(|(s, _)| *s == split).unwrap();
        let (_, outcome) = outputs.remove(idx);
        ledger.extend(outcome.ledger);
        outcome.records
    };
    let train = take(Split::Train, &mut outputs);
    let val = take(Split::Val, &mut outputs);
    let test = take(Split::Test, &mut outputs);

    let assembled = AssembledSplits {
        train,
        val,
        test,
        ledger,
    };
    check_leakage(&assembled)?;
    Ok(assembled)
}

/// Follow the parent chain to the original recording's id.
pub fn root_original<'a>(record: &'a Record, universe: &'a RecordSet) -> &'a str {
    let mut current = record;
    while let Some(pid) = &current.parent_id {
        match universe.get(pid) {
            Some(parent) => current = parent,
            None => return pid,
        }
    }
    &current.id
}

/// No original id may appear (directly or through a parent chain) in two
/// splits.
pub fn check_leakage(splits: &AssembledSplits) -> Result<()> {
    let universe = splits.all_records();
    let mut seen: BTreeMap<String, Split> = BTreeMap::new();
    for split in Split::ALL {
        for r in splits.set_for(split).iter() {
            let root = root_original(r, &universe).to_string();
            match seen.get(&root) {
                Some(prev) if *prev != split => {
                    return Err(Error::Protocol(format!(
                        "leakage: original {root} appears in both {} and {}",
                        prev.as_str(),
                        split.as_str()
                    )));
                }
                _ => {
                    seen.insert(root, split);
                }
            }
        }
    }
    Ok(())
}

/// Split assignment CSV: id, class, split, parent_id.
pub fn write_split_csv(path: impl AsRef<Path>, records: &RecordSet) -> Result<()> {
    let mut out = String::from("id,class,split,parent_id\n");
    for r in records.iter() {
        let class = map_label(r).map(|c| c.name().to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            class,
            r.split.map(|s| s.as_str().to_string()).unwrap_or_default(),
            r.parent_id.clone().unwrap_or_default()
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Status;
    use std::collections::BTreeMap as Map;

    fn original(id: &str, class: ClassLabel) -> Record {
        let mut symptoms = Map::new();
        let status = match class {
            ClassLabel::AsymptomaticNegative => Status::Healthy,
            ClassLabel::SymptomaticNegative => {
                symptoms.insert("fever".to_string(), true);
                Status::Healthy
            }
            ClassLabel::CovidPositive => Status::CovidPositive,
        };
        Record {
            id: id.into(),
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

    fn class_set(counts: [usize; 3]) -> RecordSet {
        let mut records = Vec::new();
        for (ci, &n) in counts.iter().enumerate() {
            let class = ClassLabel::from_index(ci).unwrap();
            for i in 0..n {
                records.push(original(&format!("{}-{i}", class.name()), class));
            }
        }
        RecordSet::new(records)
    }

    fn count_split(records: &RecordSet, class: ClassLabel, split: Split) -> usize {
        records
            .iter()
            .filter(|r| map_label(r).unwrap() == class && r.split == Some(split))
            .count()
    }

    #[test]
    fn table_counts_380_to_304_38_38() {
        assert_eq!(split_counts(380, (0.8, 0.1, 0.1)), (304, 38, 38));
    }

    #[test]
    fn ten_records_split_8_1_1() {
        assert_eq!(split_counts(10, (0.8, 0.1, 0.1)), (8, 1, 1));
    }

    #[test]
    fn tiny_classes_still_reach_every_split() {
        for n in 3..30 {
            let (a, b, c) = split_counts(n, (0.8, 0.1, 0.1));
            assert_eq!(a + b + c, n);
            assert!(a >= 1 && b >= 1 && c >= 1, "n={n}: {a}/{b}/{c}");
        }
    }

    #[test]
    fn assignment_is_deterministic_and_exhaustive() {
        let set = class_set([40, 25, 10]);
        let plan = SplitPlan::default();
        let a = split_records(&set, &plan).unwrap();
        let b = split_records(&set, &plan).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.split, y.split);
        }
        assert!(a.iter().all(|r| r.split.is_some()));
        assert_eq!(count_split(&a, ClassLabel::CovidPositive, Split::Train), 8);
        assert_eq!(count_split(&a, ClassLabel::CovidPositive, Split::Val), 1);
        assert_eq!(count_split(&a, ClassLabel::CovidPositive, Split::Test), 1);
    }

    #[test]
    fn children_cannot_be_split() {
        let mut set = class_set([5, 5, 5]);
        let mut child = original("child", ClassLabel::CovidPositive);
        child.parent_id = Some("class3-0".into());
        let mut records: Vec<Record> = set.iter().cloned().collect();
        records.push(child);
        set = RecordSet::new(records);
        assert!(matches!(
            split_records(&set, &SplitPlan::default()),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn class_below_three_cannot_split() {
        let set = class_set([5, 5, 2]);
        assert!(matches!(
            split_records(&set, &SplitPlan::default()),
            Err(Error::CannotSplit { .. })
        ));
    }

    #[test]
    fn paper_scale_assembly_reproduces_table_counts() {
        let set = class_set([4446, 923, 380]);
        let with_splits = split_records(&set, &SplitPlan::default()).unwrap();
        assert_eq!(count_split(&with_splits, ClassLabel::CovidPositive, Split::Train), 304);
        assert_eq!(count_split(&with_splits, ClassLabel::CovidPositive, Split::Val), 38);
        assert_eq!(count_split(&with_splits, ClassLabel::CovidPositive, Split::Test), 38);

        let assembled = assemble_balanced_splits(&with_splits, &BalanceTargets::default(), 7).unwrap();
        for class in ClassLabel::ALL {
            assert_eq!(count_split(&assembled.train, class, Split::Train), 600);
            assert_eq!(count_split(&assembled.val, class, Split::Val), 75);
            assert_eq!(count_split(&assembled.test, class, Split::Test), 75);
        }
        // Class 3 keeps all originals and adds children; class 1 has none.
        let class3_train_originals = assembled
            .train
            .iter()
            .filter(|r| map_label(r).unwrap() == ClassLabel::CovidPositive && r.parent_id.is_none())
            .count();
        assert_eq!(class3_train_originals, 304);
        let class1_children = assembled
            .train
            .iter()
            .filter(|r| {
                map_label(r).unwrap() == ClassLabel::AsymptomaticNegative && r.parent_id.is_some()
            })
            .count();
        assert_eq!(class1_children, 0);
    }

    #[test]
    fn leakage_checker_catches_a_violation() {
        let set = class_set([10, 10, 10]);
        let with_splits = split_records(&set, &SplitPlan::default()).unwrap();
        let assembled =
            assemble_balanced_splits(&with_splits, &BalanceTargets { train: 10, val: 2, test: 2 }, 3)
                .unwrap();
        check_leakage(&assembled).unwrap();

        // Manufacture a violation: move a train record into val.
        let mut broken = assembled.clone();
        let stolen = broken.train.records()[0].clone();
        let mut val_records: Vec<Record> = broken.val.iter().cloned().collect();
        val_records.push(Record {
            split: Some(Split::Val),
            ..stolen
        });
        broken.val = RecordSet::new(val_records);
        assert!(check_leakage(&broken).is_err());
    }

    #[test]
    fn randomized_assemblies_never_leak() {
        let mut rng = Rng::new(42);
        for trial in 0..50 {
            let counts = [
                6 + rng.below(30),
                4 + rng.below(20),
                3 + rng.below(10),
            ];
            let set = class_set(counts);
            let plan = SplitPlan {
                fractions: (0.8, 0.1, 0.1),
                seed: trial,
            };
            let with_splits = split_records(&set, &plan).unwrap();
            let min_count = *counts.iter().min().unwrap();
            let targets = BalanceTargets {
                train: min_count.max(4),
                val: 2,
                test: 2,
            };
            let assembled = assemble_balanced_splits(&with_splits, &targets, trial).unwrap();
            check_leakage(&assembled).unwrap();
        }
    }
}
