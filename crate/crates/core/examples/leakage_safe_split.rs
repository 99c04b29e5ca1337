//! Reproduce the corpus-scale split-and-balance bookkeeping on synthetic
//! metadata with class counts (4446, 923, 380): an 80-10-10 split over
//! originals, then each split balanced to 600/75/75 per class with
//! augmented children that inherit their parent's split.
//!
//! Run with: cargo run --release --example leakage_safe_split

use std::collections::BTreeMap;

use coughscreen::ingest::{map_label, ClassLabel, Record, RecordSet, Split, Status};
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

fn main() -> coughscreen::Result<()> {
    let class_counts = [4446usize, 923, 380];
    let mut records = Vec::new();
    for (ci, &n) in class_counts.iter().enumerate() {
        let class = ClassLabel::from_index(ci).unwrap();
        for i in 0..n {
            records.push(metadata_record(format!("{}-{i:04}", class.name()), class));
        }
    }
    let originals = RecordSet::new(records);
    println!(
        "originals: {} / {} / {} (total {})\n",
        class_counts[0],
        class_counts[1],
        class_counts[2],
        originals.len()
    );

    let with_splits = split_records(&originals, &SplitPlan::default())?;
    let assembled = assemble_balanced_splits(&with_splits, &BalanceTargets::default(), 7)?;

    println!("{:<8} {:>16} {:>16} {:>16}", "", "train", "val", "test");
    for class in ClassLabel::ALL {
        let mut cells = Vec::new();
        for split in Split::ALL {
            let set = assembled.set_for(split);
            let total = set
                .iter()
                .filter(|r| map_label(r).unwrap() == class)
                .count();
            let originals = set
                .iter()
                .filter(|r| map_label(r).unwrap() == class && r.parent_id.is_none())
                .count();
            cells.push(format!("{total}/{originals}"));
        }
        println!(
            "{:<8} {:>16} {:>16} {:>16}",
            class.name(),
            cells[0],
            cells[1],
            cells[2]
        );
    }
    println!("\n(total records / records that are original recordings)");

    check_leakage(&assembled)?;
    println!("leakage check: no original appears in two splits");
    println!("augmented children: {}", assembled.ledger.len());
    Ok(())
}
