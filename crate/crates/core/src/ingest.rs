//! Manifest parsing, certainty filtering, 3-class labeling, and clinical
//! metadata encoding.
//!
//! A manifest is a UTF-8 CSV with a header row. Required columns: `uuid`,
//! `cough_detected`, `status`. Optional: `age`, `gender`, `audio_path`, plus
//! any symptom columns (values `True`/`False`/`1`/`0`/empty). Malformed rows
//! are collected in a [`SkipReport`] rather than silently dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The three diagnostic classes, in fixed report-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    /// class1: no positive status, no symptoms
    AsymptomaticNegative,
    /// class2: no positive status, at least one symptom
    SymptomaticNegative,
    /// class3: positive status
    CovidPositive,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [
        ClassLabel::AsymptomaticNegative,
        ClassLabel::SymptomaticNegative,
        ClassLabel::CovidPositive,
    ];

    /// Column index used throughout reports and probability vectors.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::AsymptomaticNegative => 0,
            ClassLabel::SymptomaticNegative => 1,
            ClassLabel::CovidPositive => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        ClassLabel::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::AsymptomaticNegative => "class1",
            ClassLabel::SymptomaticNegative => "class2",
            ClassLabel::CovidPositive => "class3",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    CovidPositive,
    Healthy,
    Symptomatic,
    Unknown,
}

impl Status {
    /// Case-insensitive parse of the manifest `status` column.
    pub fn parse(s: &str) -> Status {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "covid-19" | "covid19" | "covid" | "positive" | "covid_positive" => {
                Status::CovidPositive
            }
            "healthy" => Status::Healthy,
            "symptomatic" => Status::Symptomatic,
            _ => Status::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::CovidPositive => "COVID-19",
            Status::Healthy => "healthy",
            Status::Symptomatic => "symptomatic",
            Status::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Other,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" => None,
            "male" | "m" => Some(Gender::Male),
            "female" | "f" => Some(Gender::Female),
            _ => Some(Gender::Other),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Other => "other",
        }
    }
}

/// Dataset split assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s.trim() {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One cough submission: metadata plus a reference to its audio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    /// Path to the WAV file; may be empty until materialized (augmented children).
    pub audio_path: String,
    pub cough_certainty: f64,
    pub status: Status,
    /// Named symptom/condition booleans from the manifest.
    pub symptoms: BTreeMap<String, bool>,
    pub age: Option<u32>,
    pub gender: Option<Gender>,
    /// Set only on augmented children; points at the original recording.
    pub parent_id: Option<String>,
    pub split: Option<Split>,
}

impl Record {
    pub fn has_any_symptom(&self) -> bool {
        self.symptoms.values().any(|&v| v)
    }

    pub fn has_symptom_data(&self) -> bool {
        !self.symptoms.is_empty()
    }
}

/// Immutable-after-construction collection of records.
#[derive(Debug, Clone, Default)]
pub struct RecordSet {
    records: Vec<Record>,
}

impl RecordSet {
    pub fn new(records: Vec<Record>) -> RecordSet {
        RecordSet { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Record> {
        self.records.iter()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Checks the structural invariants: parent_id != id and every parent exists.
    pub fn validate_parents(&self) -> Result<()> {
        for r in &self.records {
            if let Some(pid) = &r.parent_id {
                if pid == &r.id {
                    return Err(Error::Schema(format!("record {} is its own parent", r.id)));
                }
                if self.get(pid).is_none() {
                    return Err(Error::Schema(format!(
                        "record {} references missing parent {}",
                        r.id, pid
                    )));
                }
            }
        }
        Ok(())
    }

    /// Count of records per class for records that map to a label.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for r in &self.records {
            if let Ok(label) = map_label(r) {
                counts[label.index()] += 1;
            }
        }
        counts
    }
}

impl IntoIterator for RecordSet {
    type Item = Record;
    type IntoIter = std::vec::IntoIter<Record>;
    fn into_iter(self) -> Self::IntoIter {
        self.records.into_iter()
    }
}

impl<'a> IntoIterator for &'a RecordSet {
    type Item = &'a Record;
    type IntoIter = std::slice::Iter<'a, Record>;
    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Ordered list of field names defining clinical-vector bit positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalSchema {
    pub fields: Vec<String>,
}

/// Canonical 8-bit schema; manifests with different column names can remap
/// through the run config.
pub const DEFAULT_CLINICAL_FIELDS: [&str; 8] = [
    "fever",
    "dry_cough",
    "wet_cough",
    "respiratory_condition_history",
    "muscle_pain",
    "sore_throat",
    "loss_of_smell",
    "fatigue",
];

impl Default for ClinicalSchema {
    fn default() -> Self {
        ClinicalSchema {
            fields: DEFAULT_CLINICAL_FIELDS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ClinicalSchema {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Ordered bit vector; one bit per schema field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalVector {
    pub bits: Vec<u8>,
}

impl ClinicalVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Rows that could not be ingested cleanly, with the reason.
#[derive(Debug, Clone, Default)]
pub struct SkipReport {
    pub entries: Vec<SkipEntry>,
}

#[derive(Debug, Clone)]
pub struct SkipEntry {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub id: String,
    pub reason: String,
}

impl SkipReport {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("row,id,reason\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.row, e.id, e.reason.replace(',', ";")));
        }
        std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
    }
}

fn parse_bool_cell(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" | "" => Some(false),
        _ => None,
    }
}

/// Parse a manifest CSV into a [`RecordSet`].
///
/// Every known symptom column (per `schema`) is read; unknown values default
/// to absent. Rows with an unparseable certainty are kept with certainty 0
/// (so the 0.9 filter drops them) and logged in the skip report.
pub fn parse_manifest(path: impl AsRef<Path>, schema: &ClinicalSchema) -> Result<(RecordSet, SkipReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));

    let id_col = col("uuid").ok_or_else(|| Error::Schema("missing required column `uuid`".into()))?;
    let certainty_col = col("cough_detected")
        .ok_or_else(|| Error::Schema("missing required column `cough_detected`".into()))?;
    let status_col =
        col("status").ok_or_else(|| Error::Schema("missing required column `status`".into()))?;
    let age_col = col("age");
    let gender_col = col("gender");
    let audio_col = col("audio_path");
    let symptom_cols: Vec<(String, Option<usize>)> = schema
        .fields
        .iter()
        .map(|f| (f.clone(), col(f)))
        .collect();

    let manifest_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut records = Vec::new();
    let mut skips = SkipReport::default();

    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                skips.entries.push(SkipEntry {
                    row: row_no,
                    id: String::new(),
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let field = |idx: usize| row.get(idx).unwrap_or("");

        let id = field(id_col).to_string();
        if id.is_empty() {
            skips.entries.push(SkipEntry {
                row: row_no,
                id,
                reason: "empty uuid".into(),
            });
            continue;
        }

        let certainty = match field(certainty_col).parse::<f64>() {
            Ok(c) if (0.0..=1.0).contains(&c) => c,
            _ => {
                skips.entries.push(SkipEntry {
                    row: row_no,
                    id: id.clone(),
                    reason: format!("unparseable certainty `{}`, treated as 0", field(certainty_col)),
                });
                0.0
            }
        };

        let mut symptoms = BTreeMap::new();
        for (name, idx) in &symptom_cols {
            if let Some(idx) = idx {
                if let Some(v) = parse_bool_cell(field(*idx)) {
                    symptoms.insert(name.clone(), v);
                } else {
                    symptoms.insert(name.clone(), false);
                }
            }
        }

        let audio_path = match audio_col {
            Some(c) if !field(c).is_empty() => field(c).to_string(),
            _ => manifest_dir.join(format!("{id}.wav")).display().to_string(),
        };

        records.push(Record {
            id,
            audio_path,
            cough_certainty: certainty,
            status: Status::parse(field(status_col)),
            symptoms,
            age: age_col.and_then(|c| field(c).parse::<f64>().ok()).map(|a| a as u32),
            gender: gender_col.and_then(|c| Gender::parse(field(c))),
            parent_id: None,
            split: None,
        });
    }

    Ok((RecordSet::new(records), skips))
}

/// Keep records with `cough_certainty >= threshold` (boundary inclusive),
/// preserving order.
pub fn filter_by_certainty(records: &RecordSet, threshold: f64) -> RecordSet {
    debug_assert!((0.0..=1.0).contains(&threshold));
    RecordSet::new(
        records
            .iter()
            .filter(|r| r.cough_certainty >= threshold)
            .cloned()
            .collect(),
    )
}

/// Map a record to its diagnostic class.
///
/// Positive status dominates. Otherwise a record with any symptom bit set is
/// class2, with none class1. A record with unknown status and no symptom data
/// cannot be labeled.
pub fn map_label(record: &Record) -> Result<ClassLabel> {
    match record.status {
        Status::CovidPositive => Ok(ClassLabel::CovidPositive),
        Status::Symptomatic => Ok(ClassLabel::SymptomaticNegative),
        Status::Healthy => {
            if record.has_any_symptom() {
                Ok(ClassLabel::SymptomaticNegative)
            } else {
                Ok(ClassLabel::AsymptomaticNegative)
            }
        }
        Status::Unknown => {
            if !record.has_symptom_data() {
                Err(Error::Unlabeled(record.id.clone()))
            } else if record.has_any_symptom() {
                Ok(ClassLabel::SymptomaticNegative)
            } else {
                Ok(ClassLabel::AsymptomaticNegative)
            }
        }
    }
}

/// Encode a record's symptoms as an ordered bit vector. Missing metadata
/// encodes 0.
pub fn encode_clinical(record: &Record, schema: &ClinicalSchema) -> ClinicalVector {
    debug_assert!(!schema.is_empty());
    ClinicalVector {
        bits: schema
            .fields
            .iter()
            .map(|f| u8::from(record.symptoms.get(f).copied().unwrap_or(false)))
            .collect(),
    }
}
