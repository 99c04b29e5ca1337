//! Pipeline stages over a working directory: synth -> ingest -> split ->
//! featurize -> train -> eval -> slice -> report, plus single-file predict.
//!
//! Every stage reads its inputs from and writes its outputs to the run
//! directory, so stages compose from the CLI as well as from library calls.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::audio::{chunk, downsample_half, generate_corpus, read_wav, CorpusSpec, Signal};
use crate::augment::write_ledger_csv;
use crate::config::RunConfig;
use crate::digest::file_digest;
use crate::eval::{
    emit_report, macro_average_auc, macro_average_roc, micro_average_auc, micro_average_roc,
    roc_auc_one_vs_all, slice_analysis, threshold_metrics, ModelEvalResult, ReportInputs,
    ScoredExample, SliceReport, Slicer,
};
use crate::features::{featurize_chunk, featurize_record, FeatureStore, FeatureTriple};
use crate::ingest::{
    filter_by_certainty, map_label, parse_manifest, ClassLabel, ClinicalVector, Gender, Record,
    RecordSet, Split, Status,
};
use crate::model::{
    build_ablation_resnet_only, build_model, load_checkpoint, save_checkpoint, Model,
};
use crate::split::{assemble_balanced_splits, split_records, write_split_csv};
use crate::train::{score_chunks, score_recordings, train, write_train_report_csv};
use crate::{Error, Result};

/// File layout of one run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> RunDir {
        RunDir { root: root.into() }
    }

    pub fn audio_dir(&self) -> PathBuf {
        self.root.join("audio")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.csv")
    }

    pub fn skip_report(&self) -> PathBuf {
        self.root.join("skip_report.csv")
    }

    pub fn records(&self) -> PathBuf {
        self.root.join("records.csv")
    }

    pub fn splits(&self) -> PathBuf {
        self.root.join("splits.csv")
    }

    pub fn balanced_records(&self) -> PathBuf {
        self.root.join("balanced_records.csv")
    }

    pub fn augment_ledger(&self) -> PathBuf {
        self.root.join("augment_ledger.csv")
    }

    pub fn feature_store(&self) -> PathBuf {
        self.root.join("features.bin")
    }

    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.root.join(format!("model_{name}.ckpt"))
    }

    pub fn train_report(&self, name: &str) -> PathBuf {
        self.root.join(format!("train_report_{name}.csv"))
    }

    pub fn train_summary(&self, name: &str) -> PathBuf {
        self.root.join(format!("train_summary_{name}.json"))
    }

    pub fn scored(&self, name: &str) -> PathBuf {
        self.root.join(format!("scored_{name}.csv"))
    }

    pub fn scored_chunks(&self, name: &str) -> PathBuf {
        self.root.join(format!("scored_{name}_chunks.csv"))
    }

    pub fn slices_csv(&self) -> PathBuf {
        self.root.join("slices.csv")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    fn ensure(&self) -> Result<()> {
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))
    }
}

pub const PRIMARY_MODEL: &str = "multi_branch";
pub const ABLATION_MODEL: &str = "resnet_only";

// ---------------------------------------------------------------------------
// Record table persistence (normalized, unlike the raw ingest manifest).

fn records_csv(records: &RecordSet, schema: &[String]) -> String {
    let mut out = String::from("id,audio_path,cough_certainty,status,age,gender,split,parent_id");
    for f in schema {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    for r in records.iter() {
        out.push_str(&format!(
            "{},{},{:.6},{},{},{},{},{}",
            r.id,
            r.audio_path,
            r.cough_certainty,
            r.status.as_str(),
            r.age.map(|a| a.to_string()).unwrap_or_default(),
            r.gender.map(|g| g.as_str().to_string()).unwrap_or_default(),
            r.split.map(|s| s.as_str().to_string()).unwrap_or_default(),
            r.parent_id.clone().unwrap_or_default(),
        ));
        for f in schema {
            out.push(',');
            out.push_str(if r.symptoms.get(f).copied().unwrap_or(false) {
                "1"
            } else {
                "0"
            });
        }
        out.push('\n');
    }
    out
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &RecordSet, schema: &[String]) -> Result<()> {
    std::fs::write(path.as_ref(), records_csv(records, schema)).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_records_csv(path: impl AsRef<Path>, schema: &[String]) -> Result<RecordSet> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("records table missing column {name}")))
    };
    let id_c = col("id")?;
    let path_c = col("audio_path")?;
    let cert_c = col("cough_certainty")?;
    let status_c = col("status")?;
    let age_c = col("age")?;
    let gender_c = col("gender")?;
    let split_c = col("split")?;
    let parent_c = col("parent_id")?;
    let symptom_cols: Vec<(String, Result<usize>)> =
        schema.iter().map(|f| (f.clone(), col(f))).collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let mut symptoms = BTreeMap::new();
        for (name, idx) in &symptom_cols {
            if let Ok(idx) = idx {
                symptoms.insert(name.clone(), field(*idx) == "1");
            }
        }
        records.push(Record {
            id: field(id_c).to_string(),
            audio_path: field(path_c).to_string(),
            cough_certainty: field(cert_c).parse().unwrap_or(0.0),
            status: Status::parse(field(status_c)),
            symptoms,
            age: field(age_c).parse().ok(),
            gender: Gender::parse(field(gender_c)),
            parent_id: (!field(parent_c).is_empty()).then(|| field(parent_c).to_string()),
            split: Split::parse(field(split_c)),
        });
    }
    Ok(RecordSet::new(records))
}

// ---------------------------------------------------------------------------
// Scored example persistence.

pub fn write_scored_csv(path: impl AsRef<Path>, examples: &[ScoredExample]) -> Result<()> {
    let mut out = String::from("record_id,true_class,p1,p2,p3,age,gender\n");
    for e in examples {
        out.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9},{},{}\n",
            e.record_id,
            e.true_label.name(),
            e.probs[0],
            e.probs[1],
            e.probs[2],
            e.age.map(|a| a.to_string()).unwrap_or_default(),
            e.gender.map(|g| g.as_str().to_string()).unwrap_or_default(),
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_scored_csv(path: impl AsRef<Path>) -> Result<Vec<ScoredExample>> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let label = match field(1) {
            "class1" => ClassLabel::AsymptomaticNegative,
            "class2" => ClassLabel::SymptomaticNegative,
            "class3" => ClassLabel::CovidPositive,
            other => return Err(Error::Schema(format!("unknown class {other}"))),
        };
        let parse = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Schema(format!("bad probability {}", field(i))))
        };
        out.push(ScoredExample {
            record_id: field(0).to_string(),
            true_label: label,
            probs: [parse(2)?, parse(3)?, parse(4)?],
            age: field(5).parse().ok(),
            gender: Gender::parse(field(6)),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stages.

#[derive(Debug, Clone)]
pub struct IngestSummary {
    pub parsed: usize,
    pub skipped: usize,
    pub kept: usize,
    pub class_counts: [usize; 3],
    pub unlabeled: usize,
}

/// Generate the synthetic corpus into the run directory.
pub fn run_synth(cfg: &RunConfig, dir: &RunDir) -> Result<RecordSet> {
    dir.ensure()?;
    let spec = CorpusSpec {
        seed: cfg.seed,
        ..cfg.synth.clone()
    };
    generate_corpus(&dir.root, &spec)
}

/// Parse a manifest, filter by certainty, label, and persist the record
/// table.
pub fn run_ingest(cfg: &RunConfig, manifest: &Path, dir: &RunDir) -> Result<IngestSummary> {
    dir.ensure()?;
    let schema = cfg.ingest.schema();
    let (records, skips) = parse_manifest(manifest, &schema)?;
    skips.write_csv(dir.skip_report())?;
    let filtered = filter_by_certainty(&records, cfg.ingest.certainty_threshold);

    let mut labeled = Vec::new();
    let mut unlabeled = 0usize;
    let mut class_counts = [0usize; 3];
    for r in filtered.iter() {
        match map_label(r) {
            Ok(label) => {
                class_counts[label.index()] += 1;
                labeled.push(r.clone());
            }
            Err(_) => unlabeled += 1,
        }
    }
    let labeled = RecordSet::new(labeled);
    write_records_csv(dir.records(), &labeled, &cfg.ingest.clinical_schema)?;

    Ok(IngestSummary {
        parsed: records.len(),
        skipped: skips.entries.len(),
        kept: labeled.len(),
        class_counts,
        unlabeled,
    })
}

#[derive(Debug, Clone)]
pub struct SplitSummary {
    pub per_split_class_counts: [[usize; 3]; 3],
    pub children: usize,
}

/// Assign splits, balance each split to the per-class targets, and write the
/// augmented children's audio.
pub fn run_split(cfg: &RunConfig, dir: &RunDir) -> Result<SplitSummary> {
    let records = read_records_csv(dir.records(), &cfg.ingest.clinical_schema)?;
    let with_splits = split_records(&records, &cfg.split)?;
    let assembled = assemble_balanced_splits(&with_splits, &cfg.targets, cfg.seed)?;

    // Materialize child audio next to the originals.
    let outcome = crate::augment::BalanceOutcome {
        records: assembled.all_records(),
        ledger: assembled.ledger.clone(),
    };
    let materialized = crate::augment::materialize_children(&outcome, dir.audio_dir())?;

    write_split_csv(dir.splits(), &materialized)?;
    write_ledger_csv(dir.augment_ledger(), &assembled.ledger)?;
    write_records_csv(dir.balanced_records(), &materialized, &cfg.ingest.clinical_schema)?;

    let mut per_split_class_counts = [[0usize; 3]; 3];
    for r in materialized.iter() {
        if let (Some(split), Ok(label)) = (r.split, map_label(r)) {
            per_split_class_counts[split as usize][label.index()] += 1;
        }
    }
    Ok(SplitSummary {
        per_split_class_counts,
        children: assembled.ledger.len(),
    })
}

#[derive(Debug, Clone)]
pub struct FeaturizeSummary {
    pub records: usize,
    pub chunks: usize,
    pub store_digest: String,
}

fn featurize_one(record: &Record, cfg: &RunConfig) -> Result<Vec<FeatureTriple>> {
    let raw = read_wav(&record.audio_path)?;
    // Half the original frequency, always.
    let signal = downsample_half(&raw);
    let chunks = chunk(
        &signal,
        &record.id,
        cfg.chunking.chunk_seconds,
        cfg.chunking.hop_seconds,
    )?;
    featurize_record(
        record,
        &chunks,
        &cfg.ingest.schema(),
        &cfg.features,
        cfg.model.image_size,
    )
}

/// Decode, downsample, chunk, and featurize every balanced record into the
/// keyed store. `workers` > 1 splits the records across threads; the store
/// contents are identical regardless of worker count.
pub fn run_featurize(cfg: &RunConfig, dir: &RunDir, workers: usize) -> Result<FeaturizeSummary> {
    let records = read_records_csv(dir.balanced_records(), &cfg.ingest.clinical_schema)?;
    let store = Mutex::new(FeatureStore::new());
    let failure: Mutex<Option<Error>> = Mutex::new(None);

    let workers = workers.max(1);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let records = &records;
            let store = &store;
            let failure = &failure;
            scope.spawn(move || {
                for (i, record) in records.iter().enumerate() {
                    if i % workers != w {
                        continue;
                    }
                    if failure.lock().unwrap().is_some() {
                        return;
                    }
                    match featurize_one(record, cfg) {
                        Ok(triples) => {
                            let mut store = store.lock().unwrap();
                            for t in triples {
                                if let Err(e) = store.put(t) {
                                    *failure.lock().unwrap() = Some(e);
                                    return;
                                }
                            }
                        }
                        Err(e) => {
                            *failure.lock().unwrap() = Some(e);
                            return;
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }

    let store = store.into_inner().unwrap();
    store.save(dir.feature_store())?;
    Ok(FeaturizeSummary {
        records: records.len(),
        chunks: store.len(),
        store_digest: store.digest(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub name: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_micro_auc: f64,
    pub checkpoint_digest: String,
    pub wall_secs: f64,
}

/// Train the configured model (or the ResNet-only ablation) on the feature
/// store and write the checkpoint plus training reports.
pub fn run_train(cfg: &RunConfig, dir: &RunDir, ablation: bool) -> Result<TrainSummary> {
    let store = FeatureStore::load(dir.feature_store())?;
    let train_set = store.by_split(Split::Train);
    let val_set = store.by_split(Split::Val);

    let name = if ablation { ABLATION_MODEL } else { PRIMARY_MODEL };
    let mut model = if ablation {
        build_ablation_resnet_only(&cfg.model)?
    } else {
        build_model(&cfg.model)?
    };
    let report = train(&mut model, &train_set, &val_set, &cfg.train)?;

    let ckpt_path = dir.checkpoint(name);
    save_checkpoint(&model, &ckpt_path)?;
    let checkpoint_digest = file_digest(&ckpt_path)?;
    write_train_report_csv(dir.train_report(name), &report)?;

    let summary = serde_json::json!({
        "model": name,
        "seed": report.seed,
        "config_digest": cfg.digest(),
        "best_epoch": report.best_epoch,
        "best_val_micro_auc": report.best_val_micro_auc,
        "checkpoint_digest": checkpoint_digest,
        "wall_secs": report.wall_secs,
    });
    std::fs::write(
        dir.train_summary(name),
        serde_json::to_string_pretty(&summary).unwrap() + "\n",
    )
    .map_err(|e| Error::io(dir.train_summary(name), e))?;

    Ok(TrainSummary {
        name: name.to_string(),
        epochs: report.epochs.len(),
        best_epoch: report.best_epoch,
        best_val_micro_auc: report.best_val_micro_auc,
        checkpoint_digest,
        wall_secs: report.wall_secs,
    })
}

fn load_model_for(cfg: &RunConfig, dir: &RunDir, name: &str) -> Result<Model> {
    let mut model = if name == ABLATION_MODEL {
        build_ablation_resnet_only(&cfg.model)?
    } else {
        build_model(&cfg.model)?
    };
    load_checkpoint(&mut model, dir.checkpoint(name))?;
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub name: String,
    pub test_recordings: usize,
    pub micro_auc: f64,
    pub class3_auc: f64,
    pub per_chunk_micro_auc: f64,
}

/// Score the test split per recording (and per chunk), join demographic
/// fields, and persist the scored examples.
pub fn run_eval(cfg: &RunConfig, dir: &RunDir, name: &str) -> Result<EvalSummary> {
    let store = FeatureStore::load(dir.feature_store())?;
    let records = read_records_csv(dir.balanced_records(), &cfg.ingest.clinical_schema)?;
    let test_set = store.by_split(Split::Test);
    if test_set.is_empty() {
        return Err(Error::EmptyInput("feature store has no test split".into()));
    }
    let mut model = load_model_for(cfg, dir, name)?;

    let mut recording_scores = score_recordings(&mut model, &test_set)?;
    for s in &mut recording_scores {
        if let Some(r) = records.get(&s.record_id) {
            s.age = r.age;
            s.gender = r.gender;
        }
    }
    write_scored_csv(dir.scored(name), &recording_scores)?;

    let chunk_probs = score_chunks(&mut model, &test_set)?;
    let chunk_scores: Vec<ScoredExample> = test_set
        .iter()
        .zip(&chunk_probs)
        .map(|(t, probs)| ScoredExample {
            record_id: t.key(),
            true_label: t.label,
            probs: *probs,
            age: None,
            gender: None,
        })
        .collect();
    write_scored_csv(dir.scored_chunks(name), &chunk_scores)?;

    Ok(EvalSummary {
        name: name.to_string(),
        test_recordings: recording_scores.len(),
        micro_auc: micro_average_auc(&recording_scores)?,
        class3_auc: roc_auc_one_vs_all(&recording_scores, ClassLabel::CovidPositive)?.1,
        per_chunk_micro_auc: micro_average_auc(&chunk_scores)?,
    })
}

/// Slice the primary model's scored test set by age and gender.
pub fn run_slice(cfg: &RunConfig, dir: &RunDir) -> Result<Vec<SliceReport>> {
    let examples = read_scored_csv(dir.scored(PRIMARY_MODEL))?;
    let threshold = cfg.eval.decision_threshold;
    let reports = vec![
        slice_analysis(&examples, Slicer::AgeBins, threshold),
        slice_analysis(&examples, Slicer::Gender, threshold),
    ];
    // A standalone copy; emit_report embeds the same table in the bundle.
    let mut out = String::new();
    out.push_str("slicer,group,n,class1_auc,class2_auc,class3_auc,micro_avg\n");
    for report in &reports {
        let slicer = match report.slicer {
            Slicer::AgeBins => "age",
            Slicer::Gender => "gender",
        };
        for g in &report.groups {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{slicer},{},{},{},{},{},{}\n",
                g.group,
                g.n,
                fmt(g.per_class_auc[0]),
                fmt(g.per_class_auc[1]),
                fmt(g.per_class_auc[2]),
                fmt(g.micro_auc),
            ));
        }
    }
    std::fs::write(dir.slices_csv(), out).map_err(|e| Error::io(dir.slices_csv(), e))?;
    Ok(reports)
}

fn eval_result_from_scores(
    name: &str,
    examples: &[ScoredExample],
    per_chunk: Option<&[ScoredExample]>,
    threshold: f64,
) -> Result<ModelEvalResult> {
    let per_class = ClassLabel::ALL
        .iter()
        .map(|&c| roc_auc_one_vs_all(examples, c).map(|(pts, auc)| (c, pts, auc)))
        .collect::<Result<Vec<_>>>()?;
    let (micro_curve, micro_auc) = micro_average_roc(examples)?;
    Ok(ModelEvalResult {
        name: name.to_string(),
        per_class,
        micro_curve,
        micro_auc,
        macro_curve: macro_average_roc(examples)?,
        macro_auc: macro_average_auc(examples)?,
        confusion: threshold_metrics(examples, ClassLabel::CovidPositive, threshold),
        threshold,
        per_chunk_micro_auc: per_chunk.map(micro_average_auc).transpose()?,
    })
}

/// Regenerate the report bundle from the persisted scored examples.
pub fn run_report(cfg: &RunConfig, dir: &RunDir) -> Result<Vec<PathBuf>> {
    let threshold = cfg.eval.decision_threshold;
    let primary_scores = read_scored_csv(dir.scored(PRIMARY_MODEL))?;
    let primary_chunks = read_scored_csv(dir.scored_chunks(PRIMARY_MODEL))?;
    let primary = eval_result_from_scores(PRIMARY_MODEL, &primary_scores, Some(&primary_chunks), threshold)?;

    let ablation = if dir.scored(ABLATION_MODEL).exists() {
        let scores = read_scored_csv(dir.scored(ABLATION_MODEL))?;
        let chunks = read_scored_csv(dir.scored_chunks(ABLATION_MODEL))?;
        Some(eval_result_from_scores(ABLATION_MODEL, &scores, Some(&chunks), threshold)?)
    } else {
        None
    };

    let slices = vec![
        slice_analysis(&primary_scores, Slicer::AgeBins, threshold),
        slice_analysis(&primary_scores, Slicer::Gender, threshold),
    ];

    let summary = serde_json::json!({
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "test_recordings": primary_scores.len(),
        "decision_threshold": threshold,
        "per_recording_micro_auc": primary.micro_auc,
        "per_chunk_micro_auc": primary.per_chunk_micro_auc,
        "macro_auc": primary.macro_auc,
        "ablation_micro_auc": ablation.as_ref().map(|a| a.micro_auc),
    });

    emit_report(
        dir.report_dir(),
        &ReportInputs {
            primary: &primary,
            ablation: ablation.as_ref(),
            slices: &slices,
            summary,
        },
    )
}

/// Parse `fever=1,dry_cough=0` against the configured schema; unnamed
/// fields are absent (0).
pub fn parse_clinical_flags(spec: &str, schema: &[String]) -> Result<ClinicalVector> {
    let mut values: BTreeMap<&str, u8> = BTreeMap::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("clinical flag `{part}` is not key=value")))?;
        let key = key.trim();
        if !schema.iter().any(|f| f == key) {
            return Err(Error::Parameter(format!(
                "unknown clinical field `{key}` (schema: {})",
                schema.join(", ")
            )));
        }
        let bit = match value.trim() {
            "1" | "true" | "True" => 1,
            "0" | "false" | "False" => 0,
            other => return Err(Error::Parameter(format!("clinical value `{other}` not 0/1"))),
        };
        values.insert(key, bit);
    }
    Ok(ClinicalVector {
        bits: schema
            .iter()
            .map(|f| values.get(f.as_str()).copied().unwrap_or(0))
            .collect(),
    })
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub probs: [f64; 3],
    pub predicted: ClassLabel,
    pub positive_call: bool,
    pub chunks: usize,
}

/// Score one WAV file with a trained model: decode, downsample by half,
/// chunk, featurize, forward per chunk, mean.
pub fn run_predict(
    cfg: &RunConfig,
    checkpoint: &Path,
    wav: &Path,
    clinical: &ClinicalVector,
) -> Result<Prediction> {
    let mut model = build_model(&cfg.model)?;
    load_checkpoint(&mut model, checkpoint)?;

    let raw = read_wav(wav)?;
    let signal = downsample_half(&raw);
    let chunks = chunk(
        &signal,
        "predict",
        cfg.chunking.chunk_seconds,
        cfg.chunking.hop_seconds,
    )?;

    let mut mean = [0.0f64; 3];
    for c in &chunks {
        let (heatmap, mfcc) = featurize_chunk(c, &cfg.features, cfg.model.image_size)?;
        let probs = model.forward_parts(&heatmap, &mfcc, clinical)?;
        for (m, p) in mean.iter_mut().zip(&probs) {
            *m += p;
        }
    }
    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|m| *m /= total);
    let predicted = ClassLabel::from_index(
        (0..3).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap(),
    )
    .unwrap();
    Ok(Prediction {
        probs: mean,
        predicted,
        positive_call: mean[ClassLabel::CovidPositive.index()] >= cfg.eval.decision_threshold,
        chunks: chunks.len(),
    })
}

/// Convenience single-record wrapper used by tests and examples.
pub fn predict_signal(model: &mut Model, cfg: &RunConfig, signal: &Signal, clinical: &ClinicalVector) -> Result<[f64; 3]> {
    let halved = downsample_half(signal);
    let chunks = chunk(&halved, "predict", cfg.chunking.chunk_seconds, cfg.chunking.hop_seconds)?;
    let mut mean = [0.0f64; 3];
    for c in &chunks {
        let (heatmap, mfcc) = featurize_chunk(c, &cfg.features, cfg.model.image_size)?;
        let probs = model.forward_parts(&heatmap, &mfcc, clinical)?;
        for (m, p) in mean.iter_mut().zip(&probs) {
            *m += p;
        }
    }
    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|m| *m /= total);
    Ok(mean)
}

#[derive(Debug, Clone)]
pub struct EndToEndSummary {
    pub ingest: IngestSummary,
    pub split: SplitSummary,
    pub featurize: FeaturizeSummary,
    pub train_primary: TrainSummary,
    pub train_ablation: TrainSummary,
    pub eval_primary: EvalSummary,
    pub eval_ablation: EvalSummary,
    pub report_files: Vec<PathBuf>,
}

/// The full synthetic pipeline in one call: synth, ingest, split, featurize,
/// train (full + ablation), eval both, slice, report.
pub fn run_end_to_end(cfg: &RunConfig, dir: &RunDir, workers: usize) -> Result<EndToEndSummary> {
    run_synth(cfg, dir)?;
    let ingest = run_ingest(cfg, &dir.manifest(), dir)?;
    let split = run_split(cfg, dir)?;
    let featurize = run_featurize(cfg, dir, workers)?;
    let train_primary = run_train(cfg, dir, false)?;
    let train_ablation = run_train(cfg, dir, true)?;
    let eval_primary = run_eval(cfg, dir, PRIMARY_MODEL)?;
    let eval_ablation = run_eval(cfg, dir, ABLATION_MODEL)?;
    run_slice(cfg, dir)?;
    let report_files = run_report(cfg, dir)?;
    Ok(EndToEndSummary {
        ingest,
        split,
        featurize,
        train_primary,
        train_ablation,
        eval_primary,
        eval_ablation,
        report_files,
    })
}
