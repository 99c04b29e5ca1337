//! Pipeline CLI: one thin binary over the library's pipeline stages.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coughscreen::config::RunConfig;
use coughscreen::ingest::ClassLabel;
use coughscreen::pipeline::{self, RunDir, ABLATION_MODEL, PRIMARY_MODEL};
use coughscreen::selftest::run_selftest;
use coughscreen::{Error, Result};

#[derive(Parser)]
#[command(name = "coughscreen", about = "Cough-audio screening pipeline", version)]
struct Cli {
    /// Run configuration JSON; defaults to the desk-scale demo config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory for inputs and outputs.
    #[arg(long, global = true, env = "COUGHSCREEN_OUT_DIR", default_value = "runs/demo")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (WAV files plus manifest.csv).
    Synth {
        /// Total recordings; must divide evenly into the three classes.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a manifest, filter by cough certainty, and label records.
    Ingest {
        /// Manifest CSV; defaults to <out>/manifest.csv.
        manifest: Option<PathBuf>,
    },
    /// Assign leakage-safe splits and balance each split via augmentation.
    Split,
    /// Extract per-chunk features into the keyed store.
    Featurize {
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Train the multi-branch model (or the ResNet-only ablation).
    Train {
        #[arg(long)]
        ablation: bool,
    },
    /// Score the test split and persist per-recording and per-chunk scores.
    Eval {
        #[arg(long)]
        ablation: bool,
    },
    /// Slice the scored test set by age and gender.
    Slice,
    /// Emit the report bundle (metrics CSVs, ROC SVG, run summary).
    Report,
    /// Score one WAV file with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        wav: PathBuf,
        /// Clinical bits as `fever=1,dry_cough=0,...`.
        #[arg(long, default_value = "")]
        clinical: String,
    },
    /// Run the oracle suites (gradient check, DSP oracle, AUC oracle).
    Selftest,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::desk_demo()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let dir = RunDir::new(&cli.out);
    match &cli.command {
        Command::Synth { n, seed } => {
            let mut cfg = load_config(&cli)?;
            if let Some(n) = n {
                if n % 3 != 0 {
                    return Err(Error::Parameter(format!(
                        "--n {n} does not divide into 3 classes"
                    )));
                }
                cfg.synth.n_per_class = n / 3;
            }
            if let Some(seed) = seed {
                cfg.seed = *seed;
                cfg.synth.seed = *seed;
            }
            let records = pipeline::run_synth(&cfg, &dir)?;
            println!(
                "synth: {} recordings ({} per class) -> {}",
                records.len(),
                cfg.synth.n_per_class,
                dir.manifest().display()
            );
        }
        Command::Ingest { manifest } => {
            let cfg = load_config(&cli)?;
            let manifest = manifest.clone().unwrap_or_else(|| dir.manifest());
            let summary = pipeline::run_ingest(&cfg, &manifest, &dir)?;
            println!(
                "ingest: parsed {} rows, kept {} at certainty >= {} ({} skipped, {} unlabeled)",
                summary.parsed,
                summary.kept,
                cfg.ingest.certainty_threshold,
                summary.skipped,
                summary.unlabeled
            );
            for class in ClassLabel::ALL {
                println!("  {}: {}", class.name(), summary.class_counts[class.index()]);
            }
        }
        Command::Split => {
            let cfg = load_config(&cli)?;
            let summary = pipeline::run_split(&cfg, &dir)?;
            println!("split: {} augmented children written", summary.children);
            for (s, counts) in ["train", "val", "test"].iter().zip(summary.per_split_class_counts) {
                println!("  {s}: class1 {} class2 {} class3 {}", counts[0], counts[1], counts[2]);
            }
        }
        Command::Featurize { workers } => {
            let cfg = load_config(&cli)?;
            let summary = pipeline::run_featurize(&cfg, &dir, *workers)?;
            println!(
                "featurize: {} records -> {} chunks, store digest {}",
                summary.records, summary.chunks, summary.store_digest
            );
        }
        Command::Train { ablation } => {
            let cfg = load_config(&cli)?;
            let summary = pipeline::run_train(&cfg, &dir, *ablation)?;
            println!(
                "train[{}]: {} epochs, best epoch {} (val micro AUC {:.4}), checkpoint {} ({:.1}s)",
                summary.name,
                summary.epochs,
                summary.best_epoch,
                summary.best_val_micro_auc,
                summary.checkpoint_digest,
                summary.wall_secs
            );
        }
        Command::Eval { ablation } => {
            let cfg = load_config(&cli)?;
            let name = if *ablation { ABLATION_MODEL } else { PRIMARY_MODEL };
            let summary = pipeline::run_eval(&cfg, &dir, name)?;
            println!(
                "eval[{}]: {} test recordings, micro AUC {:.4}, class3 AUC {:.4} (per-chunk micro {:.4})",
                summary.name,
                summary.test_recordings,
                summary.micro_auc,
                summary.class3_auc,
                summary.per_chunk_micro_auc
            );
        }
        Command::Slice => {
            let cfg = load_config(&cli)?;
            let reports = pipeline::run_slice(&cfg, &dir)?;
            for report in &reports {
                for g in &report.groups {
                    println!(
                        "slice {}: n={} micro AUC {}",
                        g.group,
                        g.n,
                        g.micro_auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "undefined".into())
                    );
                }
            }
            println!("-> {}", dir.slices_csv().display());
        }
        Command::Report => {
            let cfg = load_config(&cli)?;
            let files = pipeline::run_report(&cfg, &dir)?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Predict { model, wav, clinical } => {
            let cfg = load_config(&cli)?;
            let bits = pipeline::parse_clinical_flags(clinical, &cfg.ingest.clinical_schema)?;
            let p = pipeline::run_predict(&cfg, model, wav, &bits)?;
            println!(
                "p1={:.4} p2={:.4} p3={:.4} predicted={} positive_call={} (threshold {}, {} chunks)",
                p.probs[0],
                p.probs[1],
                p.probs[2],
                p.predicted.name(),
                p.positive_call,
                cfg.eval.decision_threshold,
                p.chunks
            );
        }
        Command::Selftest => {
            let results = run_selftest();
            let mut failed = false;
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed |= !r.passed;
            }
            if failed {
                return Err(Error::Numerical("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/version output through the error.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
