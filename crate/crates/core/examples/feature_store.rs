//! The keyed feature store: put/get semantics, duplicate rejection, and the
//! single-file on-disk format with its order-independent digest.
//!
//! Run with: cargo run --release --example feature_store

use coughscreen::audio::{chunk, downsample_half, synth_cough, SynthParams};
use coughscreen::features::{featurize_record, FeatureConfig, FeatureStore};
use coughscreen::ingest::{ClassLabel, Record, Split, Status};

fn main() -> coughscreen::Result<()> {
    let params = SynthParams::default();
    let cfg = FeatureConfig::default();
    let mut store = FeatureStore::new();

    for (i, class) in ClassLabel::ALL.iter().enumerate() {
        let raw = synth_cough(*class, 30 + i as u64, &params);
        let signal = downsample_half(&raw);
        let id = format!("rec-{}", class.name());
        let chunks = chunk(&signal, &id, 2.0, 2.0)?;

        let record = Record {
            id: id.clone(),
            audio_path: String::new(),
            cough_certainty: 0.95,
            status: if *class == ClassLabel::CovidPositive {
                Status::CovidPositive
            } else if *class == ClassLabel::SymptomaticNegative {
                Status::Symptomatic
            } else {
                Status::Healthy
            },
            symptoms: Default::default(),
            age: Some(40),
            gender: None,
            parent_id: None,
            split: Some(Split::Train),
        };
        let triples = featurize_record(&record, &chunks, &Default::default(), &cfg, 64)?;
        println!("{id}: {} chunks featurized", triples.len());
        for t in triples {
            store.put(t)?;
        }
    }

    println!("\nstore holds {} entries:", store.len());
    for key in store.keys() {
        println!("  {key}");
    }

    // Duplicate keys are rejected, lookups are exact.
    let first_key = store.keys().next().unwrap().clone();
    let triple = store.get(&first_key)?.clone();
    println!("\nget({first_key}): heatmap {}x{}x3, mfcc[0] = {:.3}", triple.heatmap.height, triple.heatmap.width, triple.mfcc.coeffs[0]);
    match store.put(triple) {
        Err(e) => println!("putting the same key again: {e}"),
        Ok(()) => unreachable!(),
    }

    // Round-trip through the single-file format.
    let path = std::env::temp_dir().join("coughscreen_example_store.bin");
    store.save(&path)?;
    let loaded = FeatureStore::load(&path)?;
    println!(
        "\nsaved {} bytes; reloaded {} entries; digests match: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded.len(),
        loaded.digest() == store.digest()
    );
    Ok(())
}
