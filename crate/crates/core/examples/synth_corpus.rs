//! Generate a small synthetic cough corpus and inspect it.
//!
//! Writes WAV files plus a manifest CSV in the ingest schema, then parses
//! the manifest back and prints per-class counts and metadata coverage.
//!
//! Run with: cargo run --release --example synth_corpus

use coughscreen::audio::CorpusSpec;
use coughscreen::ingest::{filter_by_certainty, map_label, parse_manifest, ClassLabel, ClinicalSchema};

fn main() -> coughscreen::Result<()> {
    let out_dir = std::env::temp_dir().join("coughscreen_example_corpus");
    let spec = CorpusSpec {
        n_per_class: 15,
        seed: 42,
        ..CorpusSpec::default()
    };

    println!("generating {} recordings into {}", 3 * spec.n_per_class, out_dir.display());
    let records = coughscreen::audio::generate_corpus(&out_dir, &spec)?;
    println!("wrote {} WAV files + manifest.csv", records.len());

    // Round-trip through the manifest parser, exactly like real data.
    let (parsed, skips) = parse_manifest(out_dir.join("manifest.csv"), &ClinicalSchema::default())?;
    let kept = filter_by_certainty(&parsed, 0.9);
    println!(
        "\nparsed {} rows ({} skipped), {} pass the 0.9 certainty filter",
        parsed.len(),
        skips.entries.len(),
        kept.len()
    );

    let counts = kept.class_counts();
    for class in ClassLabel::ALL {
        println!("  {}: {} recordings", class.name(), counts[class.index()]);
    }

    let with_age = kept.iter().filter(|r| r.age.is_some()).count();
    let durations: Vec<f64> = kept
        .iter()
        .map(|r| {
            let signal = coughscreen::audio::read_wav(&r.audio_path)?;
            Ok(signal.duration_secs())
        })
        .collect::<coughscreen::Result<_>>()?;
    let (min, max) = durations
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    println!("\nage present on {with_age}/{} records", kept.len());
    println!("durations {min:.1}s ..= {max:.1}s at 44.1 kHz");

    // A couple of labeled records for flavor.
    for r in kept.iter().take(3) {
        println!(
            "  {} status={} label={} symptoms={}",
            r.id,
            r.status.as_str(),
            map_label(r)?.name(),
            r.symptoms.values().filter(|&&v| v).count()
        );
    }
    Ok(())
}
