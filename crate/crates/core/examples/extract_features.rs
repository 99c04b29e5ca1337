//! Extract the model's three inputs from one synthetic cough: the log-mel
//! spectrogram rendered as a 64x64 RGB heatmap, the 13 time-averaged MFCCs,
//! and the clinical bit vector.
//!
//! Run with: cargo run --release --example extract_features

use coughscreen::audio::{chunk, downsample_half, synth_cough, SynthParams};
use coughscreen::features::{mel_spectrogram, mfcc, render_heatmap, FeatureConfig};
use coughscreen::ingest::ClassLabel;

fn main() -> coughscreen::Result<()> {
    let params = SynthParams::default();
    let raw = synth_cough(ClassLabel::CovidPositive, 7, &params);
    println!(
        "synthetic class3 cough: {:.2}s at {} Hz",
        raw.duration_secs(),
        raw.sample_rate
    );

    let signal = downsample_half(&raw);
    println!("downsampled to {} Hz ({} samples)", signal.sample_rate, signal.len());

    let chunks = chunk(&signal, "demo", 2.0, 2.0)?;
    println!("cut into {} chunks of 2.0s\n", chunks.len());

    let cfg = FeatureConfig::default();
    let mel = mel_spectrogram(&chunks[0].signal, &cfg)?;
    println!(
        "mel-spectrogram: {} mel bands x {} frames (n_fft {}, hop {})",
        mel.n_mels,
        mel.values.cols(),
        cfg.n_fft,
        cfg.hop
    );
    let (lo, hi) = mel
        .values
        .data()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("  dB range: {lo:.1} ..= {hi:.1}");

    let image = render_heatmap(&mel, 64, 64);
    println!(
        "heatmap: {}x{}x3, pixel range [{:.3}, {:.3}]",
        image.height,
        image.width,
        image.pixels.iter().cloned().fold(f32::MAX, f32::min),
        image.pixels.iter().cloned().fold(f32::MIN, f32::max)
    );

    let coeffs = mfcc(&mel)?;
    println!("\nfirst 13 MFCCs (mean over frames):");
    for (i, c) in coeffs.coeffs.iter().enumerate() {
        println!("  c{i:02} = {c:10.4}");
    }
    Ok(())
}
