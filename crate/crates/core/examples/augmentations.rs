//! Apply the four augmentations to a 440 Hz tone and measure what each one
//! did: realized SNR, relocated pitch, output length, sample multiset.
//!
//! Run with: cargo run --release --example augmentations

use coughscreen::audio::Signal;
use coughscreen::augment::{add_gaussian_noise, pitch_shift, time_shift, time_stretch};
use coughscreen::oracle::{fft_bin_hz, fft_peak_hz};

fn tone(freq: f64, rate: u32, secs: f64) -> Signal {
    let n = (secs * rate as f64) as usize;
    Signal::new(
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect(),
        rate,
    )
}

fn main() -> coughscreen::Result<()> {
    let input = tone(440.0, 22_050, 1.0);
    println!("input: 440 Hz tone, {} samples at 22050 Hz\n", input.len());

    // Gaussian noise at a target SNR.
    let noisy = add_gaussian_noise(&input, 20.0, 99)?;
    let noise_rms = {
        let diff: Vec<f64> = noisy
            .samples
            .iter()
            .zip(&input.samples)
            .map(|(a, b)| a - b)
            .collect();
        (diff.iter().map(|x| x * x).sum::<f64>() / diff.len() as f64).sqrt()
    };
    let snr = 20.0 * (input.rms() / noise_rms).log10();
    println!("gaussian_noise(20 dB): realized SNR {snr:.3} dB");

    // Pitch shift up two semitones: duration identical, peak relocated.
    let up2 = pitch_shift(&input, 2.0);
    let target = 440.0 * 2f64.powf(2.0 / 12.0);
    println!(
        "pitch_shift(+2 st):    peak {:.1} Hz (target {target:.1}, bin {:.2} Hz), length {} == {}",
        fft_peak_hz(&up2.samples, up2.sample_rate),
        fft_bin_hz(&up2.samples, up2.sample_rate),
        up2.len(),
        input.len()
    );

    // Circular time shift: a pure permutation.
    let shifted = time_shift(&input, 0.15);
    let mut a = input.samples.clone();
    let mut b = shifted.samples.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    println!(
        "time_shift(0.15):      multiset preserved = {}, length {}",
        a == b,
        shifted.len()
    );

    // Time stretch: length changes, pitch does not.
    let faster = time_stretch(&input, 1.25)?;
    println!(
        "time_stretch(1.25):    length {} -> {} (expected {:.0}), peak still {:.1} Hz",
        input.len(),
        faster.len(),
        input.len() as f64 / 1.25,
        fft_peak_hz(&faster.samples, faster.sample_rate)
    );

    Ok(())
}
