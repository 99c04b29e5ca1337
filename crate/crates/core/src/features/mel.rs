//! Mel filterbank and log-power mel-spectrogram.

use super::{power_spectrogram, FeatureConfig, Mat, MelSpectrogram};
use crate::audio::Signal;
use crate::{Error, Result};

/// dB floor keeping the log finite on silence: 10*log10(1e-10) = -100 dB.
pub const DB_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank with peak-1 triangles whose centers are equally
/// spaced on the mel scale. Shape `n_mels x (n_fft/2 + 1)`.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<Mat> {
    if !(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
        return Err(Error::Config(format!(
            "mel range [{fmin}, {fmax}] invalid for sample rate {sample_rate}"
        )));
    }
    let n_bins = n_fft / 2 + 1;
    let hz_per_bin = sample_rate as f64 / n_fft as f64;

    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut fb = Mat::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut row_sum = 0.0;
        for k in 0..n_bins {
            let f = k as f64 * hz_per_bin;
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            let w = rising.min(falling).max(0.0);
            fb.set(m, k, w);
            row_sum += w;
        }
        if row_sum == 0.0 {
            return Err(Error::Config(format!(
                "mel filter {m} is empty: n_mels {n_mels} too large for n_fft {n_fft} at {sample_rate} Hz"
            )));
        }
    }
    Ok(fb)
}

/// Nonzero column range per filter row, for sparse projection.
fn row_ranges(fb: &Mat) -> Vec<(usize, usize)> {
    (0..fb.rows())
        .map(|m| {
            let mut first = fb.cols();
            let mut last = 0;
            for k in 0..fb.cols() {
                if fb.get(m, k) != 0.0 {
                    if first == fb.cols() {
                        first = k;
                    }
                    last = k + 1;
                }
            }
            (first.min(last), last)
        })
        .collect()
}

/// Log-power mel-spectrogram: `10*log10(max(fb x power, 1e-10))`.
pub fn mel_spectrogram(signal: &Signal, cfg: &FeatureConfig) -> Result<MelSpectrogram> {
    let fmax = cfg.fmax.unwrap_or(signal.sample_rate as f64 / 2.0);
    let fb = mel_filterbank(cfg.n_mels, cfg.n_fft, signal.sample_rate, cfg.fmin, fmax)?;
    let power = power_spectrogram(signal, cfg.n_fft, cfg.hop)?;
    let ranges = row_ranges(&fb);

    let mut values = Mat::zeros(cfg.n_mels, power.cols());
    for m in 0..cfg.n_mels {
        let (k0, k1) = ranges[m];
        for f in 0..power.cols() {
            let mut e = 0.0;
            for k in k0..k1 {
                e += fb.get(m, k) * power.get(k, f);
            }
            values.set(m, f, 10.0 * e.max(DB_FLOOR).log10());
        }
    }
    Ok(MelSpectrogram {
        values,
        n_mels: cfg.n_mels,
        frame_hop: cfg.hop,
        sample_rate: signal.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::naive_mel_filterbank;

    #[test]
    fn filterbank_matches_brute_force_triangles() {
        let fb = mel_filterbank(40, 512, 22_050, 0.0, 11_025.0).unwrap();
        let oracle = naive_mel_filterbank(40, 512, 22_050, 0.0, 11_025.0);
        for m in 0..40 {
            for k in 0..257 {
                assert!(
                    (fb.get(m, k) - oracle[m][k]).abs() < 1e-12,
                    "mismatch at filter {m} bin {k}"
                );
            }
        }
    }

    #[test]
    fn every_row_sums_positive_and_peaks_at_center() {
        let n_fft = 1024;
        let rate = 22_050;
        let fb = mel_filterbank(64, n_fft, rate, 0.0, 11_025.0).unwrap();
        let mel_lo = hz_to_mel(0.0);
        let mel_hi = hz_to_mel(11_025.0);
        for m in 0..64 {
            let row: Vec<f64> = (0..fb.cols()).map(|k| fb.get(m, k)).collect();
            assert!(row.iter().sum::<f64>() > 0.0);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let center_hz = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) as f64 / 65.0);
            let center_bin = center_hz / (rate as f64 / n_fft as f64);
            assert!(
                (argmax as f64 - center_bin).abs() <= 1.0,
                "filter {m}: argmax {argmax}, center bin {center_bin:.2}"
            );
        }
    }

    #[test]
    fn too_many_filters_is_a_config_error() {
        // 8-point FFT has 5 bins; 64 filters cannot all be nonempty.
        assert!(mel_filterbank(64, 8, 22_050, 0.0, 11_025.0).is_err());
    }

    #[test]
    fn zero_signal_is_uniform_floor() {
        let s = Signal::new(vec![0.0; 4096], 22_050);
        let cfg = FeatureConfig::default();
        let mel = mel_spectrogram(&s, &cfg).unwrap();
        assert!(mel.values.data().iter().all(|&v| v == -100.0));
    }

    #[test]
    fn tone_at_filter_center_wins_its_row() {
        let rate = 22_050u32;
        let cfg = FeatureConfig::default();
        let fmax = rate as f64 / 2.0;
        // Pick filter 40's center frequency.
        let mel_lo = hz_to_mel(cfg.fmin);
        let mel_hi = hz_to_mel(fmax);
        let center_hz = mel_to_hz(mel_lo + (mel_hi - mel_lo) * 41.0 / (cfg.n_mels + 1) as f64);
        let samples: Vec<f64> = (0..22_050)
            .map(|i| (2.0 * std::f64::consts::PI * center_hz * i as f64 / rate as f64).sin())
            .collect();
        let mel = mel_spectrogram(&Signal::new(samples, rate), &cfg).unwrap();
        // Mid-signal frame, away from padding transients.
        let f = mel.values.cols() / 2;
        let argmax = (0..cfg.n_mels)
            .max_by(|&a, &b| mel.values.get(a, f).total_cmp(&mel.values.get(b, f)))
            .unwrap();
        assert_eq!(argmax, 40);
    }

    #[test]
    fn doubling_amplitude_adds_six_db() {
        let mut rng = crate::rng::Rng::new(4);
        let samples: Vec<f64> = (0..8192).map(|_| rng.normal() * 0.2).collect();
        let doubled: Vec<f64> = samples.iter().map(|x| x * 2.0).collect();
        let cfg = FeatureConfig::default();
        let a = mel_spectrogram(&Signal::new(samples, 22_050), &cfg).unwrap();
        let b = mel_spectrogram(&Signal::new(doubled, 22_050), &cfg).unwrap();
        let expect = 20.0 * 2f64.log10();
        for (x, y) in a.values.data().iter().zip(b.values.data()) {
            if *x > -99.0 {
                assert!((y - x - expect).abs() < 1e-6, "x {x} y {y}");
            }
        }
    }
}
