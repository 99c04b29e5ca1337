//! Independent verification oracles.
//!
//! Everything here deliberately avoids the main implementation paths: the
//! DFT is either the O(n^2) sum or a recursive split (vs the iterative STFT
//! used by the feature pipeline), mel filters are evaluated with the direct
//! triangle formula, the DCT is the plain definition, and AUC is the
//! Mann-Whitney pair count. These back the `selftest` command and the test
//! suites; keep them boring.

use crate::features::FeatureConfig;

/// O(n^2) complex DFT of a real frame. Returns (re, im) for all n bins.
pub fn naive_dft(frame: &[f64]) -> Vec<(f64, f64)> {
    let n = frame.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &x) in frame.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
            re += x * angle.cos();
            im += x * angle.sin();
        }
        out.push((re, im));
    }
    out
}

/// Recursive radix-2 FFT (independent of the pipeline's iterative STFT).
fn recursive_fft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    if n == 1 {
        return (re.to_vec(), im.to_vec());
    }
    debug_assert!(n.is_power_of_two());
    let even_re: Vec<f64> = re.iter().step_by(2).copied().collect();
    let even_im: Vec<f64> = im.iter().step_by(2).copied().collect();
    let odd_re: Vec<f64> = re.iter().skip(1).step_by(2).copied().collect();
    let odd_im: Vec<f64> = im.iter().skip(1).step_by(2).copied().collect();
    let (er, ei) = recursive_fft(&even_re, &even_im);
    let (or_, oi) = recursive_fft(&odd_re, &odd_im);
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n / 2 {
        let angle = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (c, s) = (angle.cos(), angle.sin());
        let tr = c * or_[k] - s * oi[k];
        let ti = c * oi[k] + s * or_[k];
        out_re[k] = er[k] + tr;
        out_im[k] = ei[k] + ti;
        out_re[k + n / 2] = er[k] - tr;
        out_im[k + n / 2] = ei[k] - ti;
    }
    (out_re, out_im)
}

/// Hann-windowed power spectrum, zero-padded to the next power of two.
/// Returns per-bin power for bins 0..=n/2 plus the padded length.
pub fn power_spectrum(samples: &[f64]) -> (Vec<f64>, usize) {
    let n = samples.len().max(2).next_power_of_two();
    let mut re = vec![0.0; n];
    let im = vec![0.0; n];
    for (i, &x) in samples.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / samples.len() as f64).cos();
        re[i] = x * w;
    }
    let (fr, fi) = recursive_fft(&re, &im);
    let power: Vec<f64> = (0..=n / 2).map(|k| fr[k] * fr[k] + fi[k] * fi[k]).collect();
    (power, n)
}

/// Frequency of the strongest spectral peak, Hz.
pub fn fft_peak_hz(samples: &[f64], sample_rate: u32) -> f64 {
    let (power, n) = power_spectrum(samples);
    let peak = power
        .iter()
        .enumerate()
        .skip(1) // ignore DC
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    peak as f64 * sample_rate as f64 / n as f64
}

/// One FFT bin width, Hz, of the measurement `fft_peak_hz` performs.
pub fn fft_bin_hz(samples: &[f64], sample_rate: u32) -> f64 {
    let n = samples.len().max(2).next_power_of_two();
    sample_rate as f64 / n as f64
}

/// Total spectral power in [lo_hz, hi_hz).
pub fn band_energy(samples: &[f64], sample_rate: u32, lo_hz: f64, hi_hz: f64) -> f64 {
    let (power, n) = power_spectrum(samples);
    let hz_per_bin = sample_rate as f64 / n as f64;
    power
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * hz_per_bin;
            f >= lo_hz && f < hi_hz
        })
        .map(|(_, &p)| p)
        .sum()
}

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half. `None` when either class is absent.
pub fn pair_count_auc(scores: &[f64], is_positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| p)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(is_positive)
        .filter(|(_, &p)| !p)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() as f64 * neg.len() as f64))
}

/// Mel scale: mel(f) = 2595 * log10(1 + f/700).
pub fn mel_of_hz(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn hz_of_mel(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Brute-force triangular mel filterbank: every (filter, bin) weight is
/// evaluated directly from the triangle formula.
pub fn naive_mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let mel_lo = mel_of_hz(fmin);
    let mel_hi = mel_of_hz(fmax);
    // n_mels + 2 edge points, equally spaced on the mel scale.
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| hz_of_mel(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut fb = vec![vec![0.0; n_bins]; n_mels];
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, w) in fb[m].iter_mut().enumerate() {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            let up = (f - left) / (center - left);
            let down = (right - f) / (right - center);
            *w = up.min(down).max(0.0);
        }
    }
    fb
}

/// Plain-sum orthonormal DCT-II of `xs`, first `k` coefficients.
pub fn naive_dct2_orthonormal(xs: &[f64], k: usize) -> Vec<f64> {
    let n = xs.len() as f64;
    (0..k)
        .map(|c| {
            let scale = if c == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * xs.iter()
                    .enumerate()
                    .map(|(t, &x)| {
                        x * (std::f64::consts::PI * c as f64 * (2.0 * t as f64 + 1.0) / (2.0 * n))
                            .cos()
                    })
                    .sum::<f64>()
        })
        .collect()
}

fn reflect_index(j: isize, len: usize) -> usize {
    // Mirror around the edges without repeating the edge sample, bouncing as
    // often as necessary for very short inputs.
    let len = len as isize;
    if len == 1 {
        return 0;
    }
    let mut j = j;
    loop {
        if j < 0 {
            j = -j;
        } else if j >= len {
            j = 2 * (len - 1) - j;
        } else {
            return j as usize;
        }
    }
}

/// Naive-composition MFCC: reflect-centered Hann frames -> O(n^2) DFT ->
/// brute-force triangles -> dB floor -> plain DCT-II -> mean over frames.
/// Must agree with the pipeline's FFT-based path to within 1e-8.
pub fn naive_mfcc(samples: &[f64], sample_rate: u32, cfg: &FeatureConfig) -> Vec<f64> {
    let n_fft = cfg.n_fft;
    let hop = cfg.hop;
    let pad = n_fft / 2;
    let fmax = cfg.fmax.unwrap_or(sample_rate as f64 / 2.0);
    let fb = naive_mel_filterbank(cfg.n_mels, n_fft, sample_rate, cfg.fmin, fmax);

    let n_frames = 1 + samples.len() / hop;
    let window: Vec<f64> = (0..n_fft)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n_fft as f64).cos())
        .collect();

    let mut mean = vec![0.0; 13];
    for frame_idx in 0..n_frames {
        let start = frame_idx as isize * hop as isize - pad as isize;
        let frame: Vec<f64> = (0..n_fft)
            .map(|i| samples[reflect_index(start + i as isize, samples.len())] * window[i])
            .collect();
        let spectrum = naive_dft(&frame);
        let power: Vec<f64> = spectrum[..n_fft / 2 + 1]
            .iter()
            .map(|(re, im)| re * re + im * im)
            .collect();
        let mel_db: Vec<f64> = fb
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
                10.0 * e.max(1e-10).log10()
            })
            .collect();
        let coeffs = naive_dct2_orthonormal(&mel_db, 13);
        for (m, c) in mean.iter_mut().zip(&coeffs) {
            *m += c;
        }
    }
    for m in &mut mean {
        *m /= n_frames as f64;
    }
    mean
}
