//! Short-time Fourier analysis: iterative radix-2 FFT, Hann window, and the
//! power spectrogram.

use super::Mat;
use crate::audio::Signal;
use crate::{Error, Result};

/// Iterative radix-2 FFT, in place. Lengths must be a power of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let angle = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let even = start + k;
                let odd = start + k + len / 2;
                let tr = cr * re[odd] - ci * im[odd];
                let ti = cr * im[odd] + ci * re[odd];
                re[odd] = re[even] - tr;
                im[odd] = im[even] - ti;
                re[even] += tr;
                im[even] += ti;
                let next_cr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = next_cr;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Inverse FFT via the conjugation identity.
pub fn ifft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len() as f64;
    for v in im.iter_mut() {
        *v = -*v;
    }
    fft_in_place(re, im);
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        *r /= n;
        *i = -*i / n;
    }
}

/// Periodic Hann window of length n.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

fn reflect_index(j: isize, len: usize) -> usize {
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

/// |STFT|^2 with reflect padding so frames are centered on the signal.
///
/// Output is `(n_fft/2 + 1) x n_frames` with `n_frames = 1 + floor(len/hop)`.
pub fn power_spectrogram(signal: &Signal, n_fft: usize, hop: usize) -> Result<Mat> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("power_spectrogram of empty signal".into()));
    }
    if !n_fft.is_power_of_two() {
        return Err(Error::Parameter(format!("n_fft {n_fft} not a power of two")));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Parameter(format!("hop {hop} out of range for n_fft {n_fft}")));
    }

    let samples = &signal.samples;
    let pad = n_fft / 2;
    let n_frames = 1 + samples.len() / hop;
    let n_bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);

    let mut out = Mat::zeros(n_bins, n_frames);
    let mut re = vec![0.0; n_fft];
    let mut im = vec![0.0; n_fft];
    for f in 0..n_frames {
        let start = f as isize * hop as isize - pad as isize;
        for i in 0..n_fft {
            re[i] = samples[reflect_index(start + i as isize, samples.len())] * window[i];
            im[i] = 0.0;
        }
        fft_in_place(&mut re, &mut im);
        for k in 0..n_bins {
            out.set(k, f, re[k] * re[k] + im[k] * im[k]);
        }
    }
    Ok(out)
}
