//! Half-rate downsampling with a windowed-sinc anti-alias filter.

use super::Signal;

/// Number of taps in the anti-alias FIR. Odd so the filter has integer group
/// delay.
pub const AA_FILTER_TAPS: usize = 63;

/// Cutoff as a fraction of the *output* rate.
pub const AA_CUTOFF_OF_OUTPUT_RATE: f64 = 0.45;

/// Windowed-sinc low-pass FIR. `cutoff` is in cycles per (input) sample,
/// in (0, 0.5). Blackman window; taps normalized to unit DC gain.
pub fn design_lowpass_fir(cutoff: f64, taps: usize) -> Vec<f64> {
    debug_assert!(cutoff > 0.0 && cutoff < 0.5);
    debug_assert!(taps % 2 == 1);
    let mid = (taps - 1) as f64 / 2.0;
    let omega = 2.0 * std::f64::consts::PI * cutoff;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                omega / std::f64::consts::PI
            } else {
                (omega * x).sin() / (std::f64::consts::PI * x)
            };
            let w = 0.42 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (taps - 1) as f64).cos()
                + 0.08 * (4.0 * std::f64::consts::PI * n as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    h
}

/// Zero-padded FIR convolution aligned so the output has no group delay.
fn filter_centered(samples: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = taps.len() / 2;
    let n = samples.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            let j = i as isize + k as isize - half as isize;
            if j >= 0 && (j as usize) < n {
                acc += t * samples[j as usize];
            }
        }
        *o = acc;
    }
    out
}

/// Linear-interpolation resample to an arbitrary target rate. Only used to
/// regularize odd input rates before halving.
fn resample_linear(signal: &Signal, target_rate: u32) -> Signal {
    let ratio = signal.sample_rate as f64 / target_rate as f64;
    let out_len = (signal.len() as f64 / ratio).floor() as usize;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let a = signal.samples[i0.min(signal.len() - 1)];
            let b = signal.samples[(i0 + 1).min(signal.len() - 1)];
            a + (b - a) * frac
        })
        .collect();
    Signal::new(samples, target_rate)
}

/// Halve the sample rate: anti-alias low-pass, then decimate by 2.
///
/// An odd input rate is first linearly resampled to 44100 Hz so the output
/// lands on the 22050 Hz target.
pub fn downsample_half(signal: &Signal) -> Signal {
    let regular;
    let input = if signal.sample_rate % 2 == 0 {
        signal
    } else {
        regular = resample_linear(signal, 44_100);
        &regular
    };
    let cutoff_in = AA_CUTOFF_OF_OUTPUT_RATE / 2.0; // of the input rate
    let taps = design_lowpass_fir(cutoff_in, AA_FILTER_TAPS);
    let filtered = filter_centered(&input.samples, &taps);
    let samples: Vec<f64> = filtered.iter().step_by(2).copied().collect();
    Signal::new(samples, input.sample_rate / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fft_peak_hz;

    fn tone(freq: f64, rate: u32, secs: f64) -> Signal {
        let n = (secs * rate as f64) as usize;
        Signal::new(
            (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
    }

    #[test]
    fn zero_in_zero_out_half_length() {
        let s = Signal::new(vec![0.0; 1000], 44_100);
        let d = downsample_half(&s);
        assert_eq!(d.sample_rate, 22_050);
        assert_eq!(d.len(), 500);
        assert!(d.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn duration_halves_within_one_sample() {
        let s = tone(500.0, 44_100, 1.3);
        let d = downsample_half(&s);
        assert!((d.len() as isize - (s.len() / 2) as isize).abs() <= 1);
    }

    #[test]
    fn one_khz_tone_survives() {
        let s = tone(1000.0, 44_100, 1.0);
        let d = downsample_half(&s);
        let peak = fft_peak_hz(&d.samples, d.sample_rate);
        assert!((peak - 1000.0).abs() < 3.0, "peak at {peak}");
        // Passband amplitude is essentially preserved.
        assert!(d.rms() > 0.9 * s.rms());
    }

    #[test]
    fn fifteen_khz_tone_is_attenuated_40db() {
        let s = tone(15_000.0, 44_100, 1.0);
        let d = downsample_half(&s);
        let atten_db = 20.0 * (s.rms() / d.rms().max(1e-30)).log10();
        assert!(atten_db >= 40.0, "only {atten_db:.1} dB attenuation");
    }

    #[test]
    fn odd_rate_is_regularized_first() {
        let s = tone(440.0, 22_051, 0.5);
        let d = downsample_half(&s);
        assert_eq!(d.sample_rate, 22_050);
    }
}
