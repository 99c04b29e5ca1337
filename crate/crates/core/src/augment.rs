//! Audio augmentation (gaussian noise, pitch shift, time shift, time
//! stretch) and the balancing procedure that inflates minority classes with
//! augmented children.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav_pcm16, Signal};
use crate::features::{fft_in_place, hann_window, ifft_in_place};
use crate::ingest::{map_label, ClassLabel, Record, RecordSet, Split};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AugmentKind {
    GaussianNoise,
    PitchShift,
    TimeShift,
    TimeStretch,
}

impl AugmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentKind::GaussianNoise => "gaussian_noise",
            AugmentKind::PitchShift => "pitch_shift",
            AugmentKind::TimeShift => "time_shift",
            AugmentKind::TimeStretch => "time_stretch",
        }
    }

    pub fn parse(s: &str) -> Option<AugmentKind> {
        match s {
            "gaussian_noise" => Some(AugmentKind::GaussianNoise),
            "pitch_shift" => Some(AugmentKind::PitchShift),
            "time_shift" => Some(AugmentKind::TimeShift),
            "time_stretch" => Some(AugmentKind::TimeStretch),
            _ => None,
        }
    }
}

/// Magnitude ranges drawn for augmented children: mild perturbations that
/// keep the cough character intact.
pub const SNR_DB_RANGE: (f64, f64) = (15.0, 30.0);
pub const SEMITONE_RANGE: (f64, f64) = (-2.0, 2.0);
pub const SHIFT_FRACTION_RANGE: (f64, f64) = (-0.2, 0.2);
pub const STRETCH_RATE_RANGE: (f64, f64) = (0.85, 1.15);

/// One augmentation to apply: the kind, its magnitude (SNR dB, semitones,
/// shift fraction, or stretch rate), and the noise seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    pub magnitude: f64,
    pub seed: u64,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match self.kind {
            AugmentKind::GaussianNoise => SNR_DB_RANGE,
            AugmentKind::PitchShift => SEMITONE_RANGE,
            AugmentKind::TimeShift => SHIFT_FRACTION_RANGE,
            AugmentKind::TimeStretch => STRETCH_RATE_RANGE,
        };
        if self.magnitude < lo || self.magnitude > hi {
            return Err(Error::Parameter(format!(
                "{} magnitude {} outside [{lo}, {hi}]",
                self.kind.as_str(),
                self.magnitude
            )));
        }
        Ok(())
    }

    /// Uniform draw over the four kinds with an in-range magnitude.
    pub fn random(rng: &mut Rng) -> AugmentSpec {
        let kind = match rng.below(4) {
            0 => AugmentKind::GaussianNoise,
            1 => AugmentKind::PitchShift,
            2 => AugmentKind::TimeShift,
            _ => AugmentKind::TimeStretch,
        };
        let (lo, hi) = match kind {
            AugmentKind::GaussianNoise => SNR_DB_RANGE,
            AugmentKind::PitchShift => SEMITONE_RANGE,
            AugmentKind::TimeShift => SHIFT_FRACTION_RANGE,
            AugmentKind::TimeStretch => STRETCH_RATE_RANGE,
        };
        AugmentSpec {
            kind,
            magnitude: rng.range(lo, hi),
            seed: rng.next_u64(),
        }
    }
}

/// Apply one augmentation.
pub fn apply(spec: &AugmentSpec, signal: &Signal) -> Result<Signal> {
    match spec.kind {
        AugmentKind::GaussianNoise => add_gaussian_noise(signal, spec.magnitude, spec.seed),
        AugmentKind::PitchShift => Ok(pitch_shift(signal, spec.magnitude)),
        AugmentKind::TimeShift => Ok(time_shift(signal, spec.magnitude)),
        AugmentKind::TimeStretch => time_stretch(signal, spec.magnitude),
    }
}

/// Mix in seeded white gaussian noise scaled so the empirical SNR equals
/// `snr_db` exactly. `+inf` disables the noise.
pub fn add_gaussian_noise(signal: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    let signal_rms = signal.rms();
    if signal_rms == 0.0 {
        return Err(Error::DegenerateSignal(
            "cannot set an SNR against a zero-RMS signal".into(),
        ));
    }
    let mut rng = Rng::new(seed);
    let noise: Vec<f64> = (0..signal.len()).map(|_| rng.normal()).collect();
    let noise_rms = (noise.iter().map(|x| x * x).sum::<f64>() / noise.len() as f64).sqrt();
    let target_rms = signal_rms * 10f64.powf(-snr_db / 20.0);
    let scale = target_rms / noise_rms;
    let samples = signal
        .samples
        .iter()
        .zip(&noise)
        .map(|(s, n)| s + n * scale)
        .collect();
    Ok(Signal::new(samples, signal.sample_rate))
}

/// Circular rotation by `round(shift_fraction * len)` samples. Keeps length,
/// energy, and the sample multiset.
pub fn time_shift(signal: &Signal, shift_fraction: f64) -> Signal {
    let n = signal.len();
    if n == 0 {
        return signal.clone();
    }
    let k = (shift_fraction * n as f64).round() as i64;
    let k = k.rem_euclid(n as i64) as usize;
    let mut samples = vec![0.0; n];
    for (i, &s) in signal.samples.iter().enumerate() {
        samples[(i + k) % n] = s;
    }
    Signal::new(samples, signal.sample_rate)
}

const PV_FFT: usize = 2048;
const PV_HOP: usize = PV_FFT / 4;

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

/// Complex STFT frames (full spectrum), reflect-centered, Hann window.
fn stft_frames(samples: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let window = hann_window(PV_FFT);
    let pad = PV_FFT / 2;
    let n_frames = 1 + samples.len() / PV_HOP;
    (0..n_frames)
        .map(|f| {
            let start = f as isize * PV_HOP as isize - pad as isize;
            let mut re = vec![0.0; PV_FFT];
            let mut im = vec![0.0; PV_FFT];
            for i in 0..PV_FFT {
                re[i] = samples[reflect_index(start + i as isize, samples.len())] * window[i];
            }
            fft_in_place(&mut re, &mut im);
            (re, im)
        })
        .collect()
}

/// Windowed overlap-add inverse STFT producing `out_len` samples.
fn istft_frames(frames: &[(Vec<f64>, Vec<f64>)], out_len: usize) -> Vec<f64> {
    let window = hann_window(PV_FFT);
    let pad = PV_FFT / 2;
    let mut num = vec![0.0; out_len];
    let mut den = vec![0.0; out_len];
    for (f, (re, im)) in frames.iter().enumerate() {
        let mut r = re.clone();
        let mut i = im.clone();
        ifft_in_place(&mut r, &mut i);
        let start = f as isize * PV_HOP as isize - pad as isize;
        for (j, &w) in window.iter().enumerate() {
            let out_idx = start + j as isize;
            if out_idx >= 0 && (out_idx as usize) < out_len {
                num[out_idx as usize] += w * r[j];
                den[out_idx as usize] += w * w;
            }
        }
    }
    num.iter()
        .zip(&den)
        .map(|(n, d)| if *d > 1e-9 { n / d } else { 0.0 })
        .collect()
}

fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    x - two_pi * (x / two_pi).round()
}

/// Phase-vocoder stretch without range validation: output plays `rate` times
/// faster (length ~ len/rate) at unchanged pitch.
fn pv_stretch(signal: &Signal, rate: f64) -> Signal {
    if rate == 1.0 || signal.len() < 4 {
        return signal.clone();
    }
    let out_len = (signal.len() as f64 / rate).round() as usize;
    let frames = stft_frames(&signal.samples);
    let n_frames = frames.len();
    let n_out_frames = 1 + out_len / PV_HOP;

    let bin_phase_advance: Vec<f64> = (0..PV_FFT)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 * PV_HOP as f64 / PV_FFT as f64)
        .collect();

    let mut phase_acc: Vec<f64> = (0..PV_FFT)
        .map(|k| frames[0].1[k].atan2(frames[0].0[k]))
        .collect();

    let mut out_frames = Vec::with_capacity(n_out_frames);
    for s in 0..n_out_frames {
        let pos = s as f64 * rate;
        let t0 = (pos.floor() as usize).min(n_frames - 1);
        let t1 = (t0 + 1).min(n_frames - 1);
        let alpha = pos - t0 as f64;

        let mut re = vec![0.0; PV_FFT];
        let mut im = vec![0.0; PV_FFT];
        for k in 0..PV_FFT {
            let m0 = (frames[t0].0[k].powi(2) + frames[t0].1[k].powi(2)).sqrt();
            let m1 = (frames[t1].0[k].powi(2) + frames[t1].1[k].powi(2)).sqrt();
            let mag = (1.0 - alpha) * m0 + alpha * m1;
            re[k] = mag * phase_acc[k].cos();
            im[k] = mag * phase_acc[k].sin();
        }
        out_frames.push((re, im));

        // Advance phases by the instantaneous frequency between the two
        // analysis frames.
        for k in 0..PV_FFT {
            let p0 = frames[t0].1[k].atan2(frames[t0].0[k]);
            let p1 = frames[t1].1[k].atan2(frames[t1].0[k]);
            let deviation = if t1 > t0 {
                wrap_phase(p1 - p0 - bin_phase_advance[k])
            } else {
                0.0
            };
            phase_acc[k] += bin_phase_advance[k] + deviation;
        }
    }

    let samples = istft_frames(&out_frames, out_len);
    Signal::new(samples, signal.sample_rate)
}

/// Time stretch preserving pitch. Output length is `round(len / rate)`.
pub fn time_stretch(signal: &Signal, rate: f64) -> Result<Signal> {
    if !(0.8..=1.25).contains(&rate) {
        return Err(Error::Parameter(format!(
            "stretch rate {rate} outside [0.8, 1.25]"
        )));
    }
    Ok(pv_stretch(signal, rate))
}

/// Linear-interpolation playback-speed change by `factor`: output length
/// forced to `out_len`, frequencies scaled by exactly `factor`.
fn resample_speed(signal: &Signal, factor: f64, out_len: usize) -> Signal {
    let n = signal.len();
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * factor;
            let i0 = pos.floor() as usize;
            if i0 + 1 < n {
                let frac = pos - i0 as f64;
                signal.samples[i0] * (1.0 - frac) + signal.samples[i0 + 1] * frac
            } else if i0 < n {
                signal.samples[i0]
            } else {
                0.0
            }
        })
        .collect();
    Signal::new(samples, signal.sample_rate)
}

/// Pitch shift by `semitones`, duration preserved exactly: stretch to
/// `len * factor` at constant pitch, then resample back to `len` which
/// relocates every frequency f to `f * 2^(semitones/12)`.
pub fn pitch_shift(signal: &Signal, semitones: f64) -> Signal {
    if semitones == 0.0 {
        return signal.clone();
    }
    let factor = 2f64.powf(semitones / 12.0);
    let stretched = pv_stretch(signal, 1.0 / factor);
    // Resample by the realized ratio so the output length is exact.
    let realized = stretched.len() as f64 / signal.len() as f64;
    resample_speed(&stretched, realized, signal.len())
}

/// One ledger row per augmented child, making the draw auditable.
#[derive(Debug, Clone)]
pub struct AugmentLedgerEntry {
    pub child_id: String,
    pub parent_id: String,
    pub spec: AugmentSpec,
    pub split: Split,
}

#[derive(Debug, Clone, Default)]
pub struct BalanceOutcome {
    pub records: RecordSet,
    pub ledger: Vec<AugmentLedgerEntry>,
}

/// Bring every class of an already-split record set to exactly
/// `target_per_class` records.
///
/// Classes with at least `target_per_class` originals are sampled down
/// without replacement; smaller classes keep every original and add augmented
/// children (round-robin over parents, spec drawn per child) until the target
/// is met. Children inherit the parent's split, label, and metadata.
pub fn balance_with_augmentation(
    records: &RecordSet,
    target_per_class: usize,
    seed: u64,
) -> Result<BalanceOutcome> {
    for r in records.iter() {
        if r.split.is_none() {
            return Err(Error::Protocol(format!(
                "record {} has no split; augmentation happens after splitting",
                r.id
            )));
        }
    }

    let rng = Rng::new(seed);
    let mut out_records: Vec<Record> = Vec::new();
    let mut ledger = Vec::new();

    for class in ClassLabel::ALL {
        let originals: Vec<&Record> = records
            .iter()
            .filter(|r| map_label(r).map(|l| l == class).unwrap_or(false))
            .collect();
        if originals.is_empty() {
            return Err(Error::CannotBalance {
                class: class.name().to_string(),
                reason: "no original records".into(),
            });
        }

        let mut class_rng = rng.child(10 + class.index() as u64);
        if originals.len() >= target_per_class {
            let mut picks = class_rng.sample_indices(originals.len(), target_per_class);
            picks.sort_unstable();
            for p in picks {
                out_records.push(originals[p].clone());
            }
        } else {
            for r in &originals {
                out_records.push((*r).clone());
            }
            let deficit = target_per_class - originals.len();
            let mut per_parent_counter = vec![0usize; originals.len()];
            for j in 0..deficit {
                let parent = originals[j % originals.len()];
                let spec = AugmentSpec::random(&mut class_rng);
                let child_no = per_parent_counter[j % originals.len()];
                per_parent_counter[j % originals.len()] += 1;
                let child_id = format!("{}-aug{:03}", parent.id, child_no);

                let mut child = parent.clone();
                child.id = child_id.clone();
                child.parent_id = Some(parent.id.clone());
                child.audio_path = String::new(); // filled by materialize_children
                out_records.push(child);

                ledger.push(AugmentLedgerEntry {
                    child_id,
                    parent_id: parent.id.clone(),
                    spec,
                    split: parent.split.unwrap(),
                });
            }
        }
    }

    Ok(BalanceOutcome {
        records: RecordSet::new(out_records),
        ledger,
    })
}

/// Decode each child's parent audio, apply its spec, and write the child WAV
/// beside the originals. Returns the record set with child audio paths set.
pub fn materialize_children(
    outcome: &BalanceOutcome,
    audio_dir: impl AsRef<Path>,
) -> Result<RecordSet> {
    let audio_dir = audio_dir.as_ref();
    std::fs::create_dir_all(audio_dir).map_err(|e| Error::io(audio_dir, e))?;

    let mut records: Vec<Record> = outcome.records.records().to_vec();
    for entry in &outcome.ledger {
        let parent_path = outcome
            .records
            .get(&entry.parent_id)
            .map(|p| p.audio_path.clone())
            .ok_or_else(|| Error::Protocol(format!("ledger parent {} missing", entry.parent_id)))?;
        let parent_signal = read_wav(&parent_path)?;
        let child_signal = apply(&entry.spec, &parent_signal)?;
        let child_path = audio_dir.join(format!("{}.wav", entry.child_id));
        write_wav_pcm16(&child_path, &child_signal)?;
        if let Some(rec) = records.iter_mut().find(|r| r.id == entry.child_id) {
            rec.audio_path = child_path.display().to_string();
        }
    }
    Ok(RecordSet::new(records))
}

/// Write the augmentation ledger CSV: child_id, parent_id, kind, magnitude,
/// seed, split.
pub fn write_ledger_csv(path: impl AsRef<Path>, ledger: &[AugmentLedgerEntry]) -> Result<()> {
    let mut out = String::from("child_id,parent_id,kind,magnitude,seed,split\n");
    for e in ledger {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{}\n",
            e.child_id,
            e.parent_id,
            e.spec.kind.as_str(),
            e.spec.magnitude,
            e.spec.seed,
            e.split.as_str()
        ));
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}
