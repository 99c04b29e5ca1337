//! Audio primitives: mono signals, WAV decode/encode, half-rate downsampling,
//! fixed-length chunking, and deterministic synthetic cough generation.

mod resample;
mod synth;
mod wav;

pub use resample::{design_lowpass_fir, downsample_half};
pub use synth::{generate_corpus, synth_cough, CorpusSpec, SynthParams};
pub use wav::{decode_wav, encode_wav_f32, encode_wav_pcm16, read_wav, write_wav_f32, write_wav_pcm16};

use crate::{Error, Result};

/// Mono PCM sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Signal {
        debug_assert!(sample_rate > 0);
        Signal {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// Fixed-length slice of one record's signal.
#[derive(Debug, Clone)]
pub struct AudioChunk {
    pub signal: Signal,
    pub source_record: String,
    pub index: usize,
}

/// Cut a signal into fixed-length chunks.
///
/// A trailing remainder covering at least half a chunk is zero-padded to full
/// length; shorter remainders are dropped. A signal shorter than half a chunk
/// yields a single zero-padded chunk.
pub fn chunk(signal: &Signal, source_record: &str, chunk_seconds: f64, hop_seconds: f64) -> Result<Vec<AudioChunk>> {
    if signal.is_empty() {
        return Err(Error::EmptyInput(format!(
            "cannot chunk empty signal for record {source_record}"
        )));
    }
    if chunk_seconds <= 0.0 || hop_seconds <= 0.0 || hop_seconds > chunk_seconds {
        return Err(Error::Parameter(format!(
            "invalid chunking: chunk {chunk_seconds}s hop {hop_seconds}s"
        )));
    }

    let chunk_len = (chunk_seconds * signal.sample_rate as f64).round() as usize;
    let hop_len = (hop_seconds * signal.sample_rate as f64).round() as usize;
    let n = signal.len();

    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let remaining = n.saturating_sub(start);
        if remaining >= chunk_len {
            chunks.push(AudioChunk {
                signal: Signal::new(
                    signal.samples[start..start + chunk_len].to_vec(),
                    signal.sample_rate,
                ),
                source_record: source_record.to_string(),
                index: chunks.len(),
            });
        } else {
            // Remainder: pad if it covers >= 50% of a chunk, or if nothing was
            // emitted yet (short signal -> one padded chunk).
            let keep = remaining * 2 >= chunk_len || chunks.is_empty();
            if keep && remaining > 0 {
                let mut samples = signal.samples[start..].to_vec();
                samples.resize(chunk_len, 0.0);
                chunks.push(AudioChunk {
                    signal: Signal::new(samples, signal.sample_rate),
                    source_record: source_record.to_string(),
                    index: chunks.len(),
                });
            }
            break;
        }
        start += hop_len;
        if start >= n {
            break;
        }
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(seconds: f64, rate: u32) -> Signal {
        let n = (seconds * rate as f64).round() as usize;
        Signal::new((0..n).map(|i| (i as f64 * 0.001).sin()).collect(), rate)
    }

    #[test]
    fn exact_multiple_yields_exact_chunks() {
        let s = sig(4.0, 1000);
        let chunks = chunk(&s, "r", 2.0, 2.0).unwrap();
        assert_eq!(chunks.len(), 2);
        assert!(chunks.iter().all(|c| c.signal.len() == 2000));
    }

    #[test]
    fn half_remainder_is_padded() {
        let s = sig(5.0, 1000);
        let chunks = chunk(&s, "r", 2.0, 2.0).unwrap();
        assert_eq!(chunks.len(), 3);
        // Last chunk: 1s of data + 1s of padding.
        let last = &chunks[2].signal;
        assert_eq!(last.len(), 2000);
        assert!(last.samples[1000..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn small_remainder_is_dropped() {
        let s = sig(4.9, 1000);
        let chunks = chunk(&s, "r", 2.0, 2.0).unwrap();
        assert_eq!(chunks.len(), 2);
    }

    #[test]
    fn short_signal_yields_one_padded_chunk() {
        let s = sig(0.5, 1000);
        let chunks = chunk(&s, "r", 2.0, 2.0).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].signal.len(), 2000);
    }

    #[test]
    fn empty_signal_is_an_error() {
        let s = Signal::new(vec![], 1000);
        assert!(chunk(&s, "r", 2.0, 2.0).is_err());
    }

    #[test]
    fn indices_are_contiguous_and_lengths_equal() {
        let s = sig(7.3, 8000);
        let chunks = chunk(&s, "r", 2.0, 1.0).unwrap();
        for (i, c) in chunks.iter().enumerate() {
            assert_eq!(c.index, i);
            assert_eq!(c.signal.len(), 16000);
        }
    }

    #[test]
    fn non_padded_spans_reassemble_the_source() {
        let s = sig(6.0, 1000);
        let chunks = chunk(&s, "r", 2.0, 2.0).unwrap();
        let rebuilt: Vec<f64> = chunks
            .iter()
            .flat_map(|c| c.signal.samples.iter().copied())
            .collect();
        assert_eq!(rebuilt, s.samples);
    }
}
