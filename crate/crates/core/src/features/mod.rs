//! Per-chunk feature extraction: mel-spectrogram heatmaps, 13-coefficient
//! MFCC vectors, and the keyed feature store that feeds the model.

mod heatmap;
mod lut;
mod mel;
mod mfcc;
mod stft;
mod store;

pub use heatmap::{heatmap_indices, lut_index, render_heatmap};
pub use lut::HEATMAP_LUT;
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, DB_FLOOR};
pub use mfcc::mfcc;
pub use stft::{fft_in_place, hann_window, ifft_in_place, power_spectrogram};
pub use store::FeatureStore;

use serde::{Deserialize, Serialize};

use crate::audio::AudioChunk;
use crate::ingest::{encode_clinical, map_label, ClinicalSchema, ClinicalVector, ClassLabel, Record, Split};
use crate::{Error, Result};

/// Number of cepstral coefficients kept.
pub const N_MFCC: usize = 13;

/// Plain row-major matrix of f64, used by the DSP stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// STFT/mel parameters. Defaults are the common 22 kHz analysis settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// None means Nyquist (sample_rate / 2).
    pub fmax: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            fmin: 0.0,
            fmax: None,
        }
    }
}

/// Log-power mel-spectrogram, `n_mels x n_frames`, in dB.
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub values: Mat,
    pub n_mels: usize,
    pub frame_hop: usize,
    pub sample_rate: u32,
}

/// Time-averaged first 13 MFCCs.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccVector {
    pub coeffs: [f64; N_MFCC],
}

/// `height x width x 3` image, channel-last, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
}

/// The model's per-chunk input: heatmap + MFCC vector + clinical bits, tagged
/// with its provenance.
#[derive(Debug, Clone)]
pub struct FeatureTriple {
    pub record_id: String,
    pub chunk_index: usize,
    pub label: ClassLabel,
    pub split: Split,
    pub heatmap: HeatmapImage,
    pub mfcc: MfccVector,
    pub clinical: ClinicalVector,
}

impl FeatureTriple {
    /// Store key; zero-padded so lexicographic order equals chunk order.
    pub fn key(&self) -> String {
        format!("{}/{:04}", self.record_id, self.chunk_index)
    }
}

/// Features for one chunk: heatmap + MFCC from the chunk audio.
pub fn featurize_chunk(
    chunk: &AudioChunk,
    cfg: &FeatureConfig,
    heatmap_size: usize,
) -> Result<(HeatmapImage, MfccVector)> {
    let mel = mel_spectrogram(&chunk.signal, cfg)?;
    let image = render_heatmap(&mel, heatmap_size, heatmap_size);
    let coeffs = mfcc(&mel)?;
    Ok((image, coeffs))
}

/// One [`FeatureTriple`] per chunk of a record. The record must already be
/// labeled (resolvable status) and assigned to a split.
pub fn featurize_record(
    record: &Record,
    chunks: &[AudioChunk],
    schema: &ClinicalSchema,
    cfg: &FeatureConfig,
    heatmap_size: usize,
) -> Result<Vec<FeatureTriple>> {
    if chunks.is_empty() {
        return Err(Error::EmptyInput(format!("record {} has no chunks", record.id)));
    }
    let label = map_label(record)?;
    let split = record.split.ok_or_else(|| {
        Error::Protocol(format!("record {} has no split assignment", record.id))
    })?;
    let clinical = encode_clinical(record, schema);

    let mut triples = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        let (heatmap, mfcc) = featurize_chunk(chunk, cfg, heatmap_size)?;
        triples.push(FeatureTriple {
            record_id: record.id.clone(),
            chunk_index: chunk.index,
            label,
            split,
            heatmap,
            mfcc,
            clinical: clinical.clone(),
        });
    }
    Ok(triples)
}
