//! Minimal RIFF/WAVE reader and writer.
//!
//! Supports PCM 16-bit and IEEE float 32-bit, mono or stereo. Stereo is
//! averaged to mono on decode; integer PCM is scaled to [-1, 1] by 1/32768.

use std::path::Path;

use super::Signal;
use crate::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xfffe;

fn rd_u16(b: &[u8], at: usize) -> Option<u16> {
    b.get(at..at + 2).map(|s| u16::from_le_bytes([s[0], s[1]]))
}

fn rd_u32(b: &[u8], at: usize) -> Option<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
}

/// Decode a WAV container into a mono signal.
pub fn decode_wav(bytes: &[u8]) -> Result<Signal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::UnsupportedFormat("not a RIFF/WAVE container".into()));
    }

    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;

    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = rd_u32(bytes, pos + 4).unwrap() as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if body_start + 16 > bytes.len() {
                    return Err(Error::CorruptFile("truncated fmt chunk".into()));
                }
                let format = rd_u16(bytes, body_start).unwrap();
                let channels = rd_u16(bytes, body_start + 2).unwrap();
                let rate = rd_u32(bytes, body_start + 4).unwrap();
                let bits = rd_u16(bytes, body_start + 14).unwrap();
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => {
                if body_start + size > bytes.len() {
                    return Err(Error::CorruptFile(format!(
                        "data chunk claims {} bytes but only {} remain",
                        size,
                        bytes.len() - body_start
                    )));
                }
                data = Some(&bytes[body_start..body_start + size]);
            }
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_start + size + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::CorruptFile("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::CorruptFile("missing data chunk".into()))?;

    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }
    if rate == 0 {
        return Err(Error::CorruptFile("zero sample rate".into()));
    }

    let effective_format = if format == FORMAT_EXTENSIBLE {
        // Good enough for the files we produce; sub-format parsing omitted.
        if bits == 32 {
            FORMAT_IEEE_FLOAT
        } else {
            FORMAT_PCM
        }
    } else {
        format
    };

    let frames: Vec<f64> = match (effective_format, bits) {
        (FORMAT_PCM, 16) => {
            if data.len() % (2 * channels as usize) != 0 {
                return Err(Error::CorruptFile("data not a whole number of frames".into()));
            }
            let per_frame = channels as usize;
            data.chunks_exact(2 * per_frame)
                .map(|frame| {
                    let mut acc = 0.0;
                    for ch in 0..per_frame {
                        let v = i16::from_le_bytes([frame[2 * ch], frame[2 * ch + 1]]);
                        acc += v as f64 / 32768.0;
                    }
                    acc / per_frame as f64
                })
                .collect()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            if data.len() % (4 * channels as usize) != 0 {
                return Err(Error::CorruptFile("data not a whole number of frames".into()));
            }
            let per_frame = channels as usize;
            data.chunks_exact(4 * per_frame)
                .map(|frame| {
                    let mut acc = 0.0;
                    for ch in 0..per_frame {
                        let v = f32::from_le_bytes([
                            frame[4 * ch],
                            frame[4 * ch + 1],
                            frame[4 * ch + 2],
                            frame[4 * ch + 3],
                        ]);
                        acc += v as f64;
                    }
                    acc / per_frame as f64
                })
                .collect()
        }
        (f, b) => {
            return Err(Error::UnsupportedFormat(format!(
                "format tag {f} with {b} bits (PCM16 and float32 supported)"
            )))
        }
    };

    Ok(Signal::new(frames, rate))
}

fn wav_header(format: u16, bits: u16, sample_rate: u32, n_samples: usize, bytes_per_sample: usize) -> Vec<u8> {
    let data_len = (n_samples * bytes_per_sample) as u32;
    let byte_rate = sample_rate * bytes_per_sample as u32;
    let mut out = Vec::with_capacity(44);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes()); // block align
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    out
}

/// Encode as mono IEEE float 32-bit WAV.
pub fn encode_wav_f32(signal: &Signal) -> Vec<u8> {
    let mut out = wav_header(FORMAT_IEEE_FLOAT, 32, signal.sample_rate, signal.len(), 4);
    for &s in &signal.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Encode as mono PCM 16-bit WAV, clamping to full scale.
pub fn encode_wav_pcm16(signal: &Signal) -> Vec<u8> {
    let mut out = wav_header(FORMAT_PCM, 16, signal.sample_rate, signal.len(), 2);
    for &s in &signal.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    decode_wav(&bytes)
}

pub fn write_wav_f32(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    std::fs::write(path.as_ref(), encode_wav_f32(signal)).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn write_wav_pcm16(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    std::fs::write(path.as_ref(), encode_wav_pcm16(signal)).map_err(|e| Error::io(path.as_ref(), e))
}
