//! Rendering a mel-spectrogram as a fixed-size 3-channel heatmap image.
//!
//! Pipeline: min-max normalize the dB matrix (constant input maps to 0.5),
//! bilinear-resize to the requested size, then map each scalar through the
//! frozen RGB lookup table.

use super::lut::HEATMAP_LUT;
use super::{HeatmapImage, MelSpectrogram};

/// Min-max normalized copy of the mel matrix, flattened row-major. Constant
/// input maps to 0.5 everywhere.
fn normalize(mel: &MelSpectrogram) -> (Vec<f64>, usize, usize) {
    let data = mel.values.data();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let normalized = if hi > lo {
        data.iter().map(|&v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; data.len()]
    };
    (normalized, mel.values.rows(), mel.values.cols())
}

/// Bilinear resize of a row-major grid, align-corners mapping.
fn resize_bilinear(src: &[f64], rows: usize, cols: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_h * out_w];
    let row_scale = if out_h > 1 { (rows - 1) as f64 / (out_h - 1) as f64 } else { 0.0 };
    let col_scale = if out_w > 1 { (cols - 1) as f64 / (out_w - 1) as f64 } else { 0.0 };
    for i in 0..out_h {
        let y = i as f64 * row_scale;
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(rows - 1);
        let fy = y - y0 as f64;
        for j in 0..out_w {
            let x = j as f64 * col_scale;
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(cols - 1);
            let fx = x - x0 as f64;
            let top = src[y0 * cols + x0] * (1.0 - fx) + src[y0 * cols + x1] * fx;
            let bottom = src[y1 * cols + x0] * (1.0 - fx) + src[y1 * cols + x1] * fx;
            out[i * out_w + j] = top * (1.0 - fy) + bottom * fy;
        }
    }
    out
}

/// LUT index for a normalized scalar.
pub fn lut_index(value: f64) -> usize {
    (value.clamp(0.0, 1.0) * 255.0).round() as usize
}

/// The normalized, resized scalar grid with its LUT indices, exposed for the
/// order-preservation checks.
pub fn heatmap_indices(mel: &MelSpectrogram, height: usize, width: usize) -> (Vec<f64>, Vec<usize>) {
    let (normalized, rows, cols) = normalize(mel);
    let resized = resize_bilinear(&normalized, rows, cols, height, width);
    let indices = resized.iter().map(|&v| lut_index(v)).collect();
    (resized, indices)
}

/// Render the mel matrix as an `height x width x 3` image with values in
/// [0, 1]. Deterministic for a given input.
pub fn render_heatmap(mel: &MelSpectrogram, height: usize, width: usize) -> HeatmapImage {
    debug_assert!(height >= 8 && width >= 8);
    let (_, indices) = heatmap_indices(mel, height, width);
    let mut pixels = Vec::with_capacity(height * width * 3);
    for idx in indices {
        let [r, g, b] = HEATMAP_LUT[idx];
        pixels.push(r as f32 / 255.0);
        pixels.push(g as f32 / 255.0);
        pixels.push(b as f32 / 255.0);
    }
    HeatmapImage {
        height,
        width,
        pixels,
    }
}
