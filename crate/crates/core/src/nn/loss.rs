//! Softmax and the fused softmax + cross-entropy training objective.

use super::layers::{protocol_backward_before_forward, Layer, Mode};
use super::Tensor;
use crate::{Error, Result};

/// Row-wise numerically stable softmax over the last axis of a `[B, C]`
/// tensor.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let (batch, classes) = (logits.dim(0), logits.dim(1));
    let mut out = Tensor::zeros(&[batch, classes]);
    for b in 0..batch {
        let row = &logits.data()[b * classes..(b + 1) * classes];
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (c, e) in exps.iter().enumerate() {
            out.data_mut()[b * classes + c] = e / sum;
        }
    }
    out
}

/// Softmax as a layer (used by inference-only heads).
#[derive(Default)]
pub struct Softmax {
    probs: Option<Tensor>,
}

impl Softmax {
    pub fn new() -> Softmax {
        Softmax::default()
    }
}

impl Layer for Softmax {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        if input.rank() != 2 {
            return Err(Error::Shape(format!(
                "softmax expects [batch, classes], got {:?}",
                input.shape()
            )));
        }
        let out = softmax_rows(input);
        self.probs = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let probs = self
            .probs
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("softmax"))?;
        let (batch, classes) = (probs.dim(0), probs.dim(1));
        let mut grad_in = Tensor::zeros(&[batch, classes]);
        for b in 0..batch {
            let p = &probs.data()[b * classes..(b + 1) * classes];
            let g = &grad_out.data()[b * classes..(b + 1) * classes];
            let dot: f64 = p.iter().zip(g).map(|(pv, gv)| pv * gv).sum();
            for c in 0..classes {
                grad_in.data_mut()[b * classes + c] = p[c] * (g[c] - dot);
            }
        }
        Ok(grad_in)
    }
}

/// Cross-entropy against one-hot labels from already-normalized
/// probabilities: `-mean(log p_true)` with p floored at 1e-12.
pub fn cross_entropy_from_probs(probs: &Tensor, onehot: &Tensor) -> Result<f64> {
    probs.expect_shape(onehot.shape(), "cross_entropy labels")?;
    let (batch, classes) = (probs.dim(0), probs.dim(1));
    for b in 0..batch {
        let sum: f64 = probs.data()[b * classes..(b + 1) * classes].iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Shape(format!(
                "probability row {b} sums to {sum}, not 1"
            )));
        }
    }
    let mut loss = 0.0;
    for b in 0..batch {
        for c in 0..classes {
            let y = onehot.data()[b * classes + c];
            if y > 0.0 {
                loss -= y * probs.data()[b * classes + c].max(1e-12).ln();
            }
        }
    }
    Ok(loss / batch as f64)
}

/// Fused softmax + cross-entropy, computed in log-space.
///
/// Returns `(loss, probs, dlogits)` with `dlogits = (probs - onehot) / B`,
/// ready to feed backward.
pub fn softmax_cross_entropy(logits: &Tensor, onehot: &Tensor) -> Result<(f64, Tensor, Tensor)> {
    logits.expect_shape(onehot.shape(), "softmax_cross_entropy labels")?;
    let (batch, classes) = (logits.dim(0), logits.dim(1));
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    for b in 0..batch {
        let row = &logits.data()[b * classes..(b + 1) * classes];
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let logsumexp = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        for c in 0..classes {
            let y = onehot.data()[b * classes + c];
            if y > 0.0 {
                loss -= y * (row[c] - logsumexp);
            }
        }
    }
    loss /= batch as f64;

    let mut dlogits = Tensor::zeros(&[batch, classes]);
    for i in 0..batch * classes {
        dlogits.data_mut()[i] = (probs.data()[i] - onehot.data()[i]) / batch as f64;
    }
    Ok((loss, probs, dlogits))
}

/// One-hot encode class indices.
pub fn one_hot(labels: &[usize], classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (b, &c) in labels.iter().enumerate() {
        t.data_mut()[b * classes + c] = 1.0;
    }
    t
}
