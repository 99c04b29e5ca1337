//! Global average and global maximum pooling over spatial dimensions.

use super::layers::{protocol_backward_before_forward, Layer, Mode};
use super::Tensor;
use crate::{Error, Result};

/// `[B, C, H, W] -> [B, C]` by averaging each feature map.
#[derive(Default)]
pub struct GlobalAvgPool {
    input_shape: Option<Vec<usize>>,
}

impl GlobalAvgPool {
    pub fn new() -> GlobalAvgPool {
        GlobalAvgPool::default()
    }
}

impl Layer for GlobalAvgPool {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        if input.rank() != 4 {
            return Err(Error::Shape(format!("gap expects NCHW, got {:?}", input.shape())));
        }
        let (batch, ch, h, w) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
        let area = (h * w) as f64;
        let mut out = Tensor::zeros(&[batch, ch]);
        for b in 0..batch {
            for c in 0..ch {
                let base = ((b * ch) + c) * h * w;
                let sum: f64 = input.data()[base..base + h * w].iter().sum();
                out.data_mut()[b * ch + c] = sum / area;
            }
        }
        self.input_shape = Some(input.shape().to_vec());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let shape = self
            .input_shape
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("gap"))?;
        let (batch, ch, h, w) = (shape[0], shape[1], shape[2], shape[3]);
        let area = (h * w) as f64;
        let mut grad_in = Tensor::zeros(shape);
        for b in 0..batch {
            for c in 0..ch {
                let g = grad_out.data()[b * ch + c] / area;
                let base = ((b * ch) + c) * h * w;
                grad_in.data_mut()[base..base + h * w].fill(g);
            }
        }
        Ok(grad_in)
    }
}

/// `[B, C, H, W] -> [B, C]` by taking each feature map's maximum. The
/// gradient routes to the first maximum position.
#[derive(Default)]
pub struct GlobalMaxPool {
    input_shape: Option<Vec<usize>>,
    argmax: Vec<usize>,
}

impl GlobalMaxPool {
    pub fn new() -> GlobalMaxPool {
        GlobalMaxPool::default()
    }
}

impl Layer for GlobalMaxPool {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        if input.rank() != 4 {
            return Err(Error::Shape(format!("gmp expects NCHW, got {:?}", input.shape())));
        }
        let (batch, ch, h, w) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
        let mut out = Tensor::zeros(&[batch, ch]);
        self.argmax = vec![0; batch * ch];
        for b in 0..batch {
            for c in 0..ch {
                let base = ((b * ch) + c) * h * w;
                let (mut best, mut best_idx) = (f64::NEG_INFINITY, base);
                for (i, &v) in input.data()[base..base + h * w].iter().enumerate() {
                    if v > best {
                        best = v;
                        best_idx = base + i;
                    }
                }
                out.data_mut()[b * ch + c] = best;
                self.argmax[b * ch + c] = best_idx;
            }
        }
        self.input_shape = Some(input.shape().to_vec());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let shape = self
            .input_shape
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("gmp"))?;
        let mut grad_in = Tensor::zeros(shape);
        for (g, &idx) in grad_out.data().iter().zip(&self.argmax) {
            grad_in.data_mut()[idx] += g;
        }
        Ok(grad_in)
    }
}
