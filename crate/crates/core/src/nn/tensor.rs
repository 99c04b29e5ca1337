//! Dense row-major f64 tensor.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not match {} elements",
            data.len()
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn dim(&self, i: usize) -> usize {
        self.shape[i]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Reinterpret with a new shape of the same element count.
    pub fn reshaped(mut self, shape: &[usize]) -> Tensor {
        assert_eq!(self.data.len(), shape.iter().product::<usize>());
        self.shape = shape.to_vec();
        self
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value in {context}")));
        }
        Ok(())
    }

    pub fn expect_shape(&self, shape: &[usize], context: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{context}: expected {shape:?}, got {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

/// Concatenate `[B, F_i]` tensors along the feature axis.
pub fn concat_features(parts: &[&Tensor]) -> Result<Tensor> {
    let batch = parts[0].dim(0);
    for p in parts {
        if p.rank() != 2 || p.dim(0) != batch {
            return Err(Error::Shape(format!(
                "concat expects [batch, features] with equal batch; got {:?}",
                p.shape()
            )));
        }
    }
    let total: usize = parts.iter().map(|p| p.dim(1)).sum();
    let mut out = Tensor::zeros(&[batch, total]);
    for b in 0..batch {
        let mut at = 0;
        for p in parts {
            let f = p.dim(1);
            out.data_mut()[b * total + at..b * total + at + f]
                .copy_from_slice(&p.data()[b * f..(b + 1) * f]);
            at += f;
        }
    }
    Ok(out)
}

/// Split a `[B, sum(dims)]` gradient back into per-part gradients.
pub fn split_features(grad: &Tensor, dims: &[usize]) -> Vec<Tensor> {
    let batch = grad.dim(0);
    let total: usize = dims.iter().sum();
    debug_assert_eq!(grad.dim(1), total);
    let mut outs: Vec<Tensor> = dims.iter().map(|&d| Tensor::zeros(&[batch, d])).collect();
    for b in 0..batch {
        let mut at = 0;
        for (o, &d) in outs.iter_mut().zip(dims) {
            o.data_mut()[b * d..(b + 1) * d]
                .copy_from_slice(&grad.data()[b * total + at..b * total + at + d]);
            at += d;
        }
    }
    outs
}
