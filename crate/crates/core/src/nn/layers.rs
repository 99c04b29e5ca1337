//! Layer trait and the dense-path layers: fully connected, ReLU, dropout,
//! and sequential composition.

use super::Tensor;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A named parameter tensor with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Param {
        let grad = Tensor::zeros(value.shape());
        Param {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Differentiable layer: forward caches whatever backward needs; backward
/// consumes the upstream gradient, accumulates parameter gradients, and
/// returns the input gradient.
pub trait Layer {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor>;
    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor>;
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
    /// Non-parameter state that checkpoints must carry (batchnorm running
    /// statistics).
    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        Vec::new()
    }
    /// Restore one named state entry; returns true if this layer consumed it.
    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        let _ = (name, data);
        false
    }
}

pub(crate) fn protocol_backward_before_forward(layer: &str) -> Error {
    Error::Protocol(format!("{layer}: backward called before forward"))
}

/// Fully connected layer: y = x W^T + b. Weights fan-in-scaled uniform.
pub struct Dense {
    pub weight: Param, // [out, in]
    pub bias: Param,   // [out]
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, in_features: usize, out_features: usize, rng: &mut Rng) -> Dense {
        let limit = 1.0 / (in_features as f64).sqrt();
        let w: Vec<f64> = (0..out_features * in_features)
            .map(|_| rng.range(-limit, limit))
            .collect();
        Dense {
            weight: Param::new(format!("{name}.w"), Tensor::from_vec(&[out_features, in_features], w)),
            bias: Param::new(format!("{name}.b"), Tensor::zeros(&[out_features])),
            input: None,
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.value.dim(1)
    }

    pub fn out_features(&self) -> usize {
        self.weight.value.dim(0)
    }
}

impl Layer for Dense {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        let (n_in, n_out) = (self.in_features(), self.out_features());
        if input.rank() != 2 || input.dim(1) != n_in {
            return Err(Error::Shape(format!(
                "dense {}: input {:?} incompatible with weight [{n_out}, {n_in}]",
                self.weight.name,
                input.shape()
            )));
        }
        let batch = input.dim(0);
        let mut out = Tensor::zeros(&[batch, n_out]);
        let w = self.weight.value.data();
        let b = self.bias.value.data();
        for i in 0..batch {
            let x = &input.data()[i * n_in..(i + 1) * n_in];
            let y = &mut out.data_mut()[i * n_out..(i + 1) * n_out];
            for (o, y_o) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = b[o];
                for (xv, wv) in x.iter().zip(row) {
                    acc += xv * wv;
                }
                *y_o = acc;
            }
        }
        self.input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("dense"))?;
        let (n_in, n_out) = (self.in_features(), self.out_features());
        let batch = input.dim(0);
        let mut grad_in = Tensor::zeros(&[batch, n_in]);
        let w = self.weight.value.data();
        {
            let dw = self.weight.grad.data_mut();
            let db = self.bias.grad.data_mut();
            for i in 0..batch {
                let x = &input.data()[i * n_in..(i + 1) * n_in];
                let g = &grad_out.data()[i * n_out..(i + 1) * n_out];
                let gx = &mut grad_in.data_mut()[i * n_in..(i + 1) * n_in];
                for (o, &g_o) in g.iter().enumerate() {
                    db[o] += g_o;
                    let w_row = &w[o * n_in..(o + 1) * n_in];
                    let dw_row = &mut dw[o * n_in..(o + 1) * n_in];
                    for j in 0..n_in {
                        dw_row[j] += g_o * x[j];
                        gx[j] += g_o * w_row[j];
                    }
                }
            }
        }
        Ok(grad_in)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Elementwise max(0, x).
#[derive(Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Relu {
        Relu::default()
    }
}

impl Layer for Relu {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        let mut out = input.clone();
        let mask: Vec<bool> = input.data().iter().map(|&v| v > 0.0).collect();
        for (v, &keep) in out.data_mut().iter_mut().zip(&mask) {
            if !keep {
                *v = 0.0;
            }
        }
        self.mask = Some(mask);
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mask = self
            .mask
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("relu"))?;
        let mut grad = grad_out.clone();
        for (g, &keep) in grad.data_mut().iter_mut().zip(mask) {
            if !keep {
                *g = 0.0;
            }
        }
        Ok(grad)
    }
}

/// Inverted dropout: train-mode masks with probability `rate` and scales by
/// 1/(1-rate); infer mode is the identity.
pub struct Dropout {
    rate: f64,
    rng: Rng,
    seed: u64,
    mask: Option<Vec<f64>>,
    mode: Mode,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Dropout {
        debug_assert!((0.0..1.0).contains(&rate));
        Dropout {
            rate,
            rng: Rng::new(seed),
            seed,
            mask: None,
            mode: Mode::Infer,
        }
    }

    /// Reset the mask stream; makes a train-mode forward reproducible.
    pub fn reset_seed(&mut self) {
        self.rng = Rng::new(self.seed);
    }
}

impl Layer for Dropout {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        self.mode = mode;
        match mode {
            Mode::Infer => {
                self.mask = None;
                Ok(input.clone())
            }
            Mode::Train => {
                if self.rate == 0.0 {
                    self.mask = Some(vec![1.0; input.len()]);
                    return Ok(input.clone());
                }
                let keep = 1.0 - self.rate;
                let mask: Vec<f64> = (0..input.len())
                    .map(|_| if self.rng.uniform() >= self.rate { 1.0 / keep } else { 0.0 })
                    .collect();
                let mut out = input.clone();
                for (v, m) in out.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                self.mask = Some(mask);
                Ok(out)
            }
        }
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        match self.mode {
            Mode::Infer => Ok(grad_out.clone()),
            Mode::Train => {
                let mask = self
                    .mask
                    .as_ref()
                    .ok_or_else(|| protocol_backward_before_forward("dropout"))?;
                let mut grad = grad_out.clone();
                for (g, m) in grad.data_mut().iter_mut().zip(mask) {
                    *g *= m;
                }
                Ok(grad)
            }
        }
    }
}

/// Chain of layers applied in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new() -> Sequential {
        Sequential::default()
    }

    pub fn push(&mut self, layer: impl Layer + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

impl Layer for Sequential {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, mode)?;
        }
        Ok(x)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        self.layers.iter().flat_map(|l| l.extra_state()).collect()
    }

    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        self.layers.iter_mut().any(|l| l.set_extra_state(name, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_linear_case_gradients() {
        // loss = sum(output) -> dW = outer(1, x), db = 1, dx = col-sums of W.
        let mut rng = Rng::new(1);
        let mut dense = Dense::new("d", 3, 2, &mut rng);
        let x = Tensor::from_vec(&[1, 3], vec![0.5, -1.0, 2.0]);
        let y = dense.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.shape(), &[1, 2]);
        let ones = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]);
        let gx = dense.backward(&ones).unwrap();
        for o in 0..2 {
            for j in 0..3 {
                assert!((dense.weight.grad.data()[o * 3 + j] - x.data()[j]).abs() < 1e-12);
            }
            assert!((dense.bias.grad.data()[o] - 1.0).abs() < 1e-12);
        }
        for j in 0..3 {
            let expect = dense.weight.value.data()[j] + dense.weight.value.data()[3 + j];
            assert!((gx.data()[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_shape_mismatch_reports_both_shapes() {
        let mut rng = Rng::new(1);
        let mut dense = Dense::new("d", 3, 2, &mut rng);
        let x = Tensor::zeros(&[1, 4]);
        let err = dense.forward(&x, Mode::Infer).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1, 4]") && msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn backward_before_forward_is_a_protocol_error() {
        let mut rng = Rng::new(1);
        let mut dense = Dense::new("d", 2, 2, &mut rng);
        let g = Tensor::zeros(&[1, 2]);
        assert!(matches!(dense.backward(&g), Err(Error::Protocol(_))));
    }

    #[test]
    fn dropout_is_identity_in_infer_mode() {
        let mut drop = Dropout::new(0.5, 3);
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = drop.forward(&x, Mode::Infer).unwrap();
        assert_eq!(y.data(), x.data());
        let g = Tensor::from_vec(&[2, 2], vec![0.1, 0.2, 0.3, 0.4]);
        let gx = drop.backward(&g).unwrap();
        assert_eq!(gx.data(), g.data());
    }

    #[test]
    fn dropout_train_mode_masks_and_scales() {
        let mut drop = Dropout::new(0.5, 3);
        let x = Tensor::from_vec(&[1, 1000], vec![1.0; 1000]);
        let y = drop.forward(&x, Mode::Train).unwrap();
        let kept = y.data().iter().filter(|&&v| v != 0.0).count();
        assert!((300..700).contains(&kept), "kept {kept}");
        for &v in y.data() {
            assert!(v == 0.0 || (v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_mask_is_reproducible_after_reset() {
        let mut drop = Dropout::new(0.3, 9);
        let x = Tensor::from_vec(&[1, 64], vec![1.0; 64]);
        let a = drop.forward(&x, Mode::Train).unwrap();
        drop.reset_seed();
        let b = drop.forward(&x, Mode::Train).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn relu_zeroes_negatives_and_their_grads() {
        let mut relu = Relu::new();
        let x = Tensor::from_vec(&[1, 4], vec![-1.0, 0.0, 2.0, -3.0]);
        let y = relu.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0, 0.0]);
        let g = Tensor::from_vec(&[1, 4], vec![1.0, 1.0, 1.0, 1.0]);
        let gx = relu.backward(&g).unwrap();
        assert_eq!(gx.data(), &[0.0, 0.0, 1.0, 0.0]);
    }
}
