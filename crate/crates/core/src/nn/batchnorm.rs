//! Batch normalization over `[B, F]` (per feature) or `[B, C, H, W]`
//! (per channel), with running statistics for inference.

use super::layers::{protocol_backward_before_forward, Layer, Mode, Param};
use super::Tensor;
use crate::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

struct BnCache {
    input: Tensor,
    normalized: Vec<f64>,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
}

pub struct BatchNorm {
    name: String,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    num_features: usize,
    momentum: f64,
    cache: Option<BnCache>,
}

/// Iterate (feature index, flat element index) for the normalized axes.
fn feature_of(shape: &[usize], flat: usize) -> usize {
    match shape.len() {
        2 => flat % shape[1],
        4 => (flat / (shape[2] * shape[3])) % shape[1],
        _ => unreachable!(),
    }
}

impl BatchNorm {
    pub fn new(name: &str, num_features: usize) -> BatchNorm {
        let mut gamma = Tensor::zeros(&[num_features]);
        gamma.data_mut().fill(1.0);
        BatchNorm {
            name: name.to_string(),
            gamma: Param::new(format!("{name}.gamma"), gamma),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[num_features])),
            running_mean: vec![0.0; num_features],
            running_var: vec![1.0; num_features],
            num_features,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    fn check_shape(&self, input: &Tensor) -> Result<usize> {
        let per_feature = match input.rank() {
            2 if input.dim(1) == self.num_features => input.dim(0),
            4 if input.dim(1) == self.num_features => input.dim(0) * input.dim(2) * input.dim(3),
            _ => {
                return Err(Error::Shape(format!(
                    "batchnorm({}) got input {:?}",
                    self.num_features,
                    input.shape()
                )))
            }
        };
        Ok(per_feature)
    }
}

impl Layer for BatchNorm {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let count = self.check_shape(input)?;
        let f = self.num_features;
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let shape = input.shape().to_vec();

        match mode {
            Mode::Train => {
                if input.dim(0) < 2 {
                    return Err(Error::DegenerateBatch(format!(
                        "batch size {} in train mode; batch statistics need >= 2",
                        input.dim(0)
                    )));
                }
                let mut mean = vec![0.0; f];
                for (i, &v) in input.data().iter().enumerate() {
                    mean[feature_of(&shape, i)] += v;
                }
                for m in &mut mean {
                    *m /= count as f64;
                }
                let mut var = vec![0.0; f];
                for (i, &v) in input.data().iter().enumerate() {
                    let d = v - mean[feature_of(&shape, i)];
                    var[feature_of(&shape, i)] += d * d;
                }
                for v in &mut var {
                    *v /= count as f64;
                }

                let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + BN_EPS).sqrt()).collect();
                let mut normalized = vec![0.0; input.len()];
                let mut out = Tensor::zeros(&shape);
                for (i, &v) in input.data().iter().enumerate() {
                    let c = feature_of(&shape, i);
                    let n = (v - mean[c]) * inv_std[c];
                    normalized[i] = n;
                    out.data_mut()[i] = gamma[c] * n + beta[c];
                }

                for c in 0..f {
                    self.running_mean[c] =
                        self.momentum * self.running_mean[c] + (1.0 - self.momentum) * mean[c];
                    self.running_var[c] =
                        self.momentum * self.running_var[c] + (1.0 - self.momentum) * var[c];
                }

                self.cache = Some(BnCache {
                    input: input.clone(),
                    normalized,
                    mean,
                    inv_std,
                    mode,
                });
                Ok(out)
            }
            Mode::Infer => {
                let mut out = Tensor::zeros(&shape);
                let inv_std: Vec<f64> = self
                    .running_var
                    .iter()
                    .map(|&v| 1.0 / (v + BN_EPS).sqrt())
                    .collect();
                for (i, &v) in input.data().iter().enumerate() {
                    let c = feature_of(&shape, i);
                    out.data_mut()[i] = gamma[c] * (v - self.running_mean[c]) * inv_std[c] + beta[c];
                }
                self.cache = Some(BnCache {
                    input: input.clone(),
                    normalized: Vec::new(),
                    mean: Vec::new(),
                    inv_std,
                    mode,
                });
                Ok(out)
            }
        }
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("batchnorm"))?;
        let shape = cache.input.shape().to_vec();
        let f = self.num_features;
        let gamma = self.gamma.value.data();

        match cache.mode {
            Mode::Infer => {
                // Running statistics are constants here; gamma and beta are
                // still differentiable.
                let mut grad_in = Tensor::zeros(&shape);
                let dgamma = self.gamma.grad.data_mut();
                let dbeta = self.beta.grad.data_mut();
                for (i, &g) in grad_out.data().iter().enumerate() {
                    let c = feature_of(&shape, i);
                    let normalized =
                        (cache.input.data()[i] - self.running_mean[c]) * cache.inv_std[c];
                    dgamma[c] += g * normalized;
                    dbeta[c] += g;
                    grad_in.data_mut()[i] = g * gamma[c] * cache.inv_std[c];
                }
                Ok(grad_in)
            }
            Mode::Train => {
                let count = self.check_shape(&cache.input)? as f64;
                let mut sum_g = vec![0.0; f];
                let mut sum_g_xhat = vec![0.0; f];
                for (i, &g) in grad_out.data().iter().enumerate() {
                    let c = feature_of(&shape, i);
                    sum_g[c] += g;
                    sum_g_xhat[c] += g * cache.normalized[i];
                }

                {
                    let dgamma = self.gamma.grad.data_mut();
                    let dbeta = self.beta.grad.data_mut();
                    for c in 0..f {
                        dgamma[c] += sum_g_xhat[c];
                        dbeta[c] += sum_g[c];
                    }
                }

                // dx = gamma * inv_std * (g - mean(g) - xhat * mean(g*xhat))
                let mut grad_in = Tensor::zeros(&shape);
                for (i, &g) in grad_out.data().iter().enumerate() {
                    let c = feature_of(&shape, i);
                    grad_in.data_mut()[i] = gamma[c]
                        * cache.inv_std[c]
                        * (g - sum_g[c] / count - cache.normalized[i] * sum_g_xhat[c] / count);
                }
                let _ = &cache.mean;
                Ok(grad_in)
            }
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        vec![
            (format!("{}.running_mean", self.name), self.running_mean.clone()),
            (format!("{}.running_var", self.name), self.running_var.clone()),
        ]
    }

    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        if name == format!("{}.running_mean", self.name) && data.len() == self.num_features {
            self.running_mean.copy_from_slice(data);
            true
        } else if name == format!("{}.running_var", self.name) && data.len() == self.num_features {
            self.running_var.copy_from_slice(data);
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn train_output_is_standardized_before_affine() {
        let mut bn = BatchNorm::new("bn", 3);
        let mut rng = Rng::new(5);
        let data: Vec<f64> = (0..30).map(|_| rng.range(-4.0, 9.0)).collect();
        let x = Tensor::from_vec(&[10, 3], data);
        let y = bn.forward(&x, Mode::Train).unwrap();
        for c in 0..3 {
            let col: Vec<f64> = (0..10).map(|b| y.data()[b * 3 + c]).collect();
            let mean = col.iter().sum::<f64>() / 10.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 10.0;
            assert!(mean.abs() < 1e-10, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
        }
    }

    #[test]
    fn already_normalized_batch_is_nearly_unchanged() {
        let mut bn = BatchNorm::new("bn", 1);
        // Mean 0, variance 1 column.
        let x = Tensor::from_vec(&[4, 1], vec![-1.0, 1.0, -1.0, 1.0]);
        let y = bn.forward(&x, Mode::Train).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn batch_of_one_is_degenerate_in_train_mode() {
        let mut bn = BatchNorm::new("bn", 2);
        let x = Tensor::zeros(&[1, 2]);
        assert!(matches!(
            bn.forward(&x, Mode::Train),
            Err(Error::DegenerateBatch(_))
        ));
        // Infer mode accepts it.
        assert!(bn.forward(&x, Mode::Infer).is_ok());
    }

    #[test]
    fn running_stats_follow_the_ema_closed_form() {
        let mut bn = BatchNorm::new("bn", 1);
        // Stream of batches with known means/vars.
        let batches = [
            (vec![1.0, 3.0], 2.0, 1.0),
            (vec![4.0, 8.0], 6.0, 4.0),
            (vec![-2.0, 2.0], 0.0, 4.0),
        ];
        let mut expect_mean = 0.0;
        let mut expect_var = 1.0;
        for (data, mean, var) in &batches {
            let x = Tensor::from_vec(&[2, 1], data.clone());
            bn.forward(&x, Mode::Train).unwrap();
            expect_mean = BN_MOMENTUM * expect_mean + (1.0 - BN_MOMENTUM) * mean;
            expect_var = BN_MOMENTUM * expect_var + (1.0 - BN_MOMENTUM) * var;
        }
        assert!((bn.running_mean[0] - expect_mean).abs() < 1e-12);
        assert!((bn.running_var[0] - expect_var).abs() < 1e-12);
    }

    #[test]
    fn channel_norm_over_nchw() {
        let mut bn = BatchNorm::new("bn", 2);
        let mut rng = Rng::new(6);
        let data: Vec<f64> = (0..2 * 2 * 3 * 3).map(|_| rng.range(0.0, 10.0)).collect();
        let x = Tensor::from_vec(&[2, 2, 3, 3], data);
        let y = bn.forward(&x, Mode::Train).unwrap();
        for c in 0..2 {
            let mut vals = Vec::new();
            for b in 0..2 {
                for i in 0..9 {
                    vals.push(y.data()[((b * 2) + c) * 9 + i]);
                }
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-10);
        }
    }
}
