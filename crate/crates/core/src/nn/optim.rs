//! Adam optimizer with bias correction.

use super::layers::Param;

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub struct Adam {
    pub cfg: AdamConfig,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>, // (m, v) per param slot
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Adam {
        Adam {
            cfg,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over the full parameter list. The list must be the same,
    /// in the same order, on every call.
    pub fn step(&mut self, params: &mut [&mut Param]) {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| (vec![0.0; p.value.len()], vec![0.0; p.value.len()]))
                .collect();
        }
        debug_assert_eq!(self.moments.len(), params.len());
        self.step += 1;
        let t = self.step as f64;
        let bias1 = 1.0 - self.cfg.beta1.powf(t);
        let bias2 = 1.0 - self.cfg.beta2.powf(t);

        for (param, (m, v)) in params.iter_mut().zip(&mut self.moments) {
            let grads = param.grad.data().to_vec();
            for ((value, g), (m_i, v_i)) in param
                .value
                .data_mut()
                .iter_mut()
                .zip(&grads)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *m_i = self.cfg.beta1 * *m_i + (1.0 - self.cfg.beta1) * g;
                *v_i = self.cfg.beta2 * *v_i + (1.0 - self.cfg.beta2) * g * g;
                let m_hat = *m_i / bias1;
                let v_hat = *v_i / bias2;
                *value -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn param(values: Vec<f64>, grads: Vec<f64>) -> Param {
        let n = values.len();
        let mut p = Param::new("p", Tensor::from_vec(&[n], values));
        p.grad = Tensor::from_vec(&[n], grads);
        p
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = param(vec![1.0, -2.0], vec![0.0, 0.0]);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]);
        assert_eq!(p.value.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_magnitude_is_about_lr() {
        // With constant gradient g, the bias-corrected first step is
        // lr * g / (|g| + eps') ~ lr * sign(g).
        let mut p = param(vec![0.0], vec![3.7]);
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg);
        adam.step(&mut [&mut p]);
        assert!((p.value.data()[0] + 0.01).abs() < 1e-6, "{}", p.value.data()[0]);
    }

    #[test]
    fn identical_runs_are_identical() {
        let run = || {
            let mut p = param(vec![0.5, 0.5], vec![0.0, 0.0]);
            let mut adam = Adam::new(AdamConfig::default());
            let mut rng = crate::rng::Rng::new(4);
            for _ in 0..25 {
                p.grad = Tensor::from_vec(&[2], vec![rng.normal(), rng.normal()]);
                adam.step(&mut [&mut p]);
            }
            p.value.data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn descends_a_quadratic() {
        // f(x) = x^2, grad = 2x.
        let mut p = param(vec![5.0], vec![0.0]);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg);
        for _ in 0..200 {
            let x = p.value.data()[0];
            p.grad = Tensor::from_vec(&[1], vec![2.0 * x]);
            adam.step(&mut [&mut p]);
        }
        assert!(p.value.data()[0].abs() < 0.5);
    }
}
