//! Residual blocks: the two-conv basic block and the 1x1/3x3/1x1 bottleneck.

use super::batchnorm::BatchNorm;
use super::conv::Conv2d;
use super::layers::{Layer, Mode, Param, Relu};
use super::Tensor;
use crate::rng::Rng;
use crate::Result;

fn add_into(a: &mut Tensor, b: &Tensor) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += y;
    }
}

/// conv3x3 -> BN -> ReLU -> conv3x3 -> BN, plus a (possibly projected)
/// shortcut, ReLU after the sum.
pub struct BasicBlock {
    conv1: Conv2d,
    bn1: BatchNorm,
    relu1: Relu,
    conv2: Conv2d,
    bn2: BatchNorm,
    shortcut: Option<(Conv2d, BatchNorm)>,
    relu_out: Relu,
}

impl BasicBlock {
    pub fn new(name: &str, in_ch: usize, out_ch: usize, stride: usize, rng: &mut Rng) -> BasicBlock {
        let shortcut = if stride != 1 || in_ch != out_ch {
            Some((
                Conv2d::new_no_bias(&format!("{name}.sc"), in_ch, out_ch, 1, stride, 0, rng),
                BatchNorm::new(&format!("{name}.sc_bn"), out_ch),
            ))
        } else {
            None
        };
        BasicBlock {
            conv1: Conv2d::new_no_bias(&format!("{name}.conv1"), in_ch, out_ch, 3, stride, 1, rng),
            bn1: BatchNorm::new(&format!("{name}.bn1"), out_ch),
            relu1: Relu::new(),
            conv2: Conv2d::new_no_bias(&format!("{name}.conv2"), out_ch, out_ch, 3, 1, 1, rng),
            bn2: BatchNorm::new(&format!("{name}.bn2"), out_ch),
            shortcut,
            relu_out: Relu::new(),
        }
    }
}

impl Layer for BasicBlock {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let mut h = self.conv1.forward(input, mode)?;
        h = self.bn1.forward(&h, mode)?;
        h = self.relu1.forward(&h, mode)?;
        h = self.conv2.forward(&h, mode)?;
        h = self.bn2.forward(&h, mode)?;
        let sc = match &mut self.shortcut {
            Some((conv, bn)) => {
                let s = conv.forward(input, mode)?;
                bn.forward(&s, mode)?
            }
            None => input.clone(),
        };
        add_into(&mut h, &sc);
        self.relu_out.forward(&h, mode)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let g_sum = self.relu_out.backward(grad_out)?;
        // Main path.
        let mut g = self.bn2.backward(&g_sum)?;
        g = self.conv2.backward(&g)?;
        g = self.relu1.backward(&g)?;
        g = self.bn1.backward(&g)?;
        let mut g_input = self.conv1.backward(&g)?;
        // Shortcut path.
        let g_sc = match &mut self.shortcut {
            Some((conv, bn)) => {
                let s = bn.backward(&g_sum)?;
                conv.backward(&s)?
            }
            None => g_sum,
        };
        add_into(&mut g_input, &g_sc);
        Ok(g_input)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.conv1.params();
        p.extend(self.bn1.params());
        p.extend(self.conv2.params());
        p.extend(self.bn2.params());
        if let Some((conv, bn)) = &self.shortcut {
            p.extend(conv.params());
            p.extend(bn.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.conv1.params_mut();
        p.extend(self.bn1.params_mut());
        p.extend(self.conv2.params_mut());
        p.extend(self.bn2.params_mut());
        if let Some((conv, bn)) = &mut self.shortcut {
            p.extend(conv.params_mut());
            p.extend(bn.params_mut());
        }
        p
    }

    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        let mut s = self.bn1.extra_state();
        s.extend(self.bn2.extra_state());
        if let Some((_, bn)) = &self.shortcut {
            s.extend(bn.extra_state());
        }
        s
    }

    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        self.bn1.set_extra_state(name, data)
            || self.bn2.set_extra_state(name, data)
            || self
                .shortcut
                .as_mut()
                .is_some_and(|(_, bn)| bn.set_extra_state(name, data))
    }
}

/// 1x1 reduce -> 3x3 -> 1x1 expand (x4), the ResNet-50 block shape.
pub struct BottleneckBlock {
    conv1: Conv2d,
    bn1: BatchNorm,
    relu1: Relu,
    conv2: Conv2d,
    bn2: BatchNorm,
    relu2: Relu,
    conv3: Conv2d,
    bn3: BatchNorm,
    shortcut: Option<(Conv2d, BatchNorm)>,
    relu_out: Relu,
}

pub const BOTTLENECK_EXPANSION: usize = 4;

impl BottleneckBlock {
    pub fn new(name: &str, in_ch: usize, width: usize, stride: usize, rng: &mut Rng) -> BottleneckBlock {
        let out_ch = width * BOTTLENECK_EXPANSION;
        let shortcut = if stride != 1 || in_ch != out_ch {
            Some((
                Conv2d::new_no_bias(&format!("{name}.sc"), in_ch, out_ch, 1, stride, 0, rng),
                BatchNorm::new(&format!("{name}.sc_bn"), out_ch),
            ))
        } else {
            None
        };
        BottleneckBlock {
            conv1: Conv2d::new_no_bias(&format!("{name}.conv1"), in_ch, width, 1, 1, 0, rng),
            bn1: BatchNorm::new(&format!("{name}.bn1"), width),
            relu1: Relu::new(),
            conv2: Conv2d::new_no_bias(&format!("{name}.conv2"), width, width, 3, stride, 1, rng),
            bn2: BatchNorm::new(&format!("{name}.bn2"), width),
            relu2: Relu::new(),
            conv3: Conv2d::new_no_bias(&format!("{name}.conv3"), width, out_ch, 1, 1, 0, rng),
            bn3: BatchNorm::new(&format!("{name}.bn3"), out_ch),
            shortcut,
            relu_out: Relu::new(),
        }
    }
}

impl Layer for BottleneckBlock {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let mut h = self.conv1.forward(input, mode)?;
        h = self.bn1.forward(&h, mode)?;
        h = self.relu1.forward(&h, mode)?;
        h = self.conv2.forward(&h, mode)?;
        h = self.bn2.forward(&h, mode)?;
        h = self.relu2.forward(&h, mode)?;
        h = self.conv3.forward(&h, mode)?;
        h = self.bn3.forward(&h, mode)?;
        let sc = match &mut self.shortcut {
            Some((conv, bn)) => {
                let s = conv.forward(input, mode)?;
                bn.forward(&s, mode)?
            }
            None => input.clone(),
        };
        add_into(&mut h, &sc);
        self.relu_out.forward(&h, mode)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let g_sum = self.relu_out.backward(grad_out)?;
        let mut g = self.bn3.backward(&g_sum)?;
        g = self.conv3.backward(&g)?;
        g = self.relu2.backward(&g)?;
        g = self.bn2.backward(&g)?;
        g = self.conv2.backward(&g)?;
        g = self.relu1.backward(&g)?;
        g = self.bn1.backward(&g)?;
        let mut g_input = self.conv1.backward(&g)?;
        let g_sc = match &mut self.shortcut {
            Some((conv, bn)) => {
                let s = bn.backward(&g_sum)?;
                conv.backward(&s)?
            }
            None => g_sum,
        };
        add_into(&mut g_input, &g_sc);
        Ok(g_input)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.conv1.params();
        p.extend(self.bn1.params());
        p.extend(self.conv2.params());
        p.extend(self.bn2.params());
        p.extend(self.conv3.params());
        p.extend(self.bn3.params());
        if let Some((conv, bn)) = &self.shortcut {
            p.extend(conv.params());
            p.extend(bn.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.conv1.params_mut();
        p.extend(self.bn1.params_mut());
        p.extend(self.conv2.params_mut());
        p.extend(self.bn2.params_mut());
        p.extend(self.conv3.params_mut());
        p.extend(self.bn3.params_mut());
        if let Some((conv, bn)) = &mut self.shortcut {
            p.extend(conv.params_mut());
            p.extend(bn.params_mut());
        }
        p
    }

    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        let mut s = self.bn1.extra_state();
        s.extend(self.bn2.extra_state());
        s.extend(self.bn3.extra_state());
        if let Some((_, bn)) = &self.shortcut {
            s.extend(bn.extra_state());
        }
        s
    }

    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        self.bn1.set_extra_state(name, data)
            || self.bn2.set_extra_state(name, data)
            || self.bn3.set_extra_state(name, data)
            || self
                .shortcut
                .as_mut()
                .is_some_and(|(_, bn)| bn.set_extra_state(name, data))
    }
}
