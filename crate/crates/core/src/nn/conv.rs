//! 2-D convolution (cross-correlation) and max pooling on NCHW tensors.

use super::layers::{protocol_backward_before_forward, Layer, Mode, Param};
use super::Tensor;
use crate::rng::Rng;
use crate::{Error, Result};

fn conv_out_size(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (input + 2 * padding - kernel) / stride + 1
}

/// Cross-correlation with stride and zero padding. Weight layout
/// `[out_ch, in_ch, k, k]`, fan-in-scaled uniform init. Convolutions that
/// feed straight into batchnorm are built without a bias.
pub struct Conv2d {
    pub weight: Param,
    pub bias: Option<Param>,
    kernel: usize,
    stride: usize,
    padding: usize,
    input: Option<Tensor>,
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut Rng,
    ) -> Conv2d {
        let mut conv = Conv2d::new_no_bias(name, in_ch, out_ch, kernel, stride, padding, rng);
        conv.bias = Some(Param::new(format!("{name}.b"), Tensor::zeros(&[out_ch])));
        conv
    }

    pub fn new_no_bias(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut Rng,
    ) -> Conv2d {
        let fan_in = in_ch * kernel * kernel;
        let limit = 1.0 / (fan_in as f64).sqrt();
        let w: Vec<f64> = (0..out_ch * fan_in).map(|_| rng.range(-limit, limit)).collect();
        Conv2d {
            weight: Param::new(
                format!("{name}.w"),
                Tensor::from_vec(&[out_ch, in_ch, kernel, kernel], w),
            ),
            bias: None,
            kernel,
            stride,
            padding,
            input: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.dim(1)
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.dim(0)
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        if input.rank() != 4 || input.dim(1) != self.in_channels() {
            return Err(Error::Shape(format!(
                "conv {}: input {:?} incompatible with weight {:?}",
                self.weight.name,
                input.shape(),
                self.weight.value.shape()
            )));
        }
        let (batch, in_ch, h, w) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let out_ch = self.out_channels();
        let oh = conv_out_size(h, k, s, p);
        let ow = conv_out_size(w, k, s, p);

        let mut out = Tensor::zeros(&[batch, out_ch, oh, ow]);
        let weights = self.weight.value.data();
        let x = input.data();
        let y = out.data_mut();

        for b in 0..batch {
            for co in 0..out_ch {
                let out_base = ((b * out_ch) + co) * oh * ow;
                if let Some(bias) = &self.bias {
                    y[out_base..out_base + oh * ow].fill(bias.value.data()[co]);
                }
                for ci in 0..in_ch {
                    let in_base = ((b * in_ch) + ci) * h * w;
                    let w_base = ((co * in_ch) + ci) * k * k;
                    for ky in 0..k {
                        for kx in 0..k {
                            let wv = weights[w_base + ky * k + kx];
                            if wv == 0.0 {
                                continue;
                            }
                            for oy in 0..oh {
                                let iy = (oy * s + ky) as isize - p as isize;
                                if iy < 0 || iy as usize >= h {
                                    continue;
                                }
                                let in_row = in_base + iy as usize * w;
                                let out_row = out_base + oy * ow;
                                for ox in 0..ow {
                                    let ix = (ox * s + kx) as isize - p as isize;
                                    if ix >= 0 && (ix as usize) < w {
                                        y[out_row + ox] += wv * x[in_row + ix as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("conv2d"))?;
        let (batch, in_ch, h, w) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let out_ch = self.out_channels();
        let (oh, ow) = (grad_out.dim(2), grad_out.dim(3));

        let mut grad_in = Tensor::zeros(&[batch, in_ch, h, w]);
        let x = input.data();
        let g = grad_out.data();
        let weights = self.weight.value.data();
        let dw = self.weight.grad.data_mut();
        let dx = grad_in.data_mut();

        for b in 0..batch {
            for co in 0..out_ch {
                let out_base = ((b * out_ch) + co) * oh * ow;
                if let Some(bias) = &mut self.bias {
                    let db = bias.grad.data_mut();
                    for v in &g[out_base..out_base + oh * ow] {
                        db[co] += v;
                    }
                }
                for ci in 0..in_ch {
                    let in_base = ((b * in_ch) + ci) * h * w;
                    let w_base = ((co * in_ch) + ci) * k * k;
                    for ky in 0..k {
                        for kx in 0..k {
                            let wv = weights[w_base + ky * k + kx];
                            let mut dw_acc = 0.0;
                            for oy in 0..oh {
                                let iy = (oy * s + ky) as isize - p as isize;
                                if iy < 0 || iy as usize >= h {
                                    continue;
                                }
                                let in_row = in_base + iy as usize * w;
                                let out_row = out_base + oy * ow;
                                for ox in 0..ow {
                                    let ix = (ox * s + kx) as isize - p as isize;
                                    if ix >= 0 && (ix as usize) < w {
                                        let g_v = g[out_row + ox];
                                        dw_acc += g_v * x[in_row + ix as usize];
                                        dx[in_row + ix as usize] += g_v * wv;
                                    }
                                }
                            }
                            dw[w_base + ky * k + kx] += dw_acc;
                        }
                    }
                }
            }
        }
        Ok(grad_in)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = vec![&self.weight];
        if let Some(bias) = &self.bias {
            p.push(bias);
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = vec![&mut self.weight];
        if let Some(bias) = &mut self.bias {
            p.push(bias);
        }
        p
    }
}

/// Max pooling; gradient routes to the first maximum in each window.
pub struct MaxPool2d {
    kernel: usize,
    stride: usize,
    padding: usize,
    argmax: Option<(Vec<usize>, Vec<usize>)>, // (input shape cache, argmax flat indices)
    input_shape: Vec<usize>,
}

impl MaxPool2d {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> MaxPool2d {
        MaxPool2d {
            kernel,
            stride,
            padding,
            argmax: None,
            input_shape: Vec::new(),
        }
    }
}

impl Layer for MaxPool2d {
    fn forward(&mut self, input: &Tensor, _mode: Mode) -> Result<Tensor> {
        if input.rank() != 4 {
            return Err(Error::Shape(format!(
                "maxpool expects NCHW, got {:?}",
                input.shape()
            )));
        }
        let (batch, ch, h, w) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let oh = conv_out_size(h, k, s, p);
        let ow = conv_out_size(w, k, s, p);
        let mut out = Tensor::zeros(&[batch, ch, oh, ow]);
        let mut argmax = vec![0usize; batch * ch * oh * ow];
        let x = input.data();
        let y = out.data_mut();
        for b in 0..batch {
            for c in 0..ch {
                let in_base = ((b * ch) + c) * h * w;
                let out_base = ((b * ch) + c) * oh * ow;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0usize;
                        for ky in 0..k {
                            let iy = (oy * s + ky) as isize - p as isize;
                            if iy < 0 || iy as usize >= h {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = (ox * s + kx) as isize - p as isize;
                                if ix < 0 || ix as usize >= w {
                                    continue;
                                }
                                let idx = in_base + iy as usize * w + ix as usize;
                                if x[idx] > best {
                                    best = x[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        y[out_base + oy * ow + ox] = best;
                        argmax[out_base + oy * ow + ox] = best_idx;
                    }
                }
            }
        }
        self.input_shape = input.shape().to_vec();
        self.argmax = Some((self.input_shape.clone(), argmax));
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (shape, argmax) = self
            .argmax
            .as_ref()
            .ok_or_else(|| protocol_backward_before_forward("maxpool"))?;
        let mut grad_in = Tensor::zeros(shape);
        let dx = grad_in.data_mut();
        for (g, &idx) in grad_out.data().iter().zip(argmax) {
            dx[idx] += g;
        }
        Ok(grad_in)
    }
}
