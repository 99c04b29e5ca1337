//! Residual CNN backbones for the heatmap branch (classifier head removed).

use super::config::BackboneConfig;
use crate::nn::{
    BasicBlock, BatchNorm, BottleneckBlock, Conv2d, Layer, MaxPool2d, Mode, Param, Relu,
    Sequential, Tensor, BOTTLENECK_EXPANSION,
};
use crate::rng::Rng;
use crate::Result;

/// Stem + residual stages; output is a `[B, C, h, w]` feature map.
pub struct Backbone {
    layers: Sequential,
    out_channels: usize,
}

impl Backbone {
    pub fn new(name: &str, cfg: &BackboneConfig, rng: &mut Rng) -> Backbone {
        let mut layers = Sequential::new();
        let out_channels;
        match cfg {
            BackboneConfig::SmallResidual {
                blocks_per_stage,
                widths,
            } => {
                let stem_width = widths[0];
                layers.push(Conv2d::new_no_bias(&format!("{name}.stem"), 3, stem_width, 3, 2, 1, rng));
                layers.push(BatchNorm::new(&format!("{name}.stem_bn"), stem_width));
                layers.push(Relu::new());
                layers.push(MaxPool2d::new(3, 2, 1));
                let mut in_ch = stem_width;
                for (s, &width) in widths.iter().enumerate() {
                    for b in 0..*blocks_per_stage {
                        let stride = if s > 0 && b == 0 { 2 } else { 1 };
                        layers.push(BasicBlock::new(
                            &format!("{name}.s{s}b{b}"),
                            in_ch,
                            width,
                            stride,
                            rng,
                        ));
                        in_ch = width;
                    }
                }
                out_channels = in_ch;
            }
            BackboneConfig::Resnet50Topology => {
                layers.push(Conv2d::new_no_bias(&format!("{name}.stem"), 3, 64, 7, 2, 3, rng));
                layers.push(BatchNorm::new(&format!("{name}.stem_bn"), 64));
                layers.push(Relu::new());
                layers.push(MaxPool2d::new(3, 2, 1));
                let stage_blocks = [3usize, 4, 6, 3];
                let stage_widths = [64usize, 128, 256, 512];
                let mut in_ch = 64;
                for (s, (&blocks, &width)) in stage_blocks.iter().zip(&stage_widths).enumerate() {
                    for b in 0..blocks {
                        let stride = if s > 0 && b == 0 { 2 } else { 1 };
                        layers.push(BottleneckBlock::new(
                            &format!("{name}.s{s}b{b}"),
                            in_ch,
                            width,
                            stride,
                            rng,
                        ));
                        in_ch = width * BOTTLENECK_EXPANSION;
                    }
                }
                out_channels = in_ch;
            }
        }
        Backbone {
            layers,
            out_channels,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }
}

impl Layer for Backbone {
    fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        self.layers.forward(input, mode)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        self.layers.backward(grad_out)
    }

    fn params(&self) -> Vec<&Param> {
        self.layers.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.params_mut()
    }

    fn extra_state(&self) -> Vec<(String, Vec<f64>)> {
        self.layers.extra_state()
    }

    fn set_extra_state(&mut self, name: &str, data: &[f64]) -> bool {
        self.layers.set_extra_state(name, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_backbone_shapes() {
        let mut rng = Rng::new(1);
        let cfg = BackboneConfig::SmallResidual {
            blocks_per_stage: 2,
            widths: vec![8, 16, 32],
        };
        let mut bb = Backbone::new("bb", &cfg, &mut rng);
        let x = Tensor::zeros(&[2, 3, 64, 64]);
        let y = bb.forward(&x, Mode::Train).unwrap();
        // 64 -> stem /2 -> 32 -> pool /2 -> 16 -> stage1 16 -> stage2 8 -> stage3 4
        assert_eq!(y.shape(), &[2, 32, 4, 4]);
        assert_eq!(bb.out_channels(), 32);
    }

    #[test]
    fn resnet50_topology_builds_with_the_canonical_parameter_count() {
        let mut rng = Rng::new(2);
        let bb = Backbone::new("r50", &BackboneConfig::Resnet50Topology, &mut rng);
        assert_eq!(bb.out_channels(), 2048);
        let weights: usize = bb.params().iter().map(|p| p.value.len()).sum();
        // Convolution + batchnorm parameters of the headless topology.
        assert_eq!(weights, 23_508_032);
    }

    #[test]
    fn resnet50_forward_shape_at_reduced_image() {
        let mut rng = Rng::new(3);
        let mut bb = Backbone::new("r50", &BackboneConfig::Resnet50Topology, &mut rng);
        let x = Tensor::zeros(&[1, 3, 64, 64]);
        let y = bb.forward(&x, Mode::Infer).unwrap();
        assert_eq!(y.shape(), &[1, 2048, 2, 2]);
    }
}
