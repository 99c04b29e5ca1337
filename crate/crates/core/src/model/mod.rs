//! The three-branch fusion classifier: a residual CNN over mel-spectrogram
//! heatmaps (dual global pooling), a feed-forward stack over clinical bits,
//! and a double-parallel feed-forward stack over MFCCs, fused into a shared
//! feed-forward head with a 3-way softmax. Also the ResNet-only ablation.

mod backbone;
mod checkpoint;
pub mod config;
mod grid;

pub use backbone::Backbone;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{BackboneConfig, ModelConfig};
pub use grid::{grid_search, write_grid_csv, GridRow, GridSearchResult};

use crate::features::{FeatureTriple, HeatmapImage, MfccVector, N_MFCC};
use crate::ingest::{ClassLabel, ClinicalVector};
use crate::nn::{
    concat_features, softmax_rows, split_features, BatchNorm, Dense, Dropout, GlobalAvgPool,
    GlobalMaxPool, Layer, Mode, Param, Relu, Sequential, Tensor,
};
use crate::rng::Rng;
use crate::{Error, Result};

pub const N_CLASSES: usize = 3;

/// CNN branch: backbone -> parallel GAP / GMP, each through BN and dropout,
/// concatenated into a single dense layer.
struct CnnBranch {
    backbone: Backbone,
    gap: GlobalAvgPool,
    gmp: GlobalMaxPool,
    bn_avg: BatchNorm,
    drop_avg: Dropout,
    bn_max: BatchNorm,
    drop_max: Dropout,
    dense: Dense,
    out_dim: usize,
}

impl CnnBranch {
    fn new(cfg: &ModelConfig, rng: &mut Rng) -> CnnBranch {
        let backbone = Backbone::new("b1.bb", &cfg.backbone, rng);
        let ch = backbone.out_channels();
        CnnBranch {
            backbone,
            gap: GlobalAvgPool::new(),
            gmp: GlobalMaxPool::new(),
            bn_avg: BatchNorm::new("b1.avg_bn", ch),
            drop_avg: Dropout::new(cfg.dropout_rate, rng.next_u64()),
            bn_max: BatchNorm::new("b1.max_bn", ch),
            drop_max: Dropout::new(cfg.dropout_rate, rng.next_u64()),
            dense: Dense::new("b1.dense", 2 * ch, cfg.branch1_out, rng),
            out_dim: cfg.branch1_out,
        }
    }

    fn forward(&mut self, images: &Tensor, mode: Mode) -> Result<Tensor> {
        let fmap = self.backbone.forward(images, mode)?;
        let avg = self.gap.forward(&fmap, mode)?;
        let avg = self.bn_avg.forward(&avg, mode)?;
        let avg = self.drop_avg.forward(&avg, mode)?;
        let max = self.gmp.forward(&fmap, mode)?;
        let max = self.bn_max.forward(&max, mode)?;
        let max = self.drop_max.forward(&max, mode)?;
        let cat = concat_features(&[&avg, &max])?;
        self.dense.forward(&cat, mode)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let g_cat = self.dense.backward(grad)?;
        let ch = self.backbone.out_channels();
        let parts = split_features(&g_cat, &[ch, ch]);
        let g_avg = self.bn_avg.backward(&self.drop_avg.backward(&parts[0])?)?;
        let g_max = self.bn_max.backward(&self.drop_max.backward(&parts[1])?)?;
        let mut g_fmap = self.gap.backward(&g_avg)?;
        let g_fmap_max = self.gmp.backward(&g_max)?;
        for (a, b) in g_fmap.data_mut().iter_mut().zip(g_fmap_max.data()) {
            *a += b;
        }
        self.backbone.backward(&g_fmap)
    }

    fn collect_layers(&self) -> Vec<&dyn Layer> {
        vec![
            &self.backbone,
            &self.bn_avg,
            &self.drop_avg,
            &self.bn_max,
            &self.drop_max,
            &self.dense,
        ]
    }

    fn collect_layers_mut(&mut self) -> Vec<&mut dyn Layer> {
        vec![
            &mut self.backbone,
            &mut self.bn_avg,
            &mut self.drop_avg,
            &mut self.bn_max,
            &mut self.drop_max,
            &mut self.dense,
        ]
    }
}

/// Clinical branch: dense(8) and dense(64), each followed by activation,
/// batch normalization, and dropout.
struct ClinicalBranch {
    seq: Sequential,
    out_dim: usize,
}

impl ClinicalBranch {
    fn new(cfg: &ModelConfig, rng: &mut Rng) -> ClinicalBranch {
        let [w1, w2] = cfg.branch2_widths;
        let mut seq = Sequential::new();
        seq.push(Dense::new("b2.d1", cfg.clinical_dim, w1, rng));
        seq.push(Relu::new());
        seq.push(BatchNorm::new("b2.bn1", w1));
        seq.push(Dropout::new(cfg.dropout_rate, rng.next_u64()));
        seq.push(Dense::new("b2.d2", w1, w2, rng));
        seq.push(Relu::new());
        seq.push(BatchNorm::new("b2.bn2", w2));
        seq.push(Dropout::new(cfg.dropout_rate, rng.next_u64()));
        ClinicalBranch { seq, out_dim: w2 }
    }
}

/// MFCC branch: two parallel two-layer stacks whose tops concatenate into a
/// single dense layer.
struct MfccBranch {
    stack_a: Sequential,
    stack_b: Sequential,
    dense: Dense,
    stack_dims: [usize; 2],
    out_dim: usize,
}

impl MfccBranch {
    fn stack(name: &str, widths: [usize; 2], dropout: f64, rng: &mut Rng) -> Sequential {
        let mut seq = Sequential::new();
        seq.push(Dense::new(&format!("{name}.d1"), N_MFCC, widths[0], rng));
        seq.push(Relu::new());
        seq.push(BatchNorm::new(&format!("{name}.bn1"), widths[0]));
        seq.push(Dropout::new(dropout, rng.next_u64()));
        seq.push(Dense::new(&format!("{name}.d2"), widths[0], widths[1], rng));
        seq.push(Relu::new());
        seq.push(BatchNorm::new(&format!("{name}.bn2"), widths[1]));
        seq.push(Dropout::new(dropout, rng.next_u64()));
        seq
    }

    fn new(cfg: &ModelConfig, rng: &mut Rng) -> MfccBranch {
        let [wa, wb] = cfg.branch3_stack_widths;
        let stack_a = Self::stack("b3.a", wa, cfg.dropout_rate, rng);
        let stack_b = Self::stack("b3.b", wb, cfg.dropout_rate, rng);
        let dense = Dense::new("b3.dense", wa[1] + wb[1], cfg.branch3_out, rng);
        MfccBranch {
            stack_a,
            stack_b,
            dense,
            stack_dims: [wa[1], wb[1]],
            out_dim: cfg.branch3_out,
        }
    }

    fn forward(&mut self, mfcc: &Tensor, mode: Mode) -> Result<Tensor> {
        let a = self.stack_a.forward(mfcc, mode)?;
        let b = self.stack_b.forward(mfcc, mode)?;
        let cat = concat_features(&[&a, &b])?;
        self.dense.forward(&cat, mode)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let g_cat = self.dense.backward(grad)?;
        let parts = split_features(&g_cat, &self.stack_dims);
        let mut g_in = self.stack_a.backward(&parts[0])?;
        let g_b = self.stack_b.backward(&parts[1])?;
        for (a, b) in g_in.data_mut().iter_mut().zip(g_b.data()) {
            *a += b;
        }
        Ok(g_in)
    }
}

/// Which inputs the model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelArch {
    MultiBranch,
    ResnetOnly,
}

pub struct Model {
    pub config: ModelConfig,
    pub arch: ModelArch,
    branch1: CnnBranch,
    branch2: Option<ClinicalBranch>,
    branch3: Option<MfccBranch>,
    fusion: Sequential,
}

/// Assemble the full multi-branch model from a config.
pub fn build_model(config: &ModelConfig) -> Result<Model> {
    Model::build(config, ModelArch::MultiBranch)
}

/// The ablation: CNN branch + classifier head only; clinical and MFCC
/// inputs are not wired.
pub fn build_ablation_resnet_only(config: &ModelConfig) -> Result<Model> {
    Model::build(config, ModelArch::ResnetOnly)
}

impl Model {
    fn build(config: &ModelConfig, arch: ModelArch) -> Result<Model> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let branch1 = CnnBranch::new(config, &mut rng);
        let (branch2, branch3) = match arch {
            ModelArch::MultiBranch => (
                Some(ClinicalBranch::new(config, &mut rng)),
                Some(MfccBranch::new(config, &mut rng)),
            ),
            ModelArch::ResnetOnly => (None, None),
        };

        let fusion_input_dim = branch1.out_dim
            + branch2.as_ref().map_or(0, |b| b.out_dim)
            + branch3.as_ref().map_or(0, |b| b.out_dim);
        let mut fusion = Sequential::new();
        let mut in_dim = fusion_input_dim;
        let _ = fusion_input_dim;
        for (i, &w) in config.fusion_widths.iter().enumerate() {
            fusion.push(Dense::new(&format!("fusion.d{i}"), in_dim, w, &mut rng));
            fusion.push(Relu::new());
            in_dim = w;
        }
        fusion.push(Dense::new("fusion.out", in_dim, N_CLASSES, &mut rng));

        Ok(Model {
            config: config.clone(),
            arch,
            branch1,
            branch2,
            branch3,
            fusion,
        })
    }

    fn expect_inputs(&self, images: &Tensor, mfcc: &Tensor, clinical: &Tensor) -> Result<usize> {
        let batch = images.dim(0);
        let size = self.config.image_size;
        images.expect_shape(&[batch, 3, size, size], "heatmap batch")?;
        mfcc.expect_shape(&[batch, N_MFCC], "mfcc batch")?;
        clinical.expect_shape(&[batch, self.config.clinical_dim], "clinical batch")?;
        Ok(batch)
    }

    /// Forward over a batch; returns logits `[B, 3]`.
    pub fn forward_batch(
        &mut self,
        images: &Tensor,
        mfcc: &Tensor,
        clinical: &Tensor,
        mode: Mode,
    ) -> Result<Tensor> {
        self.expect_inputs(images, mfcc, clinical)?;
        let f1 = self.branch1.forward(images, mode)?;
        let fused = match (&mut self.branch2, &mut self.branch3) {
            (Some(b2), Some(b3)) => {
                let f2 = b2.seq.forward(clinical, mode)?;
                let f3 = b3.forward(mfcc, mode)?;
                concat_features(&[&f1, &f2, &f3])?
            }
            _ => f1,
        };
        self.fusion.forward(&fused, mode)
    }

    /// Backward from `dlogits`; accumulates gradients in every parameter.
    pub fn backward_batch(&mut self, dlogits: &Tensor) -> Result<()> {
        let g_fused = self.fusion.backward(dlogits)?;
        match (&mut self.branch2, &mut self.branch3) {
            (Some(b2), Some(b3)) => {
                let dims = [self.branch1.out_dim, b2.out_dim, b3.out_dim];
                let parts = split_features(&g_fused, &dims);
                self.branch1.backward(&parts[0])?;
                b2.seq.backward(&parts[1])?;
                b3.backward(&parts[2])?;
            }
            _ => {
                self.branch1.backward(&g_fused)?;
            }
        }
        Ok(())
    }

    /// Class probabilities for one feature triple (inference mode).
    pub fn forward_triple(&mut self, triple: &FeatureTriple) -> Result<[f64; N_CLASSES]> {
        self.forward_parts(&triple.heatmap, &triple.mfcc, &triple.clinical)
    }

    /// Class probabilities from raw per-chunk features (inference mode).
    pub fn forward_parts(
        &mut self,
        heatmap: &HeatmapImage,
        mfcc: &MfccVector,
        clinical: &ClinicalVector,
    ) -> Result<[f64; N_CLASSES]> {
        let images = heatmap_batch(std::slice::from_ref(&heatmap), self.config.image_size)?;
        let mfcc_t = Tensor::from_vec(&[1, N_MFCC], mfcc.coeffs.to_vec());
        let clin_t = Tensor::from_vec(
            &[1, clinical.bits.len()],
            clinical.bits.iter().map(|&b| b as f64).collect(),
        );
        let logits = self.forward_batch(&images, &mfcc_t, &clin_t, Mode::Infer)?;
        let probs = softmax_rows(&logits);
        Ok([probs.data()[0], probs.data()[1], probs.data()[2]])
    }

    /// All trainable parameters in a fixed traversal order.
    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p: Vec<&mut Param> = Vec::new();
        for layer in self.branch1.collect_layers_mut() {
            p.extend(layer.params_mut());
        }
        if let Some(b2) = &mut self.branch2 {
            p.extend(b2.seq.params_mut());
        }
        if let Some(b3) = &mut self.branch3 {
            p.extend(b3.stack_a.params_mut());
            p.extend(b3.stack_b.params_mut());
            p.extend(b3.dense.params_mut());
        }
        p.extend(self.fusion.params_mut());
        p
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p: Vec<&Param> = Vec::new();
        for layer in self.branch1.collect_layers() {
            p.extend(layer.params());
        }
        if let Some(b2) = &self.branch2 {
            p.extend(b2.seq.params());
        }
        if let Some(b3) = &self.branch3 {
            p.extend(b3.stack_a.params());
            p.extend(b3.stack_b.params());
            p.extend(b3.dense.params());
        }
        p.extend(self.fusion.params());
        p
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Named tensors for checkpointing: parameters plus batchnorm running
    /// statistics.
    pub fn export_state(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out: Vec<(String, Vec<usize>, Vec<f64>)> = self
            .params()
            .iter()
            .map(|p| (p.name.clone(), p.value.shape().to_vec(), p.value.data().to_vec()))
            .collect();
        for layer in self.all_layers() {
            for (name, data) in layer.extra_state() {
                let n = data.len();
                out.push((name, vec![n], data));
            }
        }
        out
    }

    pub fn import_state(&mut self, entries: &[(String, Vec<usize>, Vec<f64>)]) -> Result<()> {
        let mut by_name: std::collections::BTreeMap<&str, &(String, Vec<usize>, Vec<f64>)> =
            entries.iter().map(|e| (e.0.as_str(), e)).collect();
        for p in self.params_mut() {
            let entry = by_name
                .remove(p.name.as_str())
                .ok_or_else(|| Error::CorruptFile(format!("checkpoint missing tensor {}", p.name)))?;
            if entry.1 != p.value.shape() {
                return Err(Error::Shape(format!(
                    "checkpoint tensor {}: shape {:?} vs model {:?}",
                    p.name,
                    entry.1,
                    p.value.shape()
                )));
            }
            p.value.data_mut().copy_from_slice(&entry.2);
        }
        let leftovers: Vec<&(String, Vec<usize>, Vec<f64>)> = by_name.into_values().collect();
        for entry in &leftovers {
            let consumed = self
                .all_layers_mut()
                .into_iter()
                .any(|l| l.set_extra_state(&entry.0, &entry.2));
            if !consumed {
                return Err(Error::CorruptFile(format!(
                    "checkpoint tensor {} does not match this architecture",
                    entry.0
                )));
            }
        }
        Ok(())
    }

    fn all_layers(&self) -> Vec<&dyn Layer> {
        let mut layers = self.branch1.collect_layers();
        if let Some(b2) = &self.branch2 {
            layers.push(&b2.seq);
        }
        if let Some(b3) = &self.branch3 {
            layers.push(&b3.stack_a);
            layers.push(&b3.stack_b);
            layers.push(&b3.dense);
        }
        layers.push(&self.fusion);
        layers
    }

    fn all_layers_mut(&mut self) -> Vec<&mut dyn Layer> {
        let mut layers = self.branch1.collect_layers_mut();
        if let Some(b2) = &mut self.branch2 {
            layers.push(&mut b2.seq);
        }
        if let Some(b3) = &mut self.branch3 {
            layers.push(&mut b3.stack_a);
            layers.push(&mut b3.stack_b);
            layers.push(&mut b3.dense);
        }
        layers.push(&mut self.fusion);
        layers
    }
}

/// Stack heatmaps into an NCHW batch tensor (HWC f32 -> CHW f64).
pub fn heatmap_batch(heatmaps: &[&HeatmapImage], image_size: usize) -> Result<Tensor> {
    let batch = heatmaps.len();
    let mut out = Tensor::zeros(&[batch, 3, image_size, image_size]);
    for (b, hm) in heatmaps.iter().enumerate() {
        if hm.height != image_size || hm.width != image_size {
            return Err(Error::Shape(format!(
                "heatmap {}x{} does not match model image size {image_size}",
                hm.height, hm.width
            )));
        }
        let plane = image_size * image_size;
        let base = b * 3 * plane;
        for y in 0..image_size {
            for x in 0..image_size {
                let src = (y * image_size + x) * 3;
                for c in 0..3 {
                    out.data_mut()[base + c * plane + y * image_size + x] =
                        hm.pixels[src + c] as f64;
                }
            }
        }
    }
    Ok(out)
}

/// Batch tensors for a set of feature triples:
/// `(images, mfcc, clinical, label indices)`.
pub fn batch_tensors(
    triples: &[&FeatureTriple],
    image_size: usize,
) -> Result<(Tensor, Tensor, Tensor, Vec<usize>)> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("empty feature batch".into()));
    }
    let heatmaps: Vec<&HeatmapImage> = triples.iter().map(|t| &t.heatmap).collect();
    let images = heatmap_batch(&heatmaps, image_size)?;
    let batch = triples.len();
    let clin_dim = triples[0].clinical.bits.len();
    let mut mfcc = Tensor::zeros(&[batch, N_MFCC]);
    let mut clinical = Tensor::zeros(&[batch, clin_dim]);
    let mut labels = Vec::with_capacity(batch);
    for (b, t) in triples.iter().enumerate() {
        mfcc.data_mut()[b * N_MFCC..(b + 1) * N_MFCC].copy_from_slice(&t.mfcc.coeffs);
        for (i, &bit) in t.clinical.bits.iter().enumerate() {
            clinical.data_mut()[b * clin_dim + i] = bit as f64;
        }
        labels.push(t.label.index());
    }
    Ok((images, mfcc, clinical, labels))
}

/// Probability-mean aggregation of one recording's chunks.
#[derive(Debug, Clone)]
pub struct RecordingPrediction {
    pub probs: [f64; N_CLASSES],
    pub predicted: ClassLabel,
    /// Probability of the positive class (class3).
    pub positive_score: f64,
}

/// Average the per-chunk probability vectors of one recording and
/// renormalize.
pub fn predict_recording(model: &mut Model, triples: &[&FeatureTriple]) -> Result<RecordingPrediction> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("recording has no chunks".into()));
    }
    let mut mean = [0.0f64; N_CLASSES];
    for t in triples {
        let p = model.forward_triple(t)?;
        for (m, v) in mean.iter_mut().zip(&p) {
            *m += v;
        }
    }
    let sum: f64 = mean.iter().sum();
    for m in &mut mean {
        *m /= sum;
    }
    let argmax = (0..N_CLASSES)
        .max_by(|&a, &b| mean[a].total_cmp(&mean[b]))
        .unwrap();
    Ok(RecordingPrediction {
        probs: mean,
        predicted: ClassLabel::from_index(argmax).unwrap(),
        positive_score: mean[ClassLabel::CovidPositive.index()],
    })
}
