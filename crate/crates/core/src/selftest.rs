//! Built-in oracle suites: gradient checks, DSP equivalence, and AUC
//! equivalence. `coughscreen selftest` runs all three and prints one line
//! per suite; the acceptance tests call the same functions.

use crate::audio::Signal;
use crate::eval::{binary_roc, micro_average_auc, ScoredExample};
use crate::features::{mel_spectrogram, mfcc, FeatureConfig};
use crate::ingest::ClassLabel;
use crate::model::{build_model, ModelConfig};
use crate::nn::{
    check_gradients, check_layer, one_hot, probe_coords, softmax_cross_entropy, BasicBlock,
    BatchNorm, BottleneckBlock, Conv2d, Dense, Dropout, GlobalAvgPool, GlobalMaxPool, MaxPool2d,
    Mode, Relu, Softmax, Tensor, FD_EPSILON,
};
use crate::oracle::{naive_mfcc, pair_count_auc};
use crate::rng::Rng;
use crate::{Error, Result};

pub const LAYER_GRAD_TOLERANCE: f64 = 1e-4;
pub const GRAPH_GRAD_TOLERANCE: f64 = 1e-3;
pub const DSP_TOLERANCE: f64 = 1e-8;
pub const AUC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Finite-difference check of every layer kind. Returns the worst relative
/// error across all layers.
pub fn layer_gradient_checks() -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut run = |report: crate::nn::GradCheckReport| {
        worst = worst.max(report.max_rel_err);
        checked += report.coords_checked;
    };

    run(check_layer(|| Dense::new("d", 6, 4, &mut Rng::new(2)), &[3, 6], Mode::Train, 48, 100)?);
    run(check_layer(
        || Conv2d::new("c", 2, 3, 3, 1, 1, &mut Rng::new(3)),
        &[2, 2, 5, 5],
        Mode::Train,
        48,
        101,
    )?);
    run(check_layer(
        || Conv2d::new("c", 2, 4, 3, 2, 1, &mut Rng::new(4)),
        &[2, 2, 6, 6],
        Mode::Train,
        48,
        102,
    )?);
    run(check_layer(|| BatchNorm::new("bn", 3), &[4, 3], Mode::Train, 32, 103)?);
    run(check_layer(|| BatchNorm::new("bn", 2), &[3, 2, 4, 4], Mode::Train, 32, 104)?);
    run(check_layer(|| Dropout::new(0.4, 77), &[2, 10], Mode::Train, 20, 105)?);
    run(check_layer(Relu::new, &[3, 8], Mode::Train, 24, 106)?);
    run(check_layer(GlobalAvgPool::new, &[2, 3, 4, 4], Mode::Train, 24, 107)?);
    run(check_layer(GlobalMaxPool::new, &[2, 3, 4, 4], Mode::Train, 24, 108)?);
    run(check_layer(|| MaxPool2d::new(3, 2, 1), &[2, 2, 6, 6], Mode::Train, 32, 109)?);
    run(check_layer(Softmax::new, &[3, 4], Mode::Train, 12, 110)?);
    run(check_layer(
        || BasicBlock::new("b", 2, 4, 2, &mut Rng::new(5)),
        &[2, 2, 6, 6],
        Mode::Train,
        40,
        111,
    )?);
    run(check_layer(
        || BottleneckBlock::new("b", 4, 2, 1, &mut Rng::new(6)),
        &[2, 4, 5, 5],
        Mode::Train,
        40,
        112,
    )?);

    Ok((worst, checked))
}

/// Finite-difference check of the assembled model at gradient-check scale.
pub fn full_graph_gradient_check(probes: usize) -> Result<crate::nn::GradCheckReport> {
    let cfg = ModelConfig::tiny();
    let batch = 2;
    let mut rng = Rng::new(5);
    let n_img = batch * 3 * cfg.image_size * cfg.image_size;
    let images = Tensor::from_vec(
        &[batch, 3, cfg.image_size, cfg.image_size],
        (0..n_img).map(|_| rng.uniform()).collect(),
    );
    let mfcc_t = Tensor::from_vec(
        &[batch, 13],
        (0..batch * 13).map(|_| rng.range(-40.0, 10.0)).collect(),
    );
    let clinical = Tensor::from_vec(
        &[batch, cfg.clinical_dim],
        (0..batch * cfg.clinical_dim)
            .map(|_| if rng.uniform() < 0.4 { 1.0 } else { 0.0 })
            .collect(),
    );
    let labels = one_hot(&[0, 2], 3);

    let mut model = build_model(&cfg)?;
    let n_params = model.param_count();
    let logits = model.forward_batch(&images, &mfcc_t, &clinical, Mode::Train)?;
    let (_, _, dlogits) = softmax_cross_entropy(&logits, &labels)?;
    model.backward_batch(&dlogits)?;
    let analytic: Vec<f64> = model
        .params()
        .iter()
        .flat_map(|p| p.grad.data().iter().copied())
        .collect();
    let theta0: Vec<f64> = model
        .params()
        .iter()
        .flat_map(|p| p.value.data().iter().copied())
        .collect();

    let eval = |theta: &[f64]| -> Result<f64> {
        let mut fresh = build_model(&cfg)?;
        {
            let mut params = fresh.params_mut();
            crate::nn::set_params(&mut params, theta);
        }
        let logits = fresh.forward_batch(&images, &mfcc_t, &clinical, Mode::Train)?;
        let (loss, _, _) = softmax_cross_entropy(&logits, &labels)?;
        Ok(loss)
    };

    let coords = probe_coords(n_params, probes, 99);
    check_gradients(eval, &theta0, &analytic, &coords, FD_EPSILON)
}

/// Pipeline MFCCs vs the naive composition on seeded random signals.
/// Returns the max absolute coefficient difference.
pub fn dsp_oracle_check(signals: usize) -> Result<f64> {
    let cfg = FeatureConfig::default();
    let mut worst = 0.0f64;
    for i in 0..signals {
        let mut rng = Rng::new(500 + i as u64);
        let len = 4096 + rng.below(8192);
        let samples: Vec<f64> = (0..len).map(|_| rng.range(-0.8, 0.8)).collect();
        let signal = Signal::new(samples.clone(), 22_050);

        let mel = mel_spectrogram(&signal, &cfg)?;
        let ours = mfcc(&mel)?;
        let oracle = naive_mfcc(&samples, 22_050, &cfg);
        for (a, b) in ours.coeffs.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Trapezoid-vs-pair-count equivalence over random scored instances with
/// ties, plus the pooled micro-average oracle. Returns the max deviation.
pub fn auc_oracle_check(instances: usize) -> Result<f64> {
    let mut rng = Rng::new(900);
    let mut worst = 0.0f64;
    let mut done = 0usize;
    while done < instances {
        let n = 2 + rng.below(49);
        let pairs: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                // Coarse grid in half the draws to force ties.
                let score = if rng.uniform() < 0.5 {
                    (rng.below(6) as f64) / 6.0
                } else {
                    rng.uniform()
                };
                (score, rng.uniform() < 0.5)
            })
            .collect();
        if !pairs.iter().any(|p| p.1) || !pairs.iter().any(|p| !p.1) {
            continue;
        }
        let (_, trapezoid) = binary_roc(&pairs)?;
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let mw = pair_count_auc(&scores, &labels)
            .ok_or_else(|| Error::UndefinedAuc("oracle rejected instance".into()))?;
        worst = worst.max((trapezoid - mw).abs());
        done += 1;
    }

    // Micro-average vs pooled pair count on random 3-class sets.
    let mut done = 0usize;
    while done < instances / 20 {
        let n = 6 + rng.below(30);
        let examples: Vec<ScoredExample> = (0..n)
            .map(|i| {
                let mut probs = [rng.uniform(), rng.uniform(), rng.uniform()];
                let sum: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= sum);
                ScoredExample {
                    record_id: format!("r{i}"),
                    true_label: ClassLabel::from_index(rng.below(3)).unwrap(),
                    probs,
                    age: None,
                    gender: None,
                }
            })
            .collect();
        if ClassLabel::ALL
            .iter()
            .any(|&c| !examples.iter().any(|e| e.true_label == c))
        {
            continue;
        }
        let micro = micro_average_auc(&examples)?;
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for class in ClassLabel::ALL {
            for e in &examples {
                scores.push(e.probs[class.index()]);
                labels.push(e.true_label == class);
            }
        }
        let pooled = pair_count_auc(&scores, &labels).unwrap();
        worst = worst.max((micro - pooled).abs());
        done += 1;
    }
    Ok(worst)
}

/// Run all three suites, returning one result per suite.
pub fn run_selftest() -> Vec<SuiteResult> {
    let mut results = Vec::new();

    results.push(match (layer_gradient_checks(), full_graph_gradient_check(50)) {
        (Ok((layer_err, coords)), Ok(graph)) => {
            let passed = layer_err < LAYER_GRAD_TOLERANCE && graph.max_rel_err < GRAPH_GRAD_TOLERANCE;
            SuiteResult {
                name: "gradient_check".into(),
                passed,
                detail: format!(
                    "layers max rel err {layer_err:.2e} over {coords} coords (tol {LAYER_GRAD_TOLERANCE:.0e}); full graph {:.2e} over {} coords (tol {GRAPH_GRAD_TOLERANCE:.0e})",
                    graph.max_rel_err, graph.coords_checked
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => SuiteResult {
            name: "gradient_check".into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    });

    results.push(match dsp_oracle_check(10) {
        Ok(diff) => SuiteResult {
            name: "dsp_oracle".into(),
            passed: diff < DSP_TOLERANCE,
            detail: format!("mfcc max abs diff {diff:.2e} over 10 signals (tol {DSP_TOLERANCE:.0e})"),
        },
        Err(e) => SuiteResult {
            name: "dsp_oracle".into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    });

    results.push(match auc_oracle_check(10_000) {
        Ok(diff) => SuiteResult {
            name: "auc_oracle".into(),
            passed: diff < AUC_TOLERANCE,
            detail: format!("max |trapezoid - pair count| {diff:.2e} over 10000 instances (tol {AUC_TOLERANCE:.0e})"),
        },
        Err(e) => SuiteResult {
            name: "auc_oracle".into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    });

    results
}
