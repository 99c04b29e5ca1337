//! Central finite-difference gradient checking.
//!
//! Evaluations construct a fresh instance per probe so stochastic layers
//! (dropout masks) and stateful layers (batchnorm running stats) see exactly
//! the same conditions on every call.

use super::layers::{Layer, Mode, Param};
use super::Tensor;
use crate::rng::Rng;
use crate::Result;

pub const FD_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Relative error with a floor on the denominator: for coordinates whose
/// true gradient is ~0 the central difference is dominated by rounding noise
/// (|loss| * 2^-52 / 2eps ~ 1e-10), which would otherwise swamp the ratio.
/// Real gradient defects are at the scale of live gradients (>> 1e-4) and
/// still surface.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-4)
}

pub fn flatten_params(params: &[&Param]) -> Vec<f64> {
    params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
}

pub fn flatten_grads(params: &[&Param]) -> Vec<f64> {
    params.iter().flat_map(|p| p.grad.data().iter().copied()).collect()
}

pub fn set_params(params: &mut [&mut Param], theta: &[f64]) {
    let mut at = 0;
    for p in params.iter_mut() {
        let n = p.value.len();
        p.value.data_mut().copy_from_slice(&theta[at..at + n]);
        at += n;
    }
    debug_assert_eq!(at, theta.len());
}

/// Compare analytic gradients against central differences of `eval` at
/// `theta0`, probing `coords`. `eval` must build a fresh computation for
/// every call.
pub fn check_gradients(
    mut eval: impl FnMut(&[f64]) -> Result<f64>,
    theta0: &[f64],
    analytic: &[f64],
    coords: &[usize],
    eps: f64,
) -> Result<GradCheckReport> {
    debug_assert_eq!(theta0.len(), analytic.len());
    let mut max_rel_err = 0.0f64;
    for &i in coords {
        let mut plus = theta0.to_vec();
        plus[i] += eps;
        let mut minus = theta0.to_vec();
        minus[i] -= eps;
        let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * eps);
        max_rel_err = max_rel_err.max(relative_error(numeric, analytic[i]));
    }
    Ok(GradCheckReport {
        max_rel_err,
        coords_checked: coords.len(),
    })
}

/// Deterministic probe subset: all coordinates when few, otherwise a seeded
/// sample of `limit`.
pub fn probe_coords(total: usize, limit: usize, seed: u64) -> Vec<usize> {
    if total <= limit {
        (0..total).collect()
    } else {
        let mut rng = Rng::new(seed);
        let mut coords = rng.sample_indices(total, limit);
        coords.sort_unstable();
        coords
    }
}

/// Finite-difference check of one layer: both parameter gradients and the
/// input gradient, against a fixed random linear functional of the output.
pub fn check_layer<L: Layer>(
    make: impl Fn() -> L,
    input_shape: &[usize],
    mode: Mode,
    max_probes: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let x0: Vec<f64> = (0..input_shape.iter().product::<usize>())
        .map(|_| rng.range(-1.0, 1.0))
        .collect();

    // Discover the output shape, then fix the loss functional.
    let probe_out = {
        let mut layer = make();
        layer.forward(&Tensor::from_vec(input_shape, x0.clone()), mode)?
    };
    let functional: Vec<f64> = (0..probe_out.len()).map(|_| rng.range(-1.0, 1.0)).collect();

    // Analytic pass.
    let mut layer = make();
    let n_params: usize = layer.params().iter().map(|p| p.value.len()).sum();
    let out = layer.forward(&Tensor::from_vec(input_shape, x0.clone()), mode)?;
    let upstream = Tensor::from_vec(out.shape(), functional.clone());
    let grad_in = layer.backward(&upstream)?;
    let mut analytic = flatten_grads(&layer.params());
    analytic.extend(grad_in.data());

    let mut theta0 = flatten_params(&layer.params());
    theta0.extend(&x0);

    let eval = |theta: &[f64]| -> Result<f64> {
        let mut fresh = make();
        {
            let mut params = fresh.params_mut();
            set_params(&mut params, &theta[..n_params]);
        }
        let x = Tensor::from_vec(input_shape, theta[n_params..].to_vec());
        let y = fresh.forward(&x, mode)?;
        Ok(y.data().iter().zip(&functional).map(|(a, b)| a * b).sum())
    };

    let coords = probe_coords(theta0.len(), max_probes, seed ^ 0x9e37);
    check_gradients(eval, &theta0, &analytic, &coords, FD_EPSILON)
}
