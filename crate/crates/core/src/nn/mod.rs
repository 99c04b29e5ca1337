//! Minimal differentiable-layer kernel in 64-bit floats: dense, conv2d,
//! batchnorm, dropout, ReLU, pooling, residual blocks, softmax +
//! cross-entropy, Adam, and finite-difference gradient checking.

pub mod batchnorm;
pub mod conv;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod pool;
pub mod residual;
mod tensor;

pub use batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use conv::{Conv2d, MaxPool2d};
pub use gradcheck::{
    check_gradients, check_layer, flatten_grads, flatten_params, probe_coords, relative_error,
    set_params, GradCheckReport, FD_EPSILON,
};
pub use layers::{Dense, Dropout, Layer, Mode, Param, Relu, Sequential};
pub use loss::{cross_entropy_from_probs, one_hot, softmax_cross_entropy, softmax_rows, Softmax};
pub use optim::{Adam, AdamConfig};
pub use pool::{GlobalAvgPool, GlobalMaxPool};
pub use residual::{BasicBlock, BottleneckBlock, BOTTLENECK_EXPANSION};
pub use tensor::{concat_features, split_features, Tensor};
