//! Reference implementation of cyclically sampled last-iterate DP-SGD on
//! synthetic composite losses `(1/k) sum_i f_i + h` with quadratic `f_i`.
//!
//! Batch indices are 1-based: step `t` uses `B_t = {j_t + 1, ..., j_t + b}`
//! with `j_t = b (t - 1) mod k`.

mod dataset;
mod dpsgd;
mod prox;

pub use dataset::{
    first_step_containing, generate_quadratic_dataset, QuadraticLoss, SyntheticDataset,
};
pub use dpsgd::{
    cyclic_batch, prox_linear_step, run_dp_sgd, run_pair, NoiseStream, PairRun, Trajectory,
};
pub use prox::{clip, RegularizerSpec};

pub use nalgebra::{DMatrix, DVector};
