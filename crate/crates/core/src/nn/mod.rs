//! Dense MLP with manual backpropagation and SGD-momentum / Adam updates.
//!
//! The network outputs raw logits. Training code computes the loss gradient
//! with respect to those logits itself and hands it to
//! [`MlpModel::backward`], which is what lets the alignment code replace the
//! usual cross-entropy delta.

mod matrix;
mod mlp;
mod optim;

pub use matrix::Matrix;
pub use mlp::{tensor_name, ForwardTrace, Gradients, MlpModel, ParamTensors, MAX_PARAMETERS};
pub use optim::{OptimizerKind, OptimizerState};

/// Numerically stable softmax of one row.
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = Vec::with_capacity(logits.rows() * logits.cols());
    for row in logits.row_iter() {
        out.extend(softmax_row(row));
    }
    Matrix::from_vec(logits.rows(), logits.cols(), out).expect("same shape")
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
