use serde::{Deserialize, Serialize};

use super::mlp::{tensor_name, Gradients, MlpModel, ParamTensors};
use crate::error::{Error, Result};

/// Update rule and its fixed hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// `v <- momentum * v + g; w <- w - lr * v`
    SgdMomentum { momentum: f64 },
    /// Bias-corrected Adam.
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    pub fn sgd(momentum: f64) -> Self {
        OptimizerKind::SgdMomentum { momentum }
    }

    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer buffers for one model. Buffers mirror the parameter tensors.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    kind: OptimizerKind,
    lr: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64, model: &MlpModel) -> Self {
        let zeros = || model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let second = match kind {
            OptimizerKind::Adam { .. } => zeros(),
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
        };
        Self {
            kind,
            lr,
            first: zeros(),
            second,
            steps: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update to `model` in place.
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        model.check_same_shape(grads)?;
        if self.first.len() != grads.tensors().len() {
            return Err(Error::Dimension(
                "optimizer state was built for a different model".into(),
            ));
        }
        for (i, g) in grads.tensors().iter().enumerate() {
            if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite gradient in {} at entry {pos}",
                    tensor_name(i)
                )));
            }
        }
        self.steps += 1;
        let lr = self.lr;
        let grads = grads.tensors();
        let params = model.tensors_mut();
        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                for ((w, v), g) in params.into_iter().zip(&mut self.first).zip(&grads) {
                    for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g.iter()) {
                        *vi = momentum * *vi + gi;
                        *wi -= lr * *vi;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((w, m), v), g) in params
                    .into_iter()
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                    .zip(&grads)
                {
                    for (((wi, mi), vi), gi) in w
                        .iter_mut()
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                        .zip(g.iter())
                    {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        let m_hat = *mi / c1;
                        let v_hat = *vi / c2;
                        *wi -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        for (i, t) in model.tensors().iter().enumerate() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "parameters of {} diverged to a non-finite value",
                    tensor_name(i)
                )));
            }
        }
        Ok(())
    }
}
