use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

/// Upper bound on the parameter count accepted by [`MlpModel::init`].
pub const MAX_PARAMETERS: usize = 10_000_000;

/// Read/write access to parameter-shaped tensors, in the fixed order
/// `weights[0], biases[0], weights[1], biases[1], ...`.
pub trait ParamTensors {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
}

/// Human-readable name of the tensor at position `index` in
/// [`ParamTensors`] order.
pub fn tensor_name(index: usize) -> String {
    if index.is_multiple_of(2) {
        format!("weights[{}]", index / 2)
    } else {
        format!("biases[{}]", index / 2)
    }
}

/// Fully connected ReLU network producing raw logits.
///
/// `weights[l]` has shape `layer_dims[l] x layer_dims[l + 1]` and maps a row
/// of layer `l` activations onto layer `l + 1`. Softmax is not part of the
/// model.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Activations cached by [`MlpModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Input to each layer: the batch itself, then each hidden activation.
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer; the last entry is the logits.
    pre_activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn num_layers(&self) -> usize {
        self.pre_activations.len()
    }

    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, Matrix::rows)
    }

    pub fn layer_input(&self, layer: usize) -> &Matrix {
        &self.inputs[layer]
    }

    pub fn pre_activation(&self, layer: usize) -> &Matrix {
        &self.pre_activations[layer]
    }
}

/// Gradients with the same layout as the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "an MLP needs at least an input and an output layer, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer sizes must be positive, got {layer_dims:?}"
        )));
    }
    let mut total: usize = 0;
    for pair in layer_dims.windows(2) {
        let layer = pair[0]
            .checked_mul(pair[1])
            .and_then(|w| w.checked_add(pair[1]));
        total = match layer.and_then(|l| total.checked_add(l)) {
            Some(t) if t <= MAX_PARAMETERS => t,
            _ => {
                return Err(Error::Config(format!(
                    "layer sizes {layer_dims:?} exceed {MAX_PARAMETERS} parameters"
                )))
            }
        };
    }
    Ok(())
}

impl MlpModel {
    /// He-style uniform initialisation: weights drawn from
    /// `U(-sqrt(6 / fan_in), +sqrt(6 / fan_in))`, biases zero.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims
                .windows(2)
                .map(|p| Matrix::zeros(p[0], p[1]))
                .collect(),
            biases: layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        })
    }

    /// Assembles a model from explicit parameters, checking the shape chain.
    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_dims(&layer_dims)?;
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Dimension(format!(
                "{} weight and {} bias tensors for {layers} layers",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            if weights[l].shape() != (layer_dims[l], layer_dims[l + 1]) {
                return Err(Error::Dimension(format!(
                    "weights[{l}] is {:?}, expected {:?}",
                    weights[l].shape(),
                    (layer_dims[l], layer_dims[l + 1])
                )));
            }
            if biases[l].len() != layer_dims[l + 1] {
                return Err(Error::Dimension(format!(
                    "biases[{l}] has {} entries, expected {}",
                    biases[l].len(),
                    layer_dims[l + 1]
                )));
            }
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().expect("validated non-empty")
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Checks that `other` has exactly this model's parameter layout.
    pub fn check_same_shape<T: ParamTensors>(&self, other: &T) -> Result<()> {
        let mine = self.tensors();
        let theirs = other.tensors();
        if mine.len() != theirs.len() {
            return Err(Error::Dimension(format!(
                "{} tensors, expected {}",
                theirs.len(),
                mine.len()
            )));
        }
        for (i, (a, b)) in mine.iter().zip(&theirs).enumerate() {
            if a.len() != b.len() {
                return Err(Error::Dimension(format!(
                    "{} has {} entries, expected {}",
                    tensor_name(i),
                    b.len(),
                    a.len()
                )));
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Runs the network and keeps the activations needed by [`Self::backward`].
    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardTrace)> {
        self.check_batch(batch)?;
        let layers = self.num_layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre_activations = Vec::with_capacity(layers);
        inputs.push(batch.clone());
        for l in 0..layers {
            let z = dense(&inputs[l], &self.weights[l], &self.biases[l]);
            if l + 1 < layers {
                inputs.push(relu(&z));
            }
            pre_activations.push(z);
        }
        let logits = pre_activations.last().expect("at least one layer").clone();
        Ok((
            logits,
            ForwardTrace {
                inputs,
                pre_activations,
            },
        ))
    }

    /// Logits only, without caching activations.
    pub fn logits(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let layers = self.num_layers();
        let mut z = dense(batch, &self.weights[0], &self.biases[0]);
        for l in 1..layers {
            z = dense(&relu(&z), &self.weights[l], &self.biases[l]);
        }
        Ok(z)
    }

    /// Back-propagates `output_delta` (the loss gradient with respect to the
    /// logits, one row per sample) and returns batch-mean parameter gradients.
    pub fn backward(&self, trace: &ForwardTrace, output_delta: &Matrix) -> Result<Gradients> {
        let layers = self.num_layers();
        if trace.num_layers() != layers {
            return Err(Error::Dimension(format!(
                "trace has {} layers, model has {layers}",
                trace.num_layers()
            )));
        }
        let n = trace.batch_size();
        if output_delta.shape() != (n, self.num_classes()) {
            return Err(Error::Dimension(format!(
                "output delta is {:?}, logits are {:?}",
                output_delta.shape(),
                (n, self.num_classes())
            )));
        }
        if n == 0 {
            return Err(Error::Dimension(
                "cannot back-propagate an empty batch".into(),
            ));
        }
        let scale = 1.0 / n as f64;

        let mut grad_w: Vec<Matrix> = Vec::with_capacity(layers);
        let mut grad_b: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut delta = output_delta.clone();
        for l in (0..layers).rev() {
            let input = &trace.inputs[l];
            let w = &self.weights[l];
            let mut gw = Matrix::zeros(w.rows(), w.cols());
            let mut gb = vec![0.0; w.cols()];
            for i in 0..n {
                let d = delta.row(i);
                for (k, &a) in input.row(i).iter().enumerate() {
                    if a != 0.0 {
                        axpy(a, d, gw.row_mut(k));
                    }
                }
                for (b, v) in gb.iter_mut().zip(d) {
                    *b += v;
                }
            }
            gw.as_mut_slice().iter_mut().for_each(|g| *g *= scale);
            gb.iter_mut().for_each(|g| *g *= scale);

            if l > 0 {
                let z_prev = &trace.pre_activations[l - 1];
                let mut next = Matrix::zeros(n, w.rows());
                for i in 0..n {
                    let d = delta.row(i);
                    let z = z_prev.row(i);
                    let out = next.row_mut(i);
                    for k in 0..w.rows() {
                        if z[k] > 0.0 {
                            out[k] = dot(w.row(k), d);
                        }
                    }
                }
                delta = next;
            }
            grad_w.push(gw);
            grad_b.push(gb);
        }
        grad_w.reverse();
        grad_b.reverse();
        Ok(Gradients {
            weights: grad_w,
            biases: grad_b,
        })
    }
}

/// `input * weights + bias`, skipping zero inputs (pixels and ReLU outputs
/// are mostly zero).
fn dense(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(input.rows(), weights.cols());
    for i in 0..input.rows() {
        let o = out.row_mut(i);
        o.copy_from_slice(bias);
        for (k, &a) in input.row(i).iter().enumerate() {
            if a != 0.0 {
                axpy(a, weights.row(k), o);
            }
        }
    }
    out
}

fn relu(z: &Matrix) -> Matrix {
    let data = z.as_slice().iter().map(|&v| v.max(0.0)).collect();
    Matrix::from_vec(z.rows(), z.cols(), data).expect("same shape")
}

impl ParamTensors for MlpModel {
    fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

impl ParamTensors for Gradients {
    fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model
                .weights()
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        let theirs = other.tensors();
        let mut mine = self.tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::Dimension("gradient tensor counts differ".into()));
        }
        for (i, (a, b)) in mine.iter_mut().zip(&theirs).enumerate() {
            if a.len() != b.len() {
                return Err(Error::Dimension(format!("{} sizes differ", tensor_name(i))));
            }
            a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Largest absolute entry across all tensors.
    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
