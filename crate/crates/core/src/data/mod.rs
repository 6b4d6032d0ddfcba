//! Datasets, MNIST loading, synthetic data and client partitioning.

mod idx;
mod partition;

pub use idx::{
    dataset_from_idx, encode_idx_images, encode_idx_labels, load_mnist_dir, load_mnist_idx,
    parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC, LABELS_MAGIC, MNIST_CLASSES,
};
pub use partition::{
    dirichlet_partition, dirichlet_proportions, largest_remainder, DirichletSpec, PartitionPlan,
};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::alignment::ClassCounts;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{derive_rng, stream};

/// Feature rows with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Data(format!("label {bad} outside 0..{num_classes}")));
        }
        Ok(Self::new_unchecked(features, labels, num_classes))
    }

    pub(crate) fn new_unchecked(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Self {
        Self {
            features,
            labels,
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts::from_labels(&self.labels, self.num_classes).expect("labels validated")
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn indices_of_class(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Gaussian blobs: class `k` is centred on the unit vector `e_(k mod dim)`
/// with isotropic standard deviation `spread`, clamped to `[0, 1]`. Rows are
/// grouped by class in ascending order.
pub fn gen_synthetic(
    per_class_counts: &[usize],
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if per_class_counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyDataset);
    }
    if dim == 0 || !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Config(format!(
            "synthetic data needs dim > 0 and a finite spread >= 0 (dim={dim}, spread={spread})"
        )));
    }
    let mut rng = derive_rng(seed, &[stream::SYNTHETIC]);
    let total: usize = per_class_counts.iter().sum();
    let mut features = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for (class, &n) in per_class_counts.iter().enumerate() {
        for _ in 0..n {
            for d in 0..dim {
                let centre = if d == class % dim { 1.0 } else { 0.0 };
                let noise: f64 = StandardNormal.sample(&mut rng);
                features.push((centre + spread * noise).clamp(0.0, 1.0));
            }
            labels.push(class);
        }
    }
    Dataset::new(
        Matrix::from_vec(total, dim, features)?,
        labels,
        per_class_counts.len(),
    )
}

/// Two-class subset with a fixed imbalance ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySubsetSpec {
    /// Source class relabelled to 1 (the minority).
    pub positive_class: usize,
    /// Source class relabelled to 0.
    pub negative_class: usize,
    pub n_pos: usize,
    /// `n_neg = round(ratio * n_pos)`.
    pub ratio: f64,
    pub seed: u64,
}

impl BinarySubsetSpec {
    pub fn n_neg(&self) -> usize {
        (self.ratio * self.n_pos as f64).round() as usize
    }
}

/// Draws `n_pos` positives and `ratio * n_pos` negatives without
/// replacement and relabels them to `{1, 0}`. Rows keep their source order.
pub fn binary_imbalanced_subset(dataset: &Dataset, spec: &BinarySubsetSpec) -> Result<Dataset> {
    let c = dataset.num_classes();
    if spec.positive_class == spec.negative_class
        || spec.positive_class >= c
        || spec.negative_class >= c
    {
        return Err(Error::Config(format!(
            "binary subset needs two distinct classes in 0..{c}, got {} and {}",
            spec.positive_class, spec.negative_class
        )));
    }
    if !(spec.ratio >= 1.0 && spec.ratio.is_finite()) {
        return Err(Error::Config(format!(
            "imbalance ratio must be >= 1, got {}",
            spec.ratio
        )));
    }
    let n_neg = spec.n_neg();
    let mut pos = dataset.indices_of_class(spec.positive_class);
    let mut neg = dataset.indices_of_class(spec.negative_class);
    if pos.len() < spec.n_pos || neg.len() < n_neg {
        return Err(Error::Capacity(format!(
            "need {} of class {} and {n_neg} of class {}, have {} and {}",
            spec.n_pos,
            spec.positive_class,
            spec.negative_class,
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = derive_rng(spec.seed, &[stream::SUBSET]);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut chosen: Vec<(usize, usize)> = pos[..spec.n_pos]
        .iter()
        .map(|&i| (i, 1))
        .chain(neg[..n_neg].iter().map(|&i| (i, 0)))
        .collect();
    chosen.sort_unstable();
    let indices: Vec<usize> = chosen.iter().map(|&(i, _)| i).collect();
    Ok(Dataset {
        features: dataset.features.select_rows(&indices),
        labels: chosen.iter().map(|&(_, l)| l).collect(),
        num_classes: 2,
    })
}
