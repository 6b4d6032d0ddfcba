//! Evaluation metrics and per-round bookkeeping.

use serde::{Deserialize, Serialize};

use crate::alignment::ClassCounts;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, MlpModel};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, true_class: usize) -> u64 {
        (0..self.num_classes).map(|p| self.get(true_class, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.num_classes).map(|t| self.get(t, predicted)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|i| self.get(i, i)).sum()
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let c = rows.len();
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension("confusion matrix must be square".into()));
        }
        Ok(Self {
            num_classes: c,
            counts: rows.concat(),
        })
    }
}

pub fn confusion(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut counts = vec![0u64; num_classes * num_classes];
    for (i, (&p, &t)) in predictions.iter().zip(labels).enumerate() {
        if p >= num_classes || t >= num_classes {
            return Err(Error::Data(format!(
                "sample {i}: class pair ({t}, {p}) outside 0..{num_classes}"
            )));
        }
        counts[t * num_classes + p] += 1;
    }
    Ok(ConfusionMatrix {
        num_classes,
        counts,
    })
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::Evaluation(
            "accuracy of an empty confusion matrix".into(),
        )),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

/// Unweighted mean of per-class F1; a class with `P + R = 0` contributes 0.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Evaluation("F1 of an empty confusion matrix".into()));
    }
    let c = cm.num_classes();
    let sum: f64 = (0..c)
        .map(|i| {
            let tp = cm.get(i, i) as f64;
            let predicted = cm.col_sum(i) as f64;
            let actual = cm.row_sum(i) as f64;
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if actual > 0.0 { tp / actual } else { 0.0 };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .sum();
    Ok(sum / c as f64)
}

/// Per-class recall; `None` for classes with no samples.
pub fn classwise_accuracy(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..cm.num_classes())
        .map(|i| match cm.row_sum(i) {
            0 => None,
            n => Some(cm.get(i, i) as f64 / n as f64),
        })
        .collect()
}

/// Mean accuracy drop (`pre - post`) per class bucket of one client.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgettingDelta {
    /// Classes the client holds no samples of.
    pub missing: Option<f64>,
    /// Classes with `0 < N <= median / 5`, median over the client's
    /// non-zero counts.
    pub rare: Option<f64>,
    pub majority: Option<f64>,
}

fn median(values: &mut [u64]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    }
}

pub fn forgetting_delta(
    pre: &[f64],
    post: &[f64],
    counts: &ClassCounts,
) -> Result<ForgettingDelta> {
    let c = counts.num_classes();
    if pre.len() != c || post.len() != c {
        return Err(Error::Dimension(format!(
            "pre/post vectors of length {}/{} for {c} classes",
            pre.len(),
            post.len()
        )));
    }
    let mut nonzero: Vec<u64> = counts
        .as_slice()
        .iter()
        .copied()
        .filter(|&n| n > 0)
        .collect();
    let rare_cut = if nonzero.is_empty() {
        0.0
    } else {
        median(&mut nonzero) / 5.0
    };
    let mut buckets = [(0.0, 0usize); 3];
    for i in 0..c {
        let n = counts.get(i);
        let b = if n == 0 {
            0
        } else if n as f64 <= rare_cut {
            1
        } else {
            2
        };
        buckets[b].0 += pre[i] - post[i];
        buckets[b].1 += 1;
    }
    let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
    Ok(ForgettingDelta {
        missing: mean(buckets[0]),
        rare: mean(buckets[1]),
        majority: mean(buckets[2]),
    })
}

/// First round index whose accuracy reaches `target`.
pub fn iterations_to_fraction(accuracy_curve: &[f64], target_accuracy: f64) -> Option<usize> {
    accuracy_curve.iter().position(|&a| a >= target_accuracy)
}

/// Mean of the available per-client EA ratios.
pub fn mean_client_ea_ratio(ratios: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = ratios.iter().filter_map(|r| *r).collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Predicted classes (lowest index wins ties) for every row of `dataset`.
pub fn predict(model: &MlpModel, dataset: &Dataset) -> Result<Vec<usize>> {
    const CHUNK: usize = 1024;
    let x = dataset.features();
    let mut out = Vec::with_capacity(dataset.len());
    let mut start = 0;
    while start < dataset.len() {
        let end = (start + CHUNK).min(dataset.len());
        let logits = model.logits(&x.row_range(start, end))?;
        out.extend(logits.row_iter().map(argmax));
        start = end;
    }
    Ok(out)
}

/// Predictions and their confusion matrix on one dataset.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub predictions: Vec<usize>,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn accuracy(&self) -> Result<f64> {
        accuracy(&self.confusion)
    }

    pub fn macro_f1(&self) -> Result<f64> {
        macro_f1(&self.confusion)
    }

    pub fn classwise_accuracy(&self) -> Vec<Option<f64>> {
        classwise_accuracy(&self.confusion)
    }
}

pub fn evaluate(model: &MlpModel, dataset: &Dataset) -> Result<Evaluation> {
    let predictions = predict(model, dataset)?;
    let confusion = confusion(&predictions, dataset.labels(), dataset.num_classes())?;
    Ok(Evaluation {
        predictions,
        confusion,
    })
}

/// Metrics of the global model after one round (round 0 is the initial
/// model).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub mean_ea_ratio: Option<f64>,
    pub class_accuracy: Vec<Option<f64>>,
    pub wall_time_secs: f64,
}

impl RoundRecord {
    /// Equality ignoring wall time.
    pub fn same_metrics(&self, other: &RoundRecord) -> bool {
        let bits = |v: &Option<f64>| v.map(f64::to_bits);
        self.round == other.round
            && self.accuracy.to_bits() == other.accuracy.to_bits()
            && self.macro_f1.to_bits() == other.macro_f1.to_bits()
            && bits(&self.mean_ea_ratio) == bits(&other.mean_ea_ratio)
            && self.class_accuracy.len() == other.class_accuracy.len()
            && self
                .class_accuracy
                .iter()
                .zip(&other.class_accuracy)
                .all(|(a, b)| bits(a) == bits(b))
    }
}

/// Class-wise test accuracy of one client before and after local training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrePostRecord {
    pub round: usize,
    pub client_id: usize,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub counts: Vec<u64>,
}

impl PrePostRecord {
    pub fn forgetting(&self) -> Result<ForgettingDelta> {
        forgetting_delta(
            &self.pre,
            &self.post,
            &ClassCounts::new(self.counts.clone()),
        )
    }
}
