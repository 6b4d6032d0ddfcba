//! Class-imbalance analysis and gradient alignment.
//!
//! Cross-entropy with softmax gives the logit gradient `delta = p - y`. Summed
//! over a client's data, the gradient for logit `i` splits into an *active*
//! part from samples of class `i` (`N_i * (pbar_i^(i) - 1)`) and an *inactive*
//! part from every other class (`sum_j N_j * pbar_i^(j)`). When `N_j >> N_i`
//! the inactive part dominates and the Type I error of class `i` settles at
//! roughly `N_j / N_i` times its Type II error.
//!
//! Gradient alignment rescales each inactive contribution from `N_j` to
//! `N_i`. Per sample of class `c`, that is the calibrated target
//!
//! ```text
//! q[c] = 1
//! q[k] = (N_c - N_k) / N_c * p[k]     (k != c)
//! ```
//!
//! and the injected delta `p - q`, i.e. `delta[k] = p[k] * N_k / N_c`. A class
//! the client never saw (`N_k = 0`) receives no gradient at all.
//!
//! `q` is treated as a constant: differentiating a soft-target cross-entropy
//! instead would yield `p * sum(q) - q`, which differs whenever `sum(q) != 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Gradients, Matrix, MlpModel, ParamTensors};

/// Denominators below this are treated as zero in EA computations.
pub const EA_EPSILON: f64 = 1e-12;

/// Floor applied to probabilities before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// Samples per class in one client's local dataset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassCounts(Vec<u64>);

impl ClassCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    pub fn from_labels(labels: &[usize], num_classes: usize) -> Result<Self> {
        let mut counts = vec![0u64; num_classes];
        for &l in labels {
            *counts
                .get_mut(l)
                .ok_or_else(|| Error::Data(format!("label {l} outside 0..{num_classes}")))? += 1;
        }
        Ok(Self(counts))
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: usize) -> u64 {
        self.0[class]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// True when every class has the same count.
    pub fn is_balanced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

/// Soft target replacing the one-hot label of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibratedLabel(pub Vec<f64>);

/// Per-sample gradient of the loss with respect to the raw logits.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDelta(pub Vec<f64>);

fn check_sample(counts: &ClassCounts, true_class: usize, probs: &[f64]) -> Result<u64> {
    if probs.len() != counts.num_classes() {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} classes",
            probs.len(),
            counts.num_classes()
        )));
    }
    if true_class >= counts.num_classes() {
        return Err(Error::InvalidSample(format!(
            "class {true_class} outside 0..{}",
            counts.num_classes()
        )));
    }
    match counts.get(true_class) {
        0 => Err(Error::InvalidSample(format!(
            "sample labelled {true_class} but the client holds no samples of that class"
        ))),
        n => Ok(n),
    }
}

/// `N_k / N_c`, optionally capped.
#[inline]
fn inactive_scale(n_k: u64, n_c: u64, ratio_cap: Option<f64>) -> f64 {
    let r = n_k as f64 / n_c as f64;
    match ratio_cap {
        Some(cap) => r.min(cap),
        None => r,
    }
}

/// Calibrated label of one sample of class `true_class`.
pub fn calibrate_label(
    counts: &ClassCounts,
    true_class: usize,
    probs: &[f64],
) -> Result<CalibratedLabel> {
    calibrate_label_capped(counts, true_class, probs, None)
}

/// As [`calibrate_label`], with the ratio `N_k / N_c` clamped to `ratio_cap`.
pub fn calibrate_label_capped(
    counts: &ClassCounts,
    true_class: usize,
    probs: &[f64],
    ratio_cap: Option<f64>,
) -> Result<CalibratedLabel> {
    let n_c = check_sample(counts, true_class, probs)?;
    let q = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if k == true_class {
                1.0
            } else {
                (1.0 - inactive_scale(counts.get(k), n_c, ratio_cap)) * p
            }
        })
        .collect();
    Ok(CalibratedLabel(q))
}

/// Aligned logit gradient `p - q` of one sample, evaluated in closed form.
pub fn ga_output_delta(
    counts: &ClassCounts,
    true_class: usize,
    probs: &[f64],
) -> Result<OutputDelta> {
    ga_output_delta_capped(counts, true_class, probs, None)
}

pub fn ga_output_delta_capped(
    counts: &ClassCounts,
    true_class: usize,
    probs: &[f64],
    ratio_cap: Option<f64>,
) -> Result<OutputDelta> {
    let n_c = check_sample(counts, true_class, probs)?;
    let delta = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if k == true_class {
                p - 1.0
            } else {
                p * inactive_scale(counts.get(k), n_c, ratio_cap)
            }
        })
        .collect();
    Ok(OutputDelta(delta))
}

/// Standard cross-entropy logit gradient `p - onehot(c)`.
pub fn ce_output_delta(probs: &[f64], true_class: usize) -> OutputDelta {
    OutputDelta(
        probs
            .iter()
            .enumerate()
            .map(|(k, &p)| if k == true_class { p - 1.0 } else { p - 0.0 })
            .collect(),
    )
}

/// `-ln p[c]`, with `p[c]` floored at [`LOG_FLOOR`].
pub fn ce_loss(probs: &[f64], true_class: usize) -> f64 {
    -probs[true_class].max(LOG_FLOOR).ln()
}

/// `-sum_k q[k] ln p[k]`; the value logged for calibrated training.
pub fn soft_target_loss(probs: &[f64], target: &CalibratedLabel) -> f64 {
    -probs
        .iter()
        .zip(&target.0)
        .map(|(&p, &q)| q * p.max(LOG_FLOOR).ln())
        .sum::<f64>()
}

/// Cross-entropy deltas for a batch of softmax rows.
pub fn ce_output_deltas(probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
    check_batch(probs, labels)?;
    let mut out = Vec::with_capacity(probs.rows() * probs.cols());
    for (row, &c) in probs.row_iter().zip(labels) {
        if c >= probs.cols() {
            return Err(Error::InvalidSample(format!(
                "label {c} outside 0..{}",
                probs.cols()
            )));
        }
        out.extend(ce_output_delta(row, c).0);
    }
    Matrix::from_vec(probs.rows(), probs.cols(), out)
}

/// How a calibrated label becomes a logit gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaGradient {
    /// `p - q` with `q` held constant. Satisfies the alignment identity
    /// exactly, but its rows do not sum to zero.
    #[default]
    Delta,
    /// Gradient of `-sum_k q_k ln p_k` with `q` held constant:
    /// `p * sum(q) - q`. Rows sum to zero, so the update is a true descent
    /// direction of a (per-step) loss; alignment then only holds where
    /// `sum(q)` is close to 1.
    SoftTargetLoss,
}

/// Softmax cross-entropy gradient against a soft target: `p * sum(q) - q`.
pub fn soft_target_delta(probs: &[f64], target: &CalibratedLabel) -> OutputDelta {
    let mass: f64 = target.0.iter().sum();
    OutputDelta(
        probs
            .iter()
            .zip(&target.0)
            .map(|(&p, &q)| mass * p - q)
            .collect(),
    )
}

/// Aligned deltas for a batch, calibrated against the client's full-dataset
/// `counts`.
pub fn ga_output_deltas(
    probs: &Matrix,
    labels: &[usize],
    counts: &ClassCounts,
    ratio_cap: Option<f64>,
) -> Result<Matrix> {
    ga_batch_deltas(probs, labels, counts, ratio_cap, GaGradient::Delta)
}

/// As [`ga_output_deltas`] with an explicit gradient form.
pub fn ga_batch_deltas(
    probs: &Matrix,
    labels: &[usize],
    counts: &ClassCounts,
    ratio_cap: Option<f64>,
    form: GaGradient,
) -> Result<Matrix> {
    check_batch(probs, labels)?;
    let mut out = Vec::with_capacity(probs.rows() * probs.cols());
    for (row, &c) in probs.row_iter().zip(labels) {
        let delta = match form {
            GaGradient::Delta => ga_output_delta_capped(counts, c, row, ratio_cap)?,
            GaGradient::SoftTargetLoss => {
                soft_target_delta(row, &calibrate_label_capped(counts, c, row, ratio_cap)?)
            }
        };
        out.extend(delta.0);
    }
    Matrix::from_vec(probs.rows(), probs.cols(), out)
}

fn check_batch(probs: &Matrix, labels: &[usize]) -> Result<()> {
    if probs.rows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} probability rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    Ok(())
}

/// FedProx penalty gradient `mu * (w_local - w_global)`.
pub fn proximal_grad_term(w_local: &MlpModel, w_global: &MlpModel, mu: f64) -> Result<Gradients> {
    w_local.check_same_shape(w_global)?;
    let mut out = Gradients::zeros_like(w_local);
    for ((o, l), g) in out
        .tensors_mut()
        .into_iter()
        .zip(w_local.tensors())
        .zip(w_global.tensors())
    {
        for ((oi, li), gi) in o.iter_mut().zip(l).zip(g) {
            *oi = mu * (li - gi);
        }
    }
    Ok(out)
}

/// Mean predicted distribution per true class.
///
/// `pbar[j][i]` is the average probability assigned to class `i` by samples
/// whose label is `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMeanPredictions {
    pbar: Vec<Vec<f64>>,
    support: Vec<usize>,
}

impl ClassMeanPredictions {
    /// Builds from explicit rows; rows with zero support are ignored.
    pub fn from_parts(pbar: Vec<Vec<f64>>, support: Vec<usize>) -> Result<Self> {
        let c = pbar.len();
        if support.len() != c || pbar.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension(
                "pbar must be CxC with C support entries".into(),
            ));
        }
        Ok(Self { pbar, support })
    }

    pub fn num_classes(&self) -> usize {
        self.pbar.len()
    }

    pub fn row(&self, true_class: usize) -> Option<&[f64]> {
        self.is_present(true_class)
            .then(|| self.pbar[true_class].as_slice())
    }

    /// `pbar[true_class][predicted]`, zero for absent rows.
    pub fn get(&self, true_class: usize, predicted: usize) -> f64 {
        if self.is_present(true_class) {
            self.pbar[true_class][predicted]
        } else {
            0.0
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_present(&self, class: usize) -> bool {
        self.support[class] > 0
    }
}

pub fn class_mean_predictions(probs: &Matrix, labels: &[usize]) -> Result<ClassMeanPredictions> {
    check_batch(probs, labels)?;
    let c = probs.cols();
    let mut sums = vec![vec![0.0; c]; c];
    let mut support = vec![0usize; c];
    for (row, &l) in probs.row_iter().zip(labels) {
        if l >= c {
            return Err(Error::Data(format!("label {l} outside 0..{c}")));
        }
        support[l] += 1;
        for (s, p) in sums[l].iter_mut().zip(row) {
            *s += p;
        }
    }
    for (row, &n) in sums.iter_mut().zip(&support) {
        if n > 0 {
            row.iter_mut().for_each(|s| *s /= n as f64);
        }
    }
    Ok(ClassMeanPredictions {
        pbar: sums,
        support,
    })
}

/// Per-class error asymmetry; `None` where it is not computable.
#[derive(Clone, Debug, PartialEq)]
pub struct EaVector(pub Vec<Option<f64>>);

impl EaVector {
    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().filter_map(|v| *v)
    }
}

/// Ratio of Type I error `1 - pbar[i][i]` to the summed Type II error
/// `sum_{j != i} pbar[j][i]` over classes present in the data.
pub fn error_asymmetry(pbar: &ClassMeanPredictions) -> EaVector {
    let c = pbar.num_classes();
    let ea = (0..c)
        .map(|i| {
            if !pbar.is_present(i) {
                return None;
            }
            let type_two: f64 = (0..c)
                .filter(|&j| j != i && pbar.is_present(j))
                .map(|j| pbar.get(j, i))
                .sum();
            (type_two > EA_EPSILON).then(|| (1.0 - pbar.get(i, i)) / type_two)
        })
        .collect();
    EaVector(ea)
}

/// `max / min` over the present EA entries.
pub fn ea_ratio(ea: &EaVector) -> Option<f64> {
    let mut present = ea.present().peekable();
    present.peek()?;
    let (count, lo, hi) = present.fold(
        (0usize, f64::INFINITY, f64::NEG_INFINITY),
        |(n, lo, hi), v| (n + 1, lo.min(v), hi.max(v)),
    );
    (count >= 2 && lo > EA_EPSILON).then(|| hi / lo)
}

/// Mean Type I error `|p - 1|` over positives (label 1) and mean Type II
/// error `|p|` over negatives (label 0), where `p` is the positive-class
/// probability.
pub fn binary_type_errors(
    probs_pos_class: &[f64],
    labels: &[usize],
) -> Result<(Option<f64>, Option<f64>)> {
    if probs_pos_class.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} labels",
            probs_pos_class.len(),
            labels.len()
        )));
    }
    let (mut e1, mut n1, mut e2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    for (&p, &l) in probs_pos_class.iter().zip(labels) {
        match l {
            1 => {
                e1 += (p - 1.0).abs();
                n1 += 1;
            }
            0 => {
                e2 += p.abs();
                n2 += 1;
            }
            other => return Err(Error::Data(format!("binary label expected, got {other}"))),
        }
    }
    Ok((
        (n1 > 0).then(|| e1 / n1 as f64),
        (n2 > 0).then(|| e2 / n2 as f64),
    ))
}

/// Summed cross-entropy logit gradient for class `target_class` over a
/// dataset with the given counts: `N_i (pbar_ii - 1) + sum_{j != i} N_j pbar_ji`.
pub fn cumulative_gradient(
    pbar: &ClassMeanPredictions,
    counts: &ClassCounts,
    target_class: usize,
) -> Result<f64> {
    let c = pbar.num_classes();
    if counts.num_classes() != c || target_class >= c {
        return Err(Error::Dimension(format!(
            "{} counts and class {target_class} for {c} classes",
            counts.num_classes()
        )));
    }
    let active = counts.get(target_class) as f64 * (pbar.get(target_class, target_class) - 1.0);
    let inactive: f64 = (0..c)
        .filter(|&j| j != target_class)
        .map(|j| counts.get(j) as f64 * pbar.get(j, target_class))
        .sum();
    Ok(active + inactive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn worked_calibration_example() {
        let counts = ClassCounts::new(vec![100, 0, 20, 5, 20]);
        let p = [0.8, 0.1, 0.05, 0.01, 0.04];
        let q = calibrate_label(&counts, 0, &p).unwrap();
        assert!(
            close(&q.0, &[1.0, 0.1, 0.04, 0.0095, 0.032], 1e-12),
            "{q:?}"
        );
        let d = ga_output_delta(&counts, 0, &p).unwrap();
        assert!(
            close(&d.0, &[-0.2, 0.0, 0.01, 0.0005, 0.008], 1e-12),
            "{d:?}"
        );
    }

    #[test]
    fn balanced_counts_zero_inactive_targets() {
        let counts = ClassCounts::new(vec![7, 7]);
        let q = calibrate_label(&counts, 0, &[0.4, 0.6]).unwrap();
        assert_eq!(q.0, vec![1.0, 0.0]);
        let d = ga_output_delta(&counts, 1, &[0.4, 0.6]).unwrap();
        assert_eq!(d, ce_output_delta(&[0.4, 0.6], 1));
    }

    #[test]
    fn missing_class_target_equals_prediction() {
        let counts = ClassCounts::new(vec![10, 0]);
        let q = calibrate_label(&counts, 0, &[0.7, 0.3]).unwrap();
        assert_eq!(q.0, vec![1.0, 0.3]);
        let d = ga_output_delta(&counts, 0, &[0.7, 0.3]).unwrap();
        assert_eq!(d.0[1], 0.0);
    }

    #[test]
    fn empty_true_class_is_invalid() {
        let counts = ClassCounts::new(vec![10, 0]);
        assert!(matches!(
            calibrate_label(&counts, 1, &[0.5, 0.5]),
            Err(Error::InvalidSample(_))
        ));
        assert!(matches!(
            ga_output_delta(&counts, 1, &[0.5, 0.5]),
            Err(Error::InvalidSample(_))
        ));
    }

    #[test]
    fn ratio_cap_limits_amplification() {
        let counts = ClassCounts::new(vec![1, 500]);
        let d = ga_output_delta_capped(&counts, 0, &[0.5, 0.5], Some(10.0)).unwrap();
        assert_eq!(d.0, vec![-0.5, 5.0]);
        let q = calibrate_label_capped(&counts, 0, &[0.5, 0.5], Some(10.0)).unwrap();
        assert_eq!(q.0, vec![1.0, -4.5]);
    }

    #[test]
    fn soft_target_delta_rows_sum_to_zero() {
        let counts = ClassCounts::new(vec![100, 0, 20, 5, 20]);
        let p = [0.8, 0.1, 0.05, 0.01, 0.04];
        let q = calibrate_label(&counts, 0, &p).unwrap();
        let d = soft_target_delta(&p, &q);
        assert!(d.0.iter().sum::<f64>().abs() < 1e-15);
        // one-hot target reduces to the plain cross-entropy delta
        let ce = soft_target_delta(&p, &CalibratedLabel(vec![1.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(ce, ce_output_delta(&p, 0));
        let balanced = ClassCounts::new(vec![3, 3]);
        let probs = Matrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let a =
            ga_batch_deltas(&probs, &[0, 1], &balanced, None, GaGradient::SoftTargetLoss).unwrap();
        assert_eq!(a, ce_output_deltas(&probs, &[0, 1]).unwrap());
    }

    #[test]
    fn ce_delta_cases() {
        assert_eq!(ce_output_delta(&[0.0, 1.0, 0.0], 1).0, vec![0.0, 0.0, 0.0]);
        assert_eq!(
            ce_output_delta(&[0.25; 4], 2).0,
            vec![0.25, 0.25, -0.75, 0.25]
        );
    }

    #[test]
    fn ce_loss_values() {
        assert_eq!(ce_loss(&[0.0, 1.0], 1), 0.0);
        assert!((ce_loss(&[(-1.0f64).exp(), 0.0], 0) - 1.0).abs() < 1e-15);
        assert!((ce_loss(&[0.5, 0.5], 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(ce_loss(&[0.0, 1.0], 0).is_finite());
    }

    #[test]
    fn soft_target_loss_reduces_to_ce_for_one_hot() {
        let p = [0.2, 0.5, 0.3];
        let q = CalibratedLabel(vec![0.0, 1.0, 0.0]);
        assert!((soft_target_loss(&p, &q) - ce_loss(&p, 1)).abs() < 1e-15);
    }

    #[test]
    fn proximal_term_cases() {
        let a = MlpModel::init(&[2, 3], 1).unwrap();
        assert_eq!(proximal_grad_term(&a, &a, 0.01).unwrap().max_abs(), 0.0);
        let b = MlpModel::init(&[2, 3], 2).unwrap();
        assert_eq!(proximal_grad_term(&a, &b, 0.0).unwrap().max_abs(), 0.0);

        let scalar = |w: f64| {
            MlpModel::from_parts(
                vec![1, 1],
                vec![Matrix::from_vec(1, 1, vec![w]).unwrap()],
                vec![vec![0.0]],
            )
            .unwrap()
        };
        let g = proximal_grad_term(&scalar(3.0), &scalar(1.0), 0.001).unwrap();
        assert!((g.weights[0].get(0, 0) - 0.002).abs() < 1e-18);

        let c = MlpModel::init(&[3, 3], 1).unwrap();
        assert!(matches!(
            proximal_grad_term(&a, &c, 0.1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn class_means() {
        let probs = Matrix::from_rows(&[[0.9, 0.1], [0.2, 0.8]]).unwrap();
        let m = class_mean_predictions(&probs, &[0, 1]).unwrap();
        assert_eq!(m.row(0).unwrap(), &[0.9, 0.1]);
        assert_eq!(m.row(1).unwrap(), &[0.2, 0.8]);

        let probs = Matrix::from_rows(&[[1.0, 0.0], [0.5, 0.5]]).unwrap();
        let m = class_mean_predictions(&probs, &[0, 0]).unwrap();
        assert_eq!(m.row(0).unwrap(), &[0.75, 0.25]);
        assert!(m.row(1).is_none());
        assert_eq!(m.support(), &[2, 0]);
    }

    #[test]
    fn ea_cases() {
        let uniform =
            ClassMeanPredictions::from_parts(vec![vec![0.5, 0.5]; 2], vec![3, 3]).unwrap();
        assert_eq!(error_asymmetry(&uniform).0, vec![Some(1.0), Some(1.0)]);

        let skewed =
            ClassMeanPredictions::from_parts(vec![vec![0.9, 0.1], vec![0.3, 0.7]], vec![1, 1])
                .unwrap();
        let ea = error_asymmetry(&skewed);
        assert!((ea.0[0].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ea.0[1].unwrap() - 3.0).abs() < 1e-12);
        assert!((ea_ratio(&ea).unwrap() - 9.0).abs() < 1e-12);

        let missing =
            ClassMeanPredictions::from_parts(vec![vec![0.9, 0.1], vec![0.0, 0.0]], vec![4, 0])
                .unwrap();
        assert_eq!(error_asymmetry(&missing).0, vec![None, None]);
    }

    #[test]
    fn ea_ratio_cases() {
        assert_eq!(ea_ratio(&EaVector(vec![Some(1.0); 3])), Some(1.0));
        assert_eq!(
            ea_ratio(&EaVector(vec![Some(5.0), None, Some(1.0)])),
            Some(5.0)
        );
        assert_eq!(ea_ratio(&EaVector(vec![Some(5.0), None])), None);
        assert_eq!(ea_ratio(&EaVector(vec![Some(5.0), Some(0.0)])), None);
        assert_eq!(ea_ratio(&EaVector(vec![])), None);
    }

    #[test]
    fn binary_errors() {
        let (u1, u2) = binary_type_errors(&[1.0, 1.0, 0.0], &[1, 1, 0]).unwrap();
        assert_eq!((u1, u2), (Some(0.0), Some(0.0)));
        let (u1, u2) = binary_type_errors(&[0.5; 4], &[1, 0, 1, 0]).unwrap();
        assert_eq!((u1, u2), (Some(0.5), Some(0.5)));
        let (u1, u2) = binary_type_errors(&[0.6, 0.8, 0.1], &[1, 1, 0]).unwrap();
        assert!((u1.unwrap() - 0.3).abs() < 1e-15);
        assert!((u2.unwrap() - 0.1).abs() < 1e-15);
        let (u1, u2) = binary_type_errors(&[0.2], &[0]).unwrap();
        assert_eq!(u1, None);
        assert!(u2.is_some());
    }

    #[test]
    fn cumulative_gradient_cases() {
        let perfect =
            ClassMeanPredictions::from_parts(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![3, 5])
                .unwrap();
        let counts = ClassCounts::new(vec![3, 5]);
        for i in 0..2 {
            assert_eq!(cumulative_gradient(&perfect, &counts, i).unwrap(), 0.0);
        }
        let pbar =
            ClassMeanPredictions::from_parts(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![2, 2])
                .unwrap();
        let g = cumulative_gradient(&pbar, &ClassCounts::new(vec![2, 2]), 0).unwrap();
        assert!(g.abs() < 1e-15);
    }
}
