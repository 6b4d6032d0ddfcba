//! Backpropagation against central finite differences, plus algebraic
//! properties of the output deltas.

// Index loops mirror the per-component formulas being checked.
#![allow(clippy::needless_range_loop)]

use fedga::alignment::{
    calibrate_label, ce_output_delta, ce_output_deltas, ga_output_delta, ClassCounts,
};
use fedga::nn::{softmax, softmax_row, Matrix, MlpModel, ParamTensors};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn mean_ce(model: &MlpModel, x: &Matrix, labels: &[usize]) -> f64 {
    let probs = softmax(&model.logits(x).unwrap());
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| -probs.get(i, c).ln())
        .sum::<f64>()
        / labels.len() as f64
}

fn flat(t: &impl ParamTensors) -> Vec<f64> {
    t.tensors().into_iter().flatten().copied().collect()
}

#[test]
fn ce_gradient_matches_finite_differences() {
    let h = 1e-6;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = MlpModel::init(&[4, 8, 3], seed).unwrap();
        let n = 1 + (seed as usize % 8);
        let x = random_batch(&mut rng, n, 4);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();

        let (logits, trace) = model.forward(&x).unwrap();
        let delta = ce_output_deltas(&softmax(&logits), &labels).unwrap();
        let analytic = flat(&model.backward(&trace, &delta).unwrap());

        let mut numeric = Vec::with_capacity(analytic.len());
        let mut probe = model.clone();
        let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        for (t, &len) in sizes.iter().enumerate() {
            for i in 0..len {
                let orig = probe.tensors()[t][i];
                probe.tensors_mut()[t][i] = orig + h;
                let up = mean_ce(&probe, &x, &labels);
                probe.tensors_mut()[t][i] = orig - h;
                let down = mean_ce(&probe, &x, &labels);
                probe.tensors_mut()[t][i] = orig;
                numeric.push((up - down) / (2.0 * h));
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        let rel = diff / scale;
        assert!(rel <= 1e-6, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn backward_is_linear_in_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = MlpModel::init(&[5, 7, 4], 3).unwrap();
    let x = random_batch(&mut rng, 6, 5);
    let (_, trace) = model.forward(&x).unwrap();
    let d1 = random_batch(&mut rng, 6, 4);
    let d2 = random_batch(&mut rng, 6, 4);
    let (a, b) = (1.7, -0.3);
    let combo: Vec<f64> = d1
        .as_slice()
        .iter()
        .zip(d2.as_slice())
        .map(|(u, v)| a * u + b * v)
        .collect();
    let combo = Matrix::from_vec(6, 4, combo).unwrap();

    let g1 = flat(&model.backward(&trace, &d1).unwrap());
    let g2 = flat(&model.backward(&trace, &d2).unwrap());
    let g = flat(&model.backward(&trace, &combo).unwrap());
    for ((g, g1), g2) in g.iter().zip(&g1).zip(&g2) {
        assert!((g - (a * g1 + b * g2)).abs() <= 1e-10);
    }
}

fn probs_strategy(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0..8.0f64, c).prop_map(|z| softmax_row(&z))
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(z in prop::collection::vec(-700.0..700.0f64, 1..12)) {
        let p = softmax_row(&z);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ga_delta_is_prediction_minus_calibrated_label(
        counts in prop::collection::vec(0u64..500, 2..8),
        seed in any::<u64>(),
    ) {
        let c = counts.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..c).map(|_| rng.random_range(-5.0..5.0)).collect();
        let p = softmax_row(&z);
        let counts = ClassCounts::new(counts);
        for class in (0..c).filter(|&k| counts.get(k) > 0) {
            let d = ga_output_delta(&counts, class, &p).unwrap();
            let q = calibrate_label(&counts, class, &p).unwrap();
            let n_c = counts.get(class) as f64;
            for k in 0..c {
                // p - q cancels a term of size |q|, so allow for its rounding
                prop_assert!((d.0[k] - (p[k] - q.0[k])).abs() <= 1e-15 * q.0[k].abs().max(1.0));
                let closed = if k == class { p[k] - 1.0 } else { p[k] * (counts.get(k) as f64 / n_c) };
                prop_assert!((d.0[k] - closed).abs() <= 1e-15);
                if counts.get(k) == 0 {
                    prop_assert_eq!(d.0[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn balanced_counts_reduce_to_cross_entropy(n in 1u64..1000, p in probs_strategy(6), class in 0usize..6) {
        let counts = ClassCounts::new(vec![n; 6]);
        prop_assert_eq!(ga_output_delta(&counts, class, &p).unwrap(), ce_output_delta(&p, class));
    }
}
