//! Server round loop, local client training and sample-weighted aggregation.
//!
//! Every random choice is drawn from a stream keyed by `(seed, purpose,
//! round, client)`, so results do not depend on the order in which client
//! updates execute.

use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    calibrate_label_capped, ce_loss, ce_output_deltas, class_mean_predictions, ea_ratio,
    error_asymmetry, ga_batch_deltas, proximal_grad_term, soft_target_loss, ClassCounts, EaVector,
    GaGradient,
};
use crate::data::{Dataset, PartitionPlan};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, mean_client_ea_ratio, PrePostRecord, RoundRecord};
use crate::nn::{softmax, Matrix, MlpModel, OptimizerKind, OptimizerState, ParamTensors};
use crate::rng::{derive_rng, derive_seed, stream};

/// Local training rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodKind {
    /// Cross-entropy delta `p - onehot(y)`.
    FedAvg,
    /// Cross-entropy plus the proximal pull `mu * (w - w_global)`.
    FedProx { mu: f64 },
    /// Calibrated-label delta using the client's full-dataset class counts.
    FedGa,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::FedAvg => "fedavg",
            MethodKind::FedProx { .. } => "fedprox",
            MethodKind::FedGa => "fedga",
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MethodKind::FedProx { mu } => write!(f, "fedprox:{mu}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Federation and local-training settings for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub num_clients: usize,
    pub active_per_round: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub method: MethodKind,
    pub rounds: usize,
    /// Evaluate the global model every this many rounds (and after the last).
    pub eval_every: usize,
    /// Measure client EA every this many rounds; 0 disables.
    pub ea_every: usize,
    /// On EA rounds, also record class-wise test accuracy before and after
    /// each client's local training.
    pub instrument_pre_post: bool,
    pub hidden_layers: Vec<usize>,
    /// Optional clamp on `N_k / N_c` in calibrated deltas.
    pub ga_ratio_cap: Option<f64>,
    pub ga_gradient: GaGradient,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            num_clients: 100,
            active_per_round: 10,
            local_epochs: 2,
            batch_size: 64,
            lr: 0.1,
            optimizer: OptimizerKind::sgd(0.9),
            method: MethodKind::FedAvg,
            rounds: 100,
            eval_every: 1,
            ea_every: 10,
            instrument_pre_post: false,
            hidden_layers: vec![128],
            ga_ratio_cap: None,
            ga_gradient: GaGradient::Delta,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_clients == 0 {
            return fail("num_clients must be at least 1".into());
        }
        if self.active_per_round == 0 || self.active_per_round > self.num_clients {
            return fail(format!(
                "K exceeds P or is zero: active_per_round={} num_clients={}",
                self.active_per_round, self.num_clients
            ));
        }
        if self.local_epochs == 0 {
            return fail("local_epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return fail(format!(
                "lr must be finite and non-negative, got {}",
                self.lr
            ));
        }
        if let MethodKind::FedProx { mu } = self.method {
            if !(mu >= 0.0 && mu.is_finite()) {
                return fail(format!(
                    "FedProx mu must be finite and non-negative, got {mu}"
                ));
            }
        }
        if let Some(cap) = self.ga_ratio_cap {
            if cap.is_nan() || cap <= 0.0 {
                return fail(format!("ga_ratio_cap must be positive, got {cap}"));
            }
        }
        match self.optimizer {
            OptimizerKind::SgdMomentum { momentum } if !(0.0..1.0).contains(&momentum) => {
                fail(format!("momentum must lie in [0, 1), got {momentum}"))
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0) => {
                fail("Adam needs beta1, beta2 in [0, 1) and epsilon > 0".into())
            }
            _ => Ok(()),
        }
    }

    pub fn layer_dims(&self, input_dim: usize, num_classes: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 2);
        dims.push(input_dim);
        dims.extend(&self.hidden_layers);
        dims.push(num_classes);
        dims
    }
}

pub fn selection_rng(seed: u64, round: usize) -> ChaCha8Rng {
    derive_rng(seed, &[stream::SELECTION, round as u64])
}

pub fn client_rng(seed: u64, round: usize, client_id: usize) -> ChaCha8Rng {
    derive_rng(seed, &[stream::CLIENT, round as u64, client_id as u64])
}

/// Uniformly samples `k` distinct ids from `eligible`, returned ascending.
pub fn select_clients<R: Rng + ?Sized>(
    eligible: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k > eligible.len() {
        return Err(Error::Config(format!(
            "cannot select {k} clients from {} non-empty clients",
            eligible.len()
        )));
    }
    let mut chosen: Vec<usize> = index::sample(rng, eligible.len(), k)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Loss value and injected logit delta of one local step.
#[derive(Clone, Debug)]
pub struct BatchOutcome {
    pub loss: f64,
    pub delta: Matrix,
}

/// Local optimisation of a copy of the global model under one method.
pub struct LocalTrainer<'a> {
    model: MlpModel,
    global: &'a MlpModel,
    optimizer: OptimizerState,
    method: MethodKind,
    counts: &'a ClassCounts,
    ratio_cap: Option<f64>,
    ga_gradient: GaGradient,
}

impl<'a> LocalTrainer<'a> {
    /// Starts from a copy of `global` with a fresh optimizer state.
    pub fn new(
        global: &'a MlpModel,
        counts: &'a ClassCounts,
        method: MethodKind,
        optimizer: OptimizerKind,
        lr: f64,
        ratio_cap: Option<f64>,
    ) -> Self {
        Self {
            model: global.clone(),
            global,
            optimizer: OptimizerState::new(optimizer, lr, global),
            method,
            counts,
            ratio_cap,
            ga_gradient: GaGradient::Delta,
        }
    }

    /// Selects how FedGA turns calibrated labels into logit gradients.
    pub fn with_ga_gradient(mut self, form: GaGradient) -> Self {
        self.ga_gradient = form;
        self
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn into_model(self) -> MlpModel {
        self.model
    }

    /// Forward, method-specific logit delta, backward and one optimizer step.
    pub fn step(&mut self, x: &Matrix, labels: &[usize]) -> Result<BatchOutcome> {
        let (logits, trace) = self.model.forward(x)?;
        let probs = softmax(&logits);
        let delta = match self.method {
            MethodKind::FedAvg | MethodKind::FedProx { .. } => ce_output_deltas(&probs, labels)?,
            MethodKind::FedGa => ga_batch_deltas(
                &probs,
                labels,
                self.counts,
                self.ratio_cap,
                self.ga_gradient,
            )?,
        };
        let loss = self.batch_loss(&probs, labels)?;
        let mut grads = self.model.backward(&trace, &delta)?;
        if let MethodKind::FedProx { mu } = self.method {
            grads.add_assign(&proximal_grad_term(&self.model, self.global, mu)?)?;
        }
        self.optimizer.step(&mut self.model, &grads)?;
        Ok(BatchOutcome { loss, delta })
    }

    /// Mean cross-entropy against the training target (the calibrated label
    /// under FedGA). Monitoring only.
    fn batch_loss(&self, probs: &Matrix, labels: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (row, &c) in probs.row_iter().zip(labels) {
            total += match self.method {
                MethodKind::FedGa => soft_target_loss(
                    row,
                    &calibrate_label_capped(self.counts, c, row, self.ratio_cap)?,
                ),
                _ => ce_loss(row, c),
            };
        }
        Ok(total / labels.len().max(1) as f64)
    }

    /// Runs `epochs` passes over `indices` of `dataset` in mini-batches,
    /// reshuffling each epoch from `rng`. Returns the mean batch loss.
    pub fn run_epochs<R: Rng + ?Sized>(
        &mut self,
        dataset: &Dataset,
        indices: &[usize],
        epochs: usize,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let mut order = indices.to_vec();
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for epoch in 0..epochs {
            order.shuffle(rng);
            for (b, chunk) in order.chunks(batch_size).enumerate() {
                let x = dataset.features().select_rows(chunk);
                let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels()[i]).collect();
                let out = self
                    .step(&x, &labels)
                    .map_err(|e| e.context(format!("epoch {epoch}, batch {b}")))?;
                loss_sum += out.loss;
                batches += 1;
            }
        }
        Ok(if batches > 0 {
            loss_sum / batches as f64
        } else {
            0.0
        })
    }
}

/// One client's slice of the training set.
#[derive(Clone, Debug)]
pub struct ClientData<'a> {
    pub client_id: usize,
    pub dataset: &'a Dataset,
    pub indices: &'a [usize],
    pub counts: ClassCounts,
}

impl<'a> ClientData<'a> {
    pub fn new(client_id: usize, dataset: &'a Dataset, indices: &'a [usize]) -> Self {
        let labels: Vec<usize> = indices.iter().map(|&i| dataset.labels()[i]).collect();
        let counts =
            ClassCounts::from_labels(&labels, dataset.num_classes()).expect("labels validated");
        Self {
            client_id,
            dataset,
            indices,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Optional measurements taken around a client update.
#[derive(Clone, Copy, Debug, Default)]
pub struct Instrumentation<'a> {
    pub round: usize,
    /// Compute EA of the updated model on the client's full local data.
    pub measure_ea: bool,
    /// Balanced test set and the global model's class-wise accuracy on it.
    pub pre_post: Option<(&'a Dataset, &'a [f64])>,
}

#[derive(Clone, Debug)]
pub struct ClientUpdateResult {
    pub client_id: usize,
    pub model: MlpModel,
    pub n_samples: usize,
    pub mean_loss: f64,
    pub ea: Option<EaVector>,
    pub ea_ratio: Option<f64>,
    pub pre_post: Option<PrePostRecord>,
}

impl ClientUpdateResult {
    pub fn new(client_id: usize, model: MlpModel, n_samples: usize) -> Self {
        Self {
            client_id,
            model,
            n_samples,
            mean_loss: 0.0,
            ea: None,
            ea_ratio: None,
            pre_post: None,
        }
    }
}

/// Class-wise accuracy with absent classes reported as 0.
pub fn class_accuracy_vector(model: &MlpModel, dataset: &Dataset) -> Result<Vec<f64>> {
    Ok(evaluate(model, dataset)?
        .classwise_accuracy()
        .into_iter()
        .map(|a| a.unwrap_or(0.0))
        .collect())
}

/// Error asymmetry of `model` on the given rows.
pub fn local_error_asymmetry(
    model: &MlpModel,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<EaVector> {
    let x = dataset.features().select_rows(indices);
    let labels: Vec<usize> = indices.iter().map(|&i| dataset.labels()[i]).collect();
    let probs = softmax(&model.logits(&x)?);
    Ok(error_asymmetry(&class_mean_predictions(&probs, &labels)?))
}

pub fn client_update<R: Rng + ?Sized>(
    global: &MlpModel,
    client: &ClientData<'_>,
    config: &RoundConfig,
    rng: &mut R,
    instrumentation: Instrumentation<'_>,
) -> Result<ClientUpdateResult> {
    let ctx = |e: Error| e.context(format!("client {}", client.client_id));
    if client.is_empty() {
        return Err(ctx(Error::EmptyDataset));
    }
    let mut trainer = LocalTrainer::new(
        global,
        &client.counts,
        config.method,
        config.optimizer,
        config.lr,
        config.ga_ratio_cap,
    )
    .with_ga_gradient(config.ga_gradient);
    let mean_loss = trainer
        .run_epochs(
            client.dataset,
            client.indices,
            config.local_epochs,
            config.batch_size,
            rng,
        )
        .map_err(ctx)?;
    let model = trainer.into_model();

    let mut result = ClientUpdateResult::new(client.client_id, model, client.len());
    result.mean_loss = mean_loss;
    if instrumentation.measure_ea {
        let ea =
            local_error_asymmetry(&result.model, client.dataset, client.indices).map_err(ctx)?;
        result.ea_ratio = ea_ratio(&ea);
        result.ea = Some(ea);
    }
    if let Some((test, pre)) = instrumentation.pre_post {
        result.pre_post = Some(PrePostRecord {
            round: instrumentation.round,
            client_id: client.client_id,
            pre: pre.to_vec(),
            post: class_accuracy_vector(&result.model, test).map_err(ctx)?,
            counts: client.counts.as_slice().to_vec(),
        });
    }
    Ok(result)
}

/// Sample-weighted parameter mean, accumulated in ascending client order as
/// a running mean `m += (n_i / S_i) (w_i - m)` so that identical inputs
/// reproduce themselves exactly.
pub fn aggregate(results: &[ClientUpdateResult]) -> Result<MlpModel> {
    let mut ordered: Vec<&ClientUpdateResult> = results.iter().collect();
    ordered.sort_by_key(|r| r.client_id);
    let (first, rest) = ordered
        .split_first()
        .ok_or_else(|| Error::Config("nothing to aggregate".into()))?;
    for r in rest {
        first.model.check_same_shape(&r.model)?;
        if r.model.layer_dims() != first.model.layer_dims() {
            return Err(Error::Dimension(format!(
                "client {} has layer sizes {:?}, expected {:?}",
                r.client_id,
                r.model.layer_dims(),
                first.model.layer_dims()
            )));
        }
    }
    let mut acc = first.model.clone();
    let mut cumulative = first.n_samples as f64;
    for r in rest {
        if r.n_samples == 0 {
            continue;
        }
        cumulative += r.n_samples as f64;
        let w = r.n_samples as f64 / cumulative;
        for (a, x) in acc.tensors_mut().into_iter().zip(r.model.tensors()) {
            for (ai, xi) in a.iter_mut().zip(x) {
                *ai += w * (xi - *ai);
            }
        }
    }
    if cumulative == 0.0 {
        return Err(Error::Config("aggregation weights sum to zero".into()));
    }
    Ok(acc)
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub records: Vec<RoundRecord>,
    pub final_model: MlpModel,
    /// Predictions of the final global model on the test set.
    pub final_predictions: Vec<usize>,
    /// `(round, mean client EA ratio)` for every EA-instrumented round.
    pub ea_series: Vec<(usize, Option<f64>)>,
    pub pre_post: Vec<PrePostRecord>,
}

impl RunArtifacts {
    pub fn accuracy_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.accuracy).collect()
    }

    pub fn final_record(&self) -> &RoundRecord {
        self.records.last().expect("round 0 is always recorded")
    }
}

pub fn run_experiment(
    config: &RoundConfig,
    train: &Dataset,
    test: &Dataset,
    partition: &PartitionPlan,
    seed: u64,
) -> Result<RunArtifacts> {
    run_experiment_with(config, train, test, partition, seed, &mut |_| {})
}

/// As [`run_experiment`], handing each record to `on_record` as soon as it
/// is produced.
pub fn run_experiment_with(
    config: &RoundConfig,
    train: &Dataset,
    test: &Dataset,
    partition: &PartitionPlan,
    seed: u64,
    on_record: &mut dyn FnMut(&RoundRecord),
) -> Result<RunArtifacts> {
    config.validate()?;
    if partition.num_clients() != config.num_clients {
        return Err(Error::Config(format!(
            "partition has {} clients, config expects {}",
            partition.num_clients(),
            config.num_clients
        )));
    }
    partition.validate(train.len())?;
    if test.num_classes() != train.num_classes() || test.input_dim() != train.input_dim() {
        return Err(Error::Dimension(
            "train and test sets disagree on shape".into(),
        ));
    }
    let empty = partition.empty_clients();
    if !empty.is_empty() {
        log::warn!(
            "{} empty clients excluded from selection: {empty:?}",
            empty.len()
        );
    }
    let clients: Vec<ClientData<'_>> = partition
        .client_indices
        .iter()
        .enumerate()
        .map(|(id, idx)| ClientData::new(id, train, idx))
        .collect();
    let eligible = partition.non_empty_clients();

    let dims = config.layer_dims(train.input_dim(), train.num_classes());
    let mut global = MlpModel::init(&dims, derive_seed(seed, &[stream::MODEL_INIT]))?;

    let mut records = Vec::new();
    let mut ea_series = Vec::new();
    let mut pre_post = Vec::new();
    let started = Instant::now();
    let mut record = |round: usize, model: &MlpModel, ea: Option<f64>| -> Result<Vec<usize>> {
        let eval = evaluate(model, test)?;
        let rec = RoundRecord {
            round,
            accuracy: eval.accuracy()?,
            macro_f1: eval.macro_f1()?,
            mean_ea_ratio: ea,
            class_accuracy: eval.classwise_accuracy(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        };
        on_record(&rec);
        records.push(rec);
        Ok(eval.predictions)
    };

    let mut predictions = record(0, &global, None)?;
    for round in 1..=config.rounds {
        let selected = select_clients(
            &eligible,
            config.active_per_round,
            &mut selection_rng(seed, round),
        )?;
        let measure_ea = config.ea_every > 0 && round % config.ea_every == 0;
        let pre = if measure_ea && config.instrument_pre_post {
            Some(class_accuracy_vector(&global, test)?)
        } else {
            None
        };
        let instrumentation = Instrumentation {
            round,
            measure_ea,
            pre_post: pre.as_deref().map(|p| (test, p)),
        };
        let results: Vec<ClientUpdateResult> = selected
            .par_iter()
            .map(|&id| {
                client_update(
                    &global,
                    &clients[id],
                    config,
                    &mut client_rng(seed, round, id),
                    instrumentation,
                )
                .map_err(|e| e.context(format!("round {round}")))
            })
            .collect::<Result<_>>()?;
        global = aggregate(&results)?;

        let ea = if measure_ea {
            let ratios: Vec<Option<f64>> = results.iter().map(|r| r.ea_ratio).collect();
            let mean = mean_client_ea_ratio(&ratios);
            ea_series.push((round, mean));
            mean
        } else {
            None
        };
        pre_post.extend(results.into_iter().filter_map(|r| r.pre_post));
        if round % config.eval_every == 0 || round == config.rounds {
            predictions = record(round, &global, ea)?;
        }
    }

    Ok(RunArtifacts {
        records,
        final_model: global,
        final_predictions: predictions,
        ea_series,
        pre_post,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{dirichlet_partition, gen_synthetic, DirichletSpec};

    fn scalar(w: f64) -> MlpModel {
        MlpModel::from_parts(
            vec![1, 1],
            vec![Matrix::from_vec(1, 1, vec![w]).unwrap()],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn selection_covers_all_when_k_equals_p() {
        let eligible: Vec<usize> = (0..7).collect();
        let sel = select_clients(&eligible, 7, &mut selection_rng(3, 1)).unwrap();
        assert_eq!(sel, eligible);
    }

    #[test]
    fn selection_is_deterministic_and_distinct() {
        let eligible: Vec<usize> = (0..100).collect();
        let a = select_clients(&eligible, 10, &mut selection_rng(5, 17)).unwrap();
        let b = select_clients(&eligible, 10, &mut selection_rng(5, 17)).unwrap();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);
        assert!(select_clients(&eligible[..3], 4, &mut selection_rng(0, 0)).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let same = vec![
            ClientUpdateResult::new(0, MlpModel::init(&[3, 2], 1).unwrap(), 5),
            ClientUpdateResult::new(1, MlpModel::init(&[3, 2], 1).unwrap(), 7),
            ClientUpdateResult::new(2, MlpModel::init(&[3, 2], 1).unwrap(), 11),
        ];
        assert_eq!(aggregate(&same).unwrap(), same[0].model);

        let mid = aggregate(&[
            ClientUpdateResult::new(0, scalar(0.0), 4),
            ClientUpdateResult::new(1, scalar(2.0), 4),
        ])
        .unwrap();
        assert_eq!(mid.weights()[0].get(0, 0), 1.0);

        let weighted = aggregate(&[
            ClientUpdateResult::new(1, scalar(4.0), 3),
            ClientUpdateResult::new(0, scalar(0.0), 1),
        ])
        .unwrap();
        assert_eq!(weighted.weights()[0].get(0, 0), 3.0);

        let bad = aggregate(&[
            ClientUpdateResult::new(0, scalar(0.0), 1),
            ClientUpdateResult::new(1, MlpModel::init(&[2, 1], 0).unwrap(), 1),
        ]);
        assert!(matches!(bad, Err(Error::Dimension(_))));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = RoundConfig {
            active_per_round: 200,
            ..RoundConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("K exceeds P")));
        c.active_per_round = 10;
        c.validate().unwrap();
        c.method = MethodKind::FedProx { mu: -1.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_lr_returns_global_model() {
        let ds = gen_synthetic(&[20, 20], 4, 0.2, 0).unwrap();
        let idx: Vec<usize> = (0..ds.len()).collect();
        let client = ClientData::new(0, &ds, &idx);
        let global = MlpModel::init(&[4, 6, 2], 1).unwrap();
        for method in [
            MethodKind::FedAvg,
            MethodKind::FedGa,
            MethodKind::FedProx { mu: 0.1 },
        ] {
            let config = RoundConfig {
                lr: 0.0,
                method,
                batch_size: 8,
                ..RoundConfig::default()
            };
            let r = client_update(
                &global,
                &client,
                &config,
                &mut client_rng(0, 1, 0),
                Instrumentation::default(),
            )
            .unwrap();
            assert_eq!(r.model, global);
            assert_eq!(r.n_samples, 40);
        }
    }

    #[test]
    fn zero_rounds_evaluates_initial_model_only() {
        let train = gen_synthetic(&[30, 30, 30], 6, 0.3, 1).unwrap();
        let test = gen_synthetic(&[10, 10, 10], 6, 0.3, 2).unwrap();
        let config = RoundConfig {
            num_clients: 3,
            active_per_round: 2,
            rounds: 0,
            hidden_layers: vec![8],
            ..RoundConfig::default()
        };
        let plan = dirichlet_partition(
            &train,
            &DirichletSpec {
                alpha: 1.0,
                num_clients: 3,
                seed: 0,
            },
        )
        .unwrap();
        let run = run_experiment(&config, &train, &test, &plan, 0).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].round, 0);
        assert_eq!(run.final_predictions.len(), test.len());
    }
}
