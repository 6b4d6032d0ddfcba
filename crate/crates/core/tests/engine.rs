use fedga::alignment::ce_output_deltas;
use fedga::data::{dirichlet_partition, gen_synthetic, Dataset, DirichletSpec, PartitionPlan};
use fedga::engine::{
    client_rng, run_experiment, run_experiment_with, select_clients, selection_rng, MethodKind,
    RoundConfig,
};
use fedga::nn::{softmax, MlpModel, OptimizerKind, OptimizerState};
use fedga::rng::{derive_seed, stream};
use fedga::Error;
use rand::seq::SliceRandom;

fn small_config(method: MethodKind, num_clients: usize, active: usize) -> RoundConfig {
    RoundConfig {
        num_clients,
        active_per_round: active,
        local_epochs: 2,
        batch_size: 8,
        lr: 0.05,
        method,
        rounds: 4,
        ea_every: 2,
        hidden_layers: vec![12],
        ..RoundConfig::default()
    }
}

fn blobs(per_class: usize, seed: u64) -> Dataset {
    gen_synthetic(&[per_class; 3], 6, 0.35, seed).unwrap()
}

/// Each of `num_clients` clients receives the same number of rows of every
/// class (rows are class-major in `blobs`).
fn balanced_plan(per_class: usize, num_clients: usize) -> PartitionPlan {
    let share = per_class / num_clients;
    let client_indices = (0..num_clients)
        .map(|p| {
            (0..3)
                .flat_map(|k| (k * per_class + p * share)..(k * per_class + (p + 1) * share))
                .collect()
        })
        .collect();
    PartitionPlan {
        client_indices,
        class_proportions: vec![vec![1.0 / num_clients as f64; num_clients]; 3],
    }
}

#[test]
fn selection_is_uniform() {
    let eligible: Vec<usize> = (0..20).collect();
    let rounds = 4000;
    let mut hits = [0usize; 20];
    for t in 1..=rounds {
        for id in select_clients(&eligible, 5, &mut selection_rng(9, t)).unwrap() {
            hits[id] += 1;
        }
    }
    let expected = (rounds * 5) as f64 / 20.0;
    let chi2: f64 = hits
        .iter()
        .map(|&h| (h as f64 - expected).powi(2) / expected)
        .sum();
    // 19 degrees of freedom, p = 0.001
    assert!(chi2 < 43.82, "chi2 = {chi2}");
}

#[test]
fn fedga_equals_fedavg_on_balanced_clients() {
    let train = blobs(40, 1);
    let test = blobs(10, 2);
    let plan = balanced_plan(40, 4);
    let avg = run_experiment(
        &small_config(MethodKind::FedAvg, 4, 2),
        &train,
        &test,
        &plan,
        3,
    )
    .unwrap();
    let ga = run_experiment(
        &small_config(MethodKind::FedGa, 4, 2),
        &train,
        &test,
        &plan,
        3,
    )
    .unwrap();
    assert_eq!(avg.final_model, ga.final_model);
    assert!(avg
        .records
        .iter()
        .zip(&ga.records)
        .all(|(a, b)| a.same_metrics(b)));
}

#[test]
fn fedprox_without_penalty_equals_fedavg() {
    let train = blobs(40, 1);
    let test = blobs(10, 2);
    let plan = dirichlet_partition(
        &train,
        &DirichletSpec {
            alpha: 0.3,
            num_clients: 5,
            seed: 4,
        },
    )
    .unwrap();
    let avg = run_experiment(
        &small_config(MethodKind::FedAvg, 5, 3),
        &train,
        &test,
        &plan,
        0,
    )
    .unwrap();
    let prox = run_experiment(
        &small_config(MethodKind::FedProx { mu: 0.0 }, 5, 3),
        &train,
        &test,
        &plan,
        0,
    )
    .unwrap();
    assert_eq!(avg.final_model, prox.final_model);

    let pulled = run_experiment(
        &small_config(MethodKind::FedProx { mu: 0.5 }, 5, 3),
        &train,
        &test,
        &plan,
        0,
    )
    .unwrap();
    assert_ne!(avg.final_model, pulled.final_model);
}

#[test]
fn single_client_fedavg_is_centralized_sgd() {
    let train = blobs(30, 5);
    let test = blobs(10, 6);
    let plan = PartitionPlan {
        client_indices: vec![(0..train.len()).collect()],
        class_proportions: vec![vec![1.0]; 3],
    };
    let config = small_config(MethodKind::FedAvg, 1, 1);
    let seed = 12;
    let run = run_experiment(&config, &train, &test, &plan, seed).unwrap();

    let dims = [6, 12, 3];
    let mut model = MlpModel::init(&dims, derive_seed(seed, &[stream::MODEL_INIT])).unwrap();
    for round in 1..=config.rounds {
        // a fresh optimizer per round, as each client update starts one
        let mut opt = OptimizerState::new(config.optimizer, config.lr, &model);
        let mut rng = client_rng(seed, round, 0);
        let mut order: Vec<usize> = (0..train.len()).collect();
        for _ in 0..config.local_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                let x = train.features().select_rows(batch);
                let y: Vec<usize> = batch.iter().map(|&i| train.labels()[i]).collect();
                let (logits, trace) = model.forward(&x).unwrap();
                let delta = ce_output_deltas(&softmax(&logits), &y).unwrap();
                let grads = model.backward(&trace, &delta).unwrap();
                opt.step(&mut model, &grads).unwrap();
            }
        }
    }
    assert_eq!(run.final_model, model);
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let train = blobs(50, 7);
    let test = blobs(10, 8);
    let plan = dirichlet_partition(
        &train,
        &DirichletSpec {
            alpha: 0.5,
            num_clients: 6,
            seed: 1,
        },
    )
    .unwrap();
    let config = RoundConfig {
        instrument_pre_post: true,
        ..small_config(MethodKind::FedGa, 6, 3)
    };
    let run_in = |threads: usize, seed: u64| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&config, &train, &test, &plan, seed).unwrap())
    };
    let a = run_in(1, 3);
    let b = run_in(4, 3);
    assert_eq!(a.final_model, b.final_model);
    assert_eq!(a.final_predictions, b.final_predictions);
    assert_eq!(a.ea_series, b.ea_series);
    assert_eq!(a.pre_post, b.pre_post);
    assert!(a
        .records
        .iter()
        .zip(&b.records)
        .all(|(x, y)| x.same_metrics(y)));

    let c = run_in(1, 4);
    assert_ne!(a.final_model, c.final_model);
}

#[test]
fn records_follow_the_evaluation_schedule() {
    let train = blobs(40, 1);
    let test = blobs(10, 2);
    let plan = dirichlet_partition(
        &train,
        &DirichletSpec {
            alpha: 1.0,
            num_clients: 4,
            seed: 0,
        },
    )
    .unwrap();
    let config = RoundConfig {
        rounds: 7,
        eval_every: 3,
        ea_every: 2,
        instrument_pre_post: true,
        ..small_config(MethodKind::FedGa, 4, 2)
    };
    let mut streamed = Vec::new();
    let run = run_experiment_with(&config, &train, &test, &plan, 0, &mut |r| {
        streamed.push(r.round)
    })
    .unwrap();
    assert_eq!(streamed, vec![0, 3, 6, 7]);
    assert_eq!(
        run.ea_series.iter().map(|e| e.0).collect::<Vec<_>>(),
        vec![2, 4, 6]
    );
    // 3 instrumented rounds x 2 active clients
    assert_eq!(run.pre_post.len(), 6);
    assert!(run.records.iter().all(|r| r.class_accuracy.len() == 3));
    assert_eq!(run.records[2].mean_ea_ratio, run.ea_series[2].1);
}

#[test]
fn too_few_nonempty_clients_is_a_config_error() {
    let train = blobs(10, 1);
    let test = blobs(5, 2);
    let plan = PartitionPlan {
        client_indices: vec![(0..train.len()).collect(), vec![], vec![]],
        class_proportions: vec![vec![1.0, 0.0, 0.0]; 3],
    };
    let err = run_experiment(
        &small_config(MethodKind::FedAvg, 3, 2),
        &train,
        &test,
        &plan,
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn adam_runs_are_finite() {
    let train = blobs(40, 3);
    let test = blobs(10, 4);
    let plan = dirichlet_partition(
        &train,
        &DirichletSpec {
            alpha: 0.5,
            num_clients: 4,
            seed: 2,
        },
    )
    .unwrap();
    let config = RoundConfig {
        optimizer: OptimizerKind::adam(),
        lr: 0.01,
        ..small_config(MethodKind::FedGa, 4, 2)
    };
    let run = run_experiment(&config, &train, &test, &plan, 0).unwrap();
    assert!(run.records.iter().all(|r| r.accuracy.is_finite()));
}
