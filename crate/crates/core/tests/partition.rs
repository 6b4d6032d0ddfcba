use fedga::data::{dirichlet_partition, gen_synthetic, Dataset, DirichletSpec, PartitionPlan};

const ALPHAS: [f64; 5] = [10.0, 1.0, 0.5, 0.1, 0.05];
const CLIENTS: [usize; 3] = [2, 10, 100];

/// Label layout of the MNIST training set; features are irrelevant here.
fn mnist_like() -> Dataset {
    gen_synthetic(
        &[5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949],
        1,
        0.0,
        0,
    )
    .unwrap()
}

fn top_class_shares(ds: &Dataset, plan: &PartitionPlan) -> Vec<f64> {
    (0..plan.num_clients())
        .filter(|&p| !plan.client_indices[p].is_empty())
        .map(|p| {
            let counts = plan.client_counts(ds, p);
            *counts.as_slice().iter().max().unwrap() as f64 / counts.total() as f64
        })
        .collect()
}

#[test]
fn plans_are_disjoint_exhaustive_and_conserve_classes() {
    let ds = mnist_like();
    let totals = ds.class_counts();
    for seed in 0..20 {
        for alpha in ALPHAS {
            for num_clients in CLIENTS {
                let plan = dirichlet_partition(
                    &ds,
                    &DirichletSpec {
                        alpha,
                        num_clients,
                        seed,
                    },
                )
                .unwrap();
                plan.validate(ds.len()).unwrap();
                assert_eq!(plan.num_clients(), num_clients);
                let mut per_class = vec![0u64; 10];
                for p in 0..num_clients {
                    assert!(plan.client_indices[p].windows(2).all(|w| w[0] < w[1]));
                    for (k, n) in plan.client_counts(&ds, p).as_slice().iter().enumerate() {
                        per_class[k] += n;
                    }
                }
                assert_eq!(per_class, totals.as_slice());
                for props in &plan.class_proportions {
                    assert!((props.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn smaller_alpha_concentrates_clients() {
    let ds = mnist_like();
    let mean_share = |alpha: f64| {
        let shares: Vec<f64> = (0..20)
            .flat_map(|seed| {
                let plan = dirichlet_partition(
                    &ds,
                    &DirichletSpec {
                        alpha,
                        num_clients: 100,
                        seed,
                    },
                )
                .unwrap();
                top_class_shares(&ds, &plan)
            })
            .collect();
        shares.iter().sum::<f64>() / shares.len() as f64
    };
    let means: Vec<f64> = ALPHAS.iter().map(|&a| mean_share(a)).collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn extreme_skew_concentrates_most_clients_in_one_class() {
    let ds = mnist_like();
    for seed in 0..20 {
        let plan = dirichlet_partition(
            &ds,
            &DirichletSpec {
                alpha: 0.05,
                num_clients: 100,
                seed,
            },
        )
        .unwrap();
        let shares = top_class_shares(&ds, &plan);
        let concentrated = shares.iter().filter(|&&s| s > 0.7).count();
        assert!(
            2 * concentrated >= shares.len(),
            "seed {seed}: {concentrated}/{}",
            shares.len()
        );
    }
}

#[test]
fn same_seed_same_plan() {
    let ds = mnist_like();
    let spec = DirichletSpec {
        alpha: 0.1,
        num_clients: 10,
        seed: 7,
    };
    assert_eq!(
        dirichlet_partition(&ds, &spec).unwrap(),
        dirichlet_partition(&ds, &spec).unwrap()
    );
    let other = DirichletSpec {
        seed: 8,
        ..spec.clone()
    };
    assert_ne!(
        dirichlet_partition(&ds, &spec).unwrap(),
        dirichlet_partition(&ds, &other).unwrap()
    );
}
