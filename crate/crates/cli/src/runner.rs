use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fedga::data::{
    binary_imbalanced_subset, dirichlet_partition, gen_synthetic, load_mnist_dir, BinarySubsetSpec,
    Dataset, DirichletSpec,
};
use fedga::engine::run_experiment_with;
use log::info;

use crate::config::{method_dir_name, DatasetConfig, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{
    encode_model, pre_post_csv, predictions_csv, read_json, rounds_csv, write_file, write_json,
    MethodSummary, SeedSummary,
};

pub const DATA_DIR_ENV: &str = "FEDGA_DATA_DIR";
const DEFAULT_DATA_DIR: &str = "data/mnist";

/// `FEDGA_DATA_DIR` wins over the config, which wins over `data/mnist`.
pub fn resolve_data_dir(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), Path::to_path_buf),
    }
}

fn load_mnist(configured: Option<&Path>) -> CliResult<(Dataset, Dataset)> {
    let dir = resolve_data_dir(configured);
    if !dir.is_dir() {
        return Err(CliError::Data(format!(
            "MNIST directory {} not found (run scripts/fetch_mnist.sh or set {DATA_DIR_ENV})",
            dir.display()
        )));
    }
    Ok(load_mnist_dir(&dir)?)
}

/// Every test sample of the two classes, relabelled positive -> 1,
/// negative -> 0.
fn binary_test_split(test: &Dataset, positive: usize, negative: usize) -> CliResult<Dataset> {
    let mut picked: Vec<(usize, usize)> = test
        .indices_of_class(positive)
        .into_iter()
        .map(|i| (i, 1))
        .chain(test.indices_of_class(negative).into_iter().map(|i| (i, 0)))
        .collect();
    picked.sort_unstable();
    let rows: Vec<usize> = picked.iter().map(|p| p.0).collect();
    Ok(Dataset::new(
        test.features().select_rows(&rows),
        picked.iter().map(|p| p.1).collect(),
        2,
    )?)
}

pub fn load_datasets(config: &DatasetConfig) -> CliResult<(Dataset, Dataset)> {
    match config {
        DatasetConfig::Mnist { data_dir } => load_mnist(data_dir.as_deref()),
        DatasetConfig::Synthetic {
            train_per_class,
            test_per_class,
            dim,
            spread,
            seed,
        } => {
            if train_per_class.len() != test_per_class.len() {
                return Err(CliError::Config(
                    "train and test class counts differ in length".into(),
                ));
            }
            let train = gen_synthetic(train_per_class, *dim, *spread, *seed)?;
            let test = gen_synthetic(test_per_class, *dim, *spread, seed.wrapping_add(1))?;
            Ok((train, test))
        }
        DatasetConfig::BinarySubset {
            data_dir,
            positive_class,
            negative_class,
            n_pos,
            ratio,
            subset_seed,
        } => {
            let (train, test) = load_mnist(data_dir.as_deref())?;
            let spec = BinarySubsetSpec {
                positive_class: *positive_class,
                negative_class: *negative_class,
                n_pos: *n_pos,
                ratio: *ratio,
                seed: *subset_seed,
            };
            let train = binary_imbalanced_subset(&train, &spec)?;
            Ok((
                train,
                binary_test_split(&test, *positive_class, *negative_class)?,
            ))
        }
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Runs every method and seed of `config`, writing results under `out`.
/// Returns the per-method summaries in config order.
pub fn run_all(config: &ExperimentConfig, out: &Path) -> CliResult<Vec<MethodSummary>> {
    config.validate()?;
    let (train, test) = load_datasets(&config.dataset)?;
    info!(
        "loaded {} training and {} test samples ({} classes)",
        train.len(),
        test.len(),
        train.num_classes()
    );
    create_dir(out)?;
    write_json(&out.join("config.json"), config)?;

    let mut summaries = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let method_name = method.to_string();
        let method_dir = out.join(method_dir_name(&method));
        let round_config = config.round_config(method);
        let mut seed_summaries = Vec::with_capacity(config.seeds.len());
        let mut curves = Vec::with_capacity(config.seeds.len());
        for &seed in &config.seeds {
            let plan = dirichlet_partition(
                &train,
                &DirichletSpec {
                    alpha: config.alpha,
                    num_clients: config.num_clients,
                    seed,
                },
            )?;
            let started = Instant::now();
            let run = run_experiment_with(&round_config, &train, &test, &plan, seed, &mut |r| {
                log::debug!(
                    "{method_name} seed {seed} round {}: accuracy {:.4}",
                    r.round,
                    r.accuracy
                );
            })
            .map_err(|e| CliError::Core(e.context(format!("{method_name} seed {seed}"))))?;
            let wall = started.elapsed().as_secs_f64();

            let seed_dir = method_dir.join(format!("seed{seed}"));
            create_dir(&seed_dir)?;
            write_file(&seed_dir.join("rounds.csv"), rounds_csv(&run))?;
            write_file(
                &seed_dir.join("predictions.csv"),
                predictions_csv(&run.final_predictions, test.labels()),
            )?;
            write_file(
                &seed_dir.join("final_model.bin"),
                encode_model(&run.final_model),
            )?;
            if !run.pre_post.is_empty() {
                write_file(&seed_dir.join("pre_post.csv"), pre_post_csv(&run.pre_post)?)?;
            }
            let summary =
                SeedSummary::from_run(&method_name, seed, config.alpha, config.rounds, &run, wall)?;
            write_json(&seed_dir.join("summary.json"), &summary)?;
            info!(
                "{method_name} seed {seed}: final accuracy {:.4}, macro-F1 {:.4} ({wall:.1}s)",
                summary.final_accuracy, summary.final_macro_f1
            );
            curves.push(run.records.iter().map(|r| (r.round, r.accuracy)).collect());
            seed_summaries.push(summary);
        }
        let summary = MethodSummary::new(&method_name, &seed_summaries, &curves)?;
        write_json(&method_dir.join("summary.json"), &summary)?;
        info!(
            "{method_name}: accuracy {:.4} ± {:.4} over {} seeds",
            summary.final_accuracy.mean,
            summary.final_accuracy.std,
            config.seeds.len()
        );
        summaries.push(summary);
    }
    Ok(summaries)
}

/// Accepts a method directory or its `summary.json`.
pub fn load_method_summary(path: &Path) -> CliResult<MethodSummary> {
    if path.is_dir() {
        read_json(&path.join("summary.json"))
    } else {
        read_json(path)
    }
}

/// Side-by-side report of `b` against the baseline `a`.
pub fn compare_report(a: &MethodSummary, b: &MethodSummary) -> String {
    let stat = |s: &crate::output::Stat| format!("{:.4} ± {:.4}", s.mean, s.std);
    let mut lines = vec![
        format!(
            "{:<16} {:>20} {:>20} {:>10}",
            "", a.method, b.method, "margin"
        ),
        format!(
            "{:<16} {:>20} {:>20} {:>+10.4}",
            "final accuracy",
            stat(&a.final_accuracy),
            stat(&b.final_accuracy),
            b.final_accuracy.mean - a.final_accuracy.mean
        ),
        format!(
            "{:<16} {:>20} {:>20} {:>+10.4}",
            "final macro-F1",
            stat(&a.final_macro_f1),
            stat(&b.final_macro_f1),
            b.final_macro_f1.mean - a.final_macro_f1.mean
        ),
    ];
    let best = a.mean_accuracy.iter().copied().fold(f64::NAN, f64::max);
    if best.is_finite() {
        let target = 0.9 * best;
        let fmt = |r: Option<usize>| r.map_or("never".to_string(), |r| r.to_string());
        let (ra, rb) = (a.rounds_to_reach(target), b.rounds_to_reach(target));
        let speedup = match (ra, rb) {
            (Some(ra), Some(rb)) if rb > 0 => format!("{:.2}x", ra as f64 / rb as f64),
            _ => "n/a".to_string(),
        };
        lines.push(format!(
            "{:<16} {:>20} {:>20} {:>10}",
            format!("rounds to {target:.4}"),
            fmt(ra),
            fmt(rb),
            speedup
        ));
    }
    lines.join("\n")
}
