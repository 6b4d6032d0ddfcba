//! Files written for each run: per-round CSV, test predictions, JSON
//! summaries and the final model.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fedga::engine::RunArtifacts;
use fedga::metrics::{ForgettingDelta, PrePostRecord};
use fedga::nn::{Matrix, MlpModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MODEL_MAGIC: &[u8; 8] = b"FEDGAMLP";
pub const MODEL_VERSION: u32 = 1;

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    write_file(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `round,accuracy,macro_f1,mean_ea_ratio,acc_class_0,...`; unmeasured
/// values are left empty.
pub fn rounds_csv(run: &RunArtifacts) -> String {
    let classes = run.records.first().map_or(0, |r| r.class_accuracy.len());
    let mut out = String::from("round,accuracy,macro_f1,mean_ea_ratio");
    for k in 0..classes {
        let _ = write!(out, ",acc_class_{k}");
    }
    out.push('\n');
    for r in &run.records {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.round,
            r.accuracy,
            r.macro_f1,
            opt(r.mean_ea_ratio)
        );
        for a in &r.class_accuracy {
            let _ = write!(out, ",{}", opt(*a));
        }
        out.push('\n');
    }
    out
}

pub fn predictions_csv(predictions: &[usize], labels: &[usize]) -> String {
    let mut out = String::from("index,label,prediction\n");
    for (i, (p, y)) in predictions.iter().zip(labels).enumerate() {
        let _ = writeln!(out, "{i},{y},{p}");
    }
    out
}

/// Bucketed forgetting of every instrumented client update.
pub fn pre_post_csv(records: &[PrePostRecord]) -> CliResult<String> {
    let mut out = String::from("round,client_id,missing,rare,majority\n");
    for r in records {
        let f = r.forgetting()?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.round,
            r.client_id,
            opt(f.missing),
            opt(f.rare),
            opt(f.majority)
        );
    }
    Ok(out)
}

/// Little-endian layout: magic, `u32` version, `u32` number of layer dims,
/// the dims as `u64`, then every parameter as `f64` in tensor order
/// (`weights[0], biases[0], ...`, weights row-major).
pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let dims = model.layer_dims();
    let mut out = Vec::with_capacity(16 + 8 * dims.len() + 8 * model.num_parameters());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for (w, b) in model.weights().iter().zip(model.biases()) {
        for v in w.as_slice().iter().chain(b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> CliResult<MlpModel> {
    let bad = |m: &str| CliError::Data(format!("model file: {m}"));
    let mut pos = 0usize;
    let mut take = |n: usize| -> CliResult<&[u8]> {
        let chunk = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(chunk)
    };
    if take(8)? != MODEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != MODEL_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let ndims = u32_at(take(4)?) as usize;
    let mut dims = Vec::with_capacity(ndims.min(64));
    for _ in 0..ndims {
        let d = u64::from_le_bytes(take(8)?.try_into().unwrap());
        dims.push(usize::try_from(d).map_err(|_| bad("dimension overflow"))?);
    }
    let mut read_f64s = |n: usize| -> CliResult<Vec<f64>> {
        let raw = take(n.checked_mul(8).ok_or_else(|| bad("dimension overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in dims.windows(2) {
        let w = read_f64s(pair[0] * pair[1])?;
        weights.push(Matrix::from_vec(pair[0], pair[1], w)?);
        biases.push(read_f64s(pair[1])?);
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(MlpModel::from_parts(dims, weights, biases)?)
}

/// Headline numbers of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub method: String,
    pub seed: u64,
    pub alpha: f64,
    pub rounds: usize,
    pub final_accuracy: f64,
    pub final_macro_f1: f64,
    pub best_accuracy: f64,
    /// Mean client EA ratio over measured rounds in the last third of
    /// training.
    pub late_mean_ea_ratio: Option<f64>,
    /// Mean forgetting per class bucket over instrumented client updates.
    pub forgetting: Option<ForgettingDelta>,
    pub wall_time_secs: f64,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn mean_forgetting(records: &[PrePostRecord]) -> CliResult<Option<ForgettingDelta>> {
    if records.is_empty() {
        return Ok(None);
    }
    let deltas = records
        .iter()
        .map(|r| r.forgetting())
        .collect::<Result<Vec<_>, _>>()?;
    let bucket = |f: fn(&ForgettingDelta) -> Option<f64>| {
        mean(&deltas.iter().filter_map(f).collect::<Vec<_>>())
    };
    Ok(Some(ForgettingDelta {
        missing: bucket(|d| d.missing),
        rare: bucket(|d| d.rare),
        majority: bucket(|d| d.majority),
    }))
}

impl SeedSummary {
    pub fn from_run(
        method: &str,
        seed: u64,
        alpha: f64,
        rounds: usize,
        run: &RunArtifacts,
        wall: f64,
    ) -> CliResult<Self> {
        let last = run.final_record();
        let late: Vec<f64> = run
            .ea_series
            .iter()
            .filter(|(t, _)| 3 * t > 2 * rounds)
            .filter_map(|(_, r)| *r)
            .collect();
        Ok(Self {
            method: method.to_string(),
            seed,
            alpha,
            rounds,
            final_accuracy: last.accuracy,
            final_macro_f1: last.macro_f1,
            best_accuracy: run
                .records
                .iter()
                .map(|r| r.accuracy)
                .fold(f64::NAN, f64::max),
            late_mean_ea_ratio: mean(&late),
            forgetting: mean_forgetting(&run.pre_post)?,
            wall_time_secs: wall,
        })
    }
}

/// Mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl Stat {
    pub fn of(values: Vec<f64>) -> Option<Self> {
        let m = mean(&values)?;
        let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64;
        Some(Self {
            mean: m,
            std: var.sqrt(),
            values,
        })
    }
}

/// Aggregate over the seeds of one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    pub final_accuracy: Stat,
    pub final_macro_f1: Stat,
    pub late_mean_ea_ratio: Option<Stat>,
    pub forgetting: Option<ForgettingDelta>,
    /// Evaluated rounds and the seed-mean test accuracy at each.
    pub rounds: Vec<usize>,
    pub mean_accuracy: Vec<f64>,
}

impl MethodSummary {
    /// `curves` holds the (round, accuracy) series of each seed, all on the
    /// same evaluation schedule.
    pub fn new(
        method: &str,
        seeds: &[SeedSummary],
        curves: &[Vec<(usize, f64)>],
    ) -> CliResult<Self> {
        let first = seeds
            .first()
            .ok_or_else(|| CliError::Data("no seeds to summarize".into()))?;
        let rounds: Vec<usize> = curves[0].iter().map(|c| c.0).collect();
        if curves
            .iter()
            .any(|c| c.iter().map(|p| p.0).ne(rounds.iter().copied()))
        {
            return Err(CliError::Data(
                "seeds were evaluated on different rounds".into(),
            ));
        }
        let mean_accuracy = (0..rounds.len())
            .map(|i| curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64)
            .collect();
        let late: Vec<f64> = seeds.iter().filter_map(|s| s.late_mean_ea_ratio).collect();
        let forgetting: Vec<ForgettingDelta> = seeds.iter().filter_map(|s| s.forgetting).collect();
        let bucket = |f: fn(&ForgettingDelta) -> Option<f64>| {
            mean(&forgetting.iter().filter_map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            method: method.to_string(),
            alpha: first.alpha,
            seeds: seeds.iter().map(|s| s.seed).collect(),
            final_accuracy: Stat::of(seeds.iter().map(|s| s.final_accuracy).collect()).unwrap(),
            final_macro_f1: Stat::of(seeds.iter().map(|s| s.final_macro_f1).collect()).unwrap(),
            late_mean_ea_ratio: Stat::of(late),
            forgetting: (!forgetting.is_empty()).then(|| ForgettingDelta {
                missing: bucket(|d| d.missing),
                rare: bucket(|d| d.rare),
                majority: bucket(|d| d.majority),
            }),
            rounds,
            mean_accuracy,
        })
    }

    /// First evaluated round whose mean accuracy reaches `target`.
    pub fn rounds_to_reach(&self, target: f64) -> Option<usize> {
        fedga::metrics::iterations_to_fraction(&self.mean_accuracy, target).map(|i| self.rounds[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trips_bitwise() {
        let model = MlpModel::init(&[5, 4, 3], 11).unwrap();
        let bytes = encode_model(&model);
        assert_eq!(&bytes[..8], MODEL_MAGIC);
        assert_eq!(decode_model(&bytes).unwrap(), model);
    }

    #[test]
    fn corrupt_models_are_rejected() {
        let bytes = encode_model(&MlpModel::init(&[2, 3], 0).unwrap());
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        let err = decode_model(&magic).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn stat_uses_population_std() {
        let s = Stat::of(vec![1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert!(Stat::of(vec![]).is_none());
    }

    #[test]
    fn forgetting_means_skip_absent_buckets() {
        let rec = |pre: Vec<f64>, counts: Vec<u64>| PrePostRecord {
            round: 10,
            client_id: 0,
            post: vec![0.0; pre.len()],
            pre,
            counts,
        };
        let f = mean_forgetting(&[
            rec(vec![0.5, 0.2], vec![0, 10]),
            rec(vec![0.4, 0.1], vec![5, 5]),
        ])
        .unwrap()
        .unwrap();
        assert_eq!(f.missing, Some(0.5));
        assert_eq!(f.rare, None);
        assert!((f.majority.unwrap() - (0.2 + 0.25) / 2.0).abs() < 1e-15);
        assert_eq!(mean_forgetting(&[]).unwrap(), None);
    }
}
