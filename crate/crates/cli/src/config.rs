use std::path::{Path, PathBuf};

use fedga::alignment::GaGradient;
use fedga::engine::{MethodKind, RoundConfig};
use fedga::nn::OptimizerKind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

pub const DEFAULT_PROX_MU: f64 = 0.001;

/// Where the train/test data come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// MNIST IDX files (raw or gzipped) in `data_dir`.
    Mnist {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_dir: Option<PathBuf>,
    },
    /// Gaussian blobs; useful for smoke runs without downloads.
    Synthetic {
        train_per_class: Vec<usize>,
        test_per_class: Vec<usize>,
        dim: usize,
        spread: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Two MNIST classes with a fixed imbalance in the training split. The
    /// test split keeps every sample of both classes.
    BinarySubset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_dir: Option<PathBuf>,
        positive_class: usize,
        negative_class: usize,
        n_pos: usize,
        ratio: f64,
        #[serde(default)]
        subset_seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

/// Parses `fedavg`, `fedga`, `fedprox` or `fedprox:<mu>`.
pub fn parse_method(s: &str) -> Result<MethodKind, String> {
    let s = s.trim();
    match s.split_once(':') {
        None => match s {
            "fedavg" => Ok(MethodKind::FedAvg),
            "fedga" => Ok(MethodKind::FedGa),
            "fedprox" => Ok(MethodKind::FedProx {
                mu: DEFAULT_PROX_MU,
            }),
            other => Err(format!(
                "unknown method {other:?} (expected fedavg, fedga or fedprox[:mu])"
            )),
        },
        Some(("fedprox", mu)) => mu
            .parse::<f64>()
            .map(|mu| MethodKind::FedProx { mu })
            .map_err(|e| format!("bad FedProx mu {mu:?}: {e}")),
        Some(_) => Err(format!(
            "unknown method {s:?} (only fedprox takes a parameter)"
        )),
    }
}

/// Parses `a..b` (inclusive), a comma list, or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|e| format!("bad seed range {s:?}: {e}"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|e| format!("bad seed range {s:?}: {e}"))?;
        if a > b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|e| format!("bad seed {v:?}: {e}")))
        .collect()
}

fn de_methods<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<MethodKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    let names = match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    };
    names
        .iter()
        .map(|s| parse_method(s).map_err(serde::de::Error::custom))
        .collect()
}

fn ser_methods<S: Serializer>(methods: &[MethodKind], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(methods.iter().map(|m| m.to_string()))
}

fn default_num_clients() -> usize {
    100
}
fn default_active() -> usize {
    10
}
fn default_rounds() -> usize {
    100
}
fn default_epochs() -> usize {
    2
}
fn default_batch() -> usize {
    64
}
fn default_lr() -> f64 {
    0.1
}
fn default_optimizer() -> OptimizerName {
    OptimizerName::Sgd
}
fn default_momentum() -> f64 {
    0.9
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_seeds() -> Vec<u64> {
    (0..=4).collect()
}
fn default_eval_every() -> usize {
    1
}
fn default_ea_every() -> usize {
    10
}
fn default_hidden() -> Vec<usize> {
    vec![128]
}

/// One experiment: a dataset, a partition, and the methods and seeds to run
/// on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    /// Dirichlet concentration of the client partition.
    pub alpha: f64,
    #[serde(
        rename = "method",
        deserialize_with = "de_methods",
        serialize_with = "ser_methods"
    )]
    pub methods: Vec<MethodKind>,
    #[serde(default = "default_num_clients")]
    pub num_clients: usize,
    #[serde(default = "default_active")]
    pub active_per_round: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerName,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_ea_every")]
    pub ea_every: usize,
    #[serde(default)]
    pub instrument_pre_post: bool,
    #[serde(default = "default_hidden")]
    pub hidden_layers: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga_ratio_cap: Option<f64>,
    #[serde(default)]
    pub ga_gradient: GaGradient,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config = Self::from_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self.optimizer {
            OptimizerName::Sgd => OptimizerKind::sgd(self.momentum),
            OptimizerName::Adam => OptimizerKind::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
        }
    }

    /// Engine settings for one method of this experiment.
    pub fn round_config(&self, method: MethodKind) -> RoundConfig {
        RoundConfig {
            num_clients: self.num_clients,
            active_per_round: self.active_per_round,
            local_epochs: self.local_epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            optimizer: self.optimizer_kind(),
            method,
            rounds: self.rounds,
            eval_every: self.eval_every,
            ea_every: self.ea_every,
            instrument_pre_post: self.instrument_pre_post,
            hidden_layers: self.hidden_layers.clone(),
            ga_ratio_cap: self.ga_ratio_cap,
            ga_gradient: self.ga_gradient,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CliError::Config(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("no methods to run".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("no seeds to run".into()));
        }
        let mut names: Vec<String> = self.methods.iter().map(|m| m.to_string()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("a method is listed twice".into()));
        }
        for &m in &self.methods {
            self.round_config(m).validate()?;
        }
        Ok(())
    }
}

/// Output directory name of a method, e.g. `fedprox_0.001`.
pub fn method_dir_name(method: &MethodKind) -> String {
    method.to_string().replace(':', "_")
}
