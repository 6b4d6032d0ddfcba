use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::Dataset;
use crate::alignment::ClassCounts;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};

/// Label-skew partition parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSpec {
    /// Concentration; smaller values give more skewed clients.
    pub alpha: f64,
    pub num_clients: usize,
    pub seed: u64,
}

/// Assignment of dataset rows to clients.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPlan {
    /// Row indices held by each client, ascending.
    pub client_indices: Vec<Vec<usize>>,
    /// `class_proportions[k][p]`: Dirichlet share of class `k` drawn for
    /// client `p`.
    pub class_proportions: Vec<Vec<f64>>,
}

impl PartitionPlan {
    pub fn num_clients(&self) -> usize {
        self.client_indices.len()
    }

    /// Clients that received no rows.
    pub fn empty_clients(&self) -> Vec<usize> {
        self.client_indices
            .iter()
            .enumerate()
            .filter(|(_, idx)| idx.is_empty())
            .map(|(p, _)| p)
            .collect()
    }

    pub fn non_empty_clients(&self) -> Vec<usize> {
        self.client_indices
            .iter()
            .enumerate()
            .filter(|(_, idx)| !idx.is_empty())
            .map(|(p, _)| p)
            .collect()
    }

    pub fn client_counts(&self, dataset: &Dataset, client: usize) -> ClassCounts {
        let labels: Vec<usize> = self.client_indices[client]
            .iter()
            .map(|&i| dataset.labels()[i])
            .collect();
        ClassCounts::from_labels(&labels, dataset.num_classes()).expect("labels validated")
    }

    /// Checks that client lists are disjoint and together cover `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (p, idx) in self.client_indices.iter().enumerate() {
            for &i in idx {
                match seen.get_mut(i) {
                    None => {
                        return Err(Error::Data(format!(
                            "client {p} holds row {i} outside 0..{n}"
                        )))
                    }
                    Some(true) => {
                        return Err(Error::Data(format!("row {i} assigned twice (client {p})")))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Data(format!(
                "row {i} is not assigned to any client"
            ))),
            None => Ok(()),
        }
    }
}

/// One draw from `Dir_P(alpha)` via normalised `Gamma(alpha, 1)` variates.
///
/// If every variate underflows to zero the whole mass goes to one uniformly
/// chosen client.
pub fn dirichlet_proportions<R: Rng + ?Sized>(
    rng: &mut R,
    alpha: f64,
    num_clients: usize,
) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let draws: Vec<f64> = (0..num_clients).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        draws.into_iter().map(|g| g / sum).collect()
    } else {
        let mut out = vec![0.0; num_clients];
        out[rng.random_range(0..num_clients)] = 1.0;
        out
    }
}

/// Integer apportionment of `total` by `proportions`: floors first, then one
/// extra unit to the largest fractional remainders (ties to the lower index).
pub fn largest_remainder(proportions: &[f64], total: usize) -> Vec<usize> {
    let exact: Vec<f64> = proportions.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut left = total.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Splits each class independently across clients with a fresh
/// `Dir_P(alpha)` draw, rounding shares by largest remainder.
pub fn dirichlet_partition(dataset: &Dataset, spec: &DirichletSpec) -> Result<PartitionPlan> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(Error::Config(format!(
            "alpha must be positive, got {}",
            spec.alpha
        )));
    }
    if spec.num_clients == 0 {
        return Err(Error::Config("at least one client is required".into()));
    }
    let mut rng = derive_rng(spec.seed, &[stream::PARTITION]);
    let mut client_indices = vec![Vec::new(); spec.num_clients];
    let mut class_proportions = Vec::with_capacity(dataset.num_classes());
    for class in 0..dataset.num_classes() {
        let mut rows = dataset.indices_of_class(class);
        rows.shuffle(&mut rng);
        let props = dirichlet_proportions(&mut rng, spec.alpha, spec.num_clients);
        let shares = largest_remainder(&props, rows.len());
        let mut start = 0;
        for (client, &n) in shares.iter().enumerate() {
            client_indices[client].extend_from_slice(&rows[start..start + n]);
            start += n;
        }
        class_proportions.push(props);
    }
    for idx in &mut client_indices {
        idx.sort_unstable();
    }
    Ok(PartitionPlan {
        client_indices,
        class_proportions,
    })
}
