//! Deterministic federated-learning simulator for studying class imbalance.
//!
//! The crate trains a small dense network across simulated clients with
//! FedAvg, FedProx or FedGA local updates. FedGA replaces the one-hot target
//! by a calibrated label derived from the client's class counts so that the
//! summed logit gradients of every class balance (see [`alignment`]).
//!
//! Modules:
//! - [`nn`]: dense MLP, manual backprop, SGD-momentum and Adam.
//! - [`alignment`]: Type I/II errors, error asymmetry, calibrated labels.
//! - [`data`]: MNIST IDX loading, synthetic blobs, Dirichlet partitions.
//! - [`engine`]: client selection, local updates, aggregation, round loop.
//! - [`metrics`]: confusion matrix, accuracy, macro-F1, forgetting.

pub mod alignment;
pub mod data;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use error::{Error, IdxError, Result};
