//! Partition-function-free neural language modelling.
//!
//! This crate trains stacked-LSTM language models with one of two output
//! heads: an exact softmax, or noise contrastive estimation (NCE) over an
//! unnormalised score model. Everything is plain Rust and `f64`: the forward
//! and backward passes are written by hand so that every gradient can be
//! checked against central finite differences, and the NCE estimator can be
//! compared against maximum likelihood on small, exactly solvable instances.
//!
//! Module map:
//!
//! * [`tensor`] — dense row-major matrices, stable reductions, seeded RNG.
//! * [`lstm`] — LSTM cell and two-layer unrolled stack with truncated BPTT.
//! * [`heads`] — softmax and NCE output layers (loss + backward).
//! * [`noise`] — uniform / unigram^alpha / Zipf noise distributions with
//!   O(1) alias sampling.
//! * [`optim`] — SGD, the search-then-converge learning-rate schedule,
//!   global-norm clipping, weight-initialisation heuristics.
//! * [`corpus`] — vocabulary construction, token streams, continuous
//!   mini-batching, word2vec-text embedding loading.
//! * [`model`] — the assembled parameter set (embedding + stack + head).
//! * [`config`] — experiment configuration, presets, and the text config
//!   file format.
//! * [`trainer`] — epoch loop, exact-softmax perplexity evaluation, metrics
//!   CSV, checkpoints.
//! * [`oracle`] — finite-difference gradient checking and the NCE-vs-MLE
//!   consistency experiment.

pub mod config;
pub mod corpus;
pub mod error;
pub mod heads;
pub mod lstm;
pub mod model;
pub mod noise;
pub mod optim;
pub mod oracle;
pub mod tensor;
pub mod trainer;

pub use config::{ExperimentConfig, HeadKind, Preset};
pub use error::{Error, Result};
pub use model::{Gradients, ModelParams, NetworkArch};
pub use tensor::{Matrix, RngStream};
