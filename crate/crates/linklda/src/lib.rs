//! Topic-model inference for document collections with optional link structure.
//!
//! The crate implements collapsed Gibbs sampling for two models:
//!
//! * plain latent Dirichlet allocation, and
//! * a link-aware variant in which every token of a document may be credited
//!   to the document itself or to one of its out-neighbors, yielding per-edge
//!   influence weights alongside the usual topic distributions.
//!
//! Four sampling strategies beyond the baseline per-token sweep are provided
//! (`aggregated`, `limit`, `sparse`, and `agg-sparse`); they trade exactness
//! of the per-token update for large constant-factor speedups while leaving
//! the stationary behaviour of the estimates essentially unchanged.
//!
//! Supporting functionality: held-out likelihood scoring with frozen training
//! state, influence-weight extraction, stacked graphical learning on top of
//! document features, text checkpoints with bit-identical resume, and
//! synthetic corpus generators used by the test and benchmark harnesses.

pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod estimate;
pub mod mat;
pub mod model;
pub mod sampler;
pub mod stacking;
pub mod synth;

pub use error::{Error, Result};
