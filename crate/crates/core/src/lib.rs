//! Step graphon-signals and the machinery around them: cut norms and cut
//! distances, a constructive weak regularity decomposition, random sampling
//! into graph-signals, message passing networks with normalized sum
//! aggregation, and calculators for the associated Lipschitz, covering-number,
//! generalization, and subsampling-stability bounds.
//!
//! All objects are plain immutable values; everything is deterministic given
//! the seeds passed in (the RNG is pinned to ChaCha8 with explicit streams).

pub mod bounds;
pub mod cutdist;
pub mod cutnorm;
pub mod error;
pub mod experiments;
pub mod mpnn;
pub mod regularity;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
