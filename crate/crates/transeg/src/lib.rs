//! Transducer and segmental sequence models over a finite time grid.
//!
//! The crate provides two finitely parameterized model families for label
//! sequence posteriors — frame-level transducers (blank-augmented, RNN-T or
//! strictly monotonic topology) and segmental models (explicit boundary
//! latent variables) — together with the exact transformations that rewrite
//! one into the other, brute-force and dynamic-programming oracles for
//! full-sum and Viterbi quantities, and three beam-search decoders
//! (time-synchronous, label-synchronous full-segment, label-synchronous
//! two-stage) with score-threshold and beam-size pruning.
//!
//! All probabilities are carried as [`score::LogScore`] values in the
//! negative natural-log domain.

pub mod audit;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod lm;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod score;
pub mod scorer;
pub mod search;
pub mod topology;
pub mod transform;
pub mod vocab;

pub use error::{Result, TransegError};
pub use score::LogScore;
pub use topology::{Frame, Topology, TopologyKind};
pub use vocab::{LabelId, Vocabulary};
