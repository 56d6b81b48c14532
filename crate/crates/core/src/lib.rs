//! Polarity of a target phrase within its sentence, predicted by two LSTMs
//! that attend to each other (IAN).
//!
//! Everything here is written against a tiny dense-array substrate
//! ([`numerics`]) with explicit forward traces and hand-derived backward
//! passes, so every gradient can be checked against central differences
//! ([`gradcheck`]).
//!
//! The pipeline for one instance is: embedding lookup, one LSTM over the
//! context and one over the target, average pooling of both, interactive
//! attention (context attended by the target average and vice versa),
//! concatenation, a `tanh` projection and a softmax over the three
//! polarity classes. Baselines and ablations share the same blocks and are
//! selected with [`model::ModelVariant`].

pub mod attention;
pub mod checkpoint;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod lstm;
pub mod model;
pub mod numerics;
pub mod training;
pub mod viz;

pub use error::{Error, Result};

/// Number of polarity classes (positive, neutral, negative).
pub const NUM_CLASSES: usize = 3;
