//! Cross-lingual tweet sentiment classification.
//!
//! Independently trained monolingual embedding spaces are aligned with a
//! least-squares translation matrix, and a single classifier (LSTM or CNN)
//! whose parameters are shared by every language is trained over the
//! aligned space. Unigram/bigram Naive Bayes and linear SVM baselines and a
//! k-fold cross-validation driver complete the toolkit.

// `!(x > 0.0)` also rejects NaN; index loops mirror the equations
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod align;
pub mod baselines;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
