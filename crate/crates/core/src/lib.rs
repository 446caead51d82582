//! Multi-encoding uni-decoding (MEUD) autoencoders trained with
//! forward-forward pretraining, lateral cooperation at the bottleneck and
//! backpropagation fine-tuning, plus the evaluation pipeline used to compare
//! them (trustworthiness, KNN and Gaussian naive Bayes downstream
//! classification).
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is on
//! (the default). Every parallel kernel keeps the sequential summation order
//! of its scalar reference, so results are bitwise identical with the feature
//! on or off.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ff;
pub mod meud;
pub mod numerics;
pub mod par;
pub mod train;

pub use error::{Error, Result};
pub use numerics::Matrix;
