//! Dense row-major matrices, products, activations and seeded sampling.

mod activation;
mod gemm;
mod matrix;
mod random;

pub use activation::{activate, sigmoid, Activation};
pub use gemm::{matmul, matmul_nt, matmul_tn, matmul_tn_with, matmul_with};
pub use matrix::Matrix;
pub(crate) use random::fill_normal;
pub use random::{derive_seed, randn_matrix, seeded_rng, Rng};
