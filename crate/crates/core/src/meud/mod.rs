//! The MEUD autoencoder family and the baseline deep autoencoder.
//!
//! Layer `k` receives `X(k) = Y(k-1) · W(k-1)` (no biases) and emits
//! `Y(k)`: identity at the input, sigmoid at the latent layer, ReLU
//! everywhere else. In MEUD networks the bottleneck and latent layers have
//! the same width `r`, and the cooperation variants replace the dense
//! bottleneck-to-latent matrix with a tridiagonal band so each latent node
//! only hears itself and its two neighbours.

mod band;
mod checkpoint;
mod config;
mod net;
mod params;

pub use band::BandWeights;
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{width_schedule, NetworkConfig, Variant};
pub use net::{backward, extract_embedding, forward, reconstruct, ActivationCache};
pub use params::{init_params, Connection, Gradients, ModelParams, INIT_STD};
