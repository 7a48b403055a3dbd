//! Dense feed-forward network, Adam and regression metrics.

mod activation;
mod adam;
mod matrix;
mod metrics;
mod network;

pub use activation::{activate, Activation};
pub use adam::{AdamConfig, AdamState};
pub use matrix::{linear_forward, Matrix};
pub use metrics::{mae, mse};
pub use network::{
    ForwardTrace, LayerParams, LayerTrace, Mode, Network, NetworkParams, NetworkSpec,
    DEFAULT_INIT_SEED, DEFAULT_DROPOUT, DEFAULT_WIDTHS,
};
