//! Fractionally trained, RSVD-compressed denoising autoencoder operating on
//! orthonormal Tchebichef moment features of 1-D signals.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the bottom of this file pin the double-precision types the pipeline and
//! CLI use.

pub mod autoencoder;
pub mod error;
pub mod fractional;
pub mod linalg;
pub mod pipeline;
pub mod rsvd;
pub mod scalar;
pub mod seeds;
pub mod signal;
pub mod tchebichef;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use autoencoder::{
    cost, forward, fractional_backward, init_params, sgd_step, train, ForwardCache, Gradients,
    LayerSpec, NetworkParams, TrainingConfig,
};
pub use fractional::{
    caputo_reg_term, caputo_weight_factor, gamma_fn, CaputoKernel, FractionalOrder,
};
pub use linalg::{Matrix, Vector};
pub use rsvd::{
    check_optimized_rank, compress_at_ratio, compress_opt, energy_fraction, rsvd, SvdTriple,
};
pub use signal::{MetricReport, NormState, Normalizer, Signal};
pub use tchebichef::{MomentVector, TchebichefBasis};

/// Double-precision Tchebichef basis.
pub type Basis = TchebichefBasis<f64>;
/// Single-precision Tchebichef basis.
pub type Basis32 = TchebichefBasis<f32>;
/// Double-precision network parameters (the checkpoint format stores f64).
pub type Params = NetworkParams<f64>;
pub type Params32 = NetworkParams<f32>;
pub type Svd = SvdTriple<f64>;
pub type Svd32 = SvdTriple<f32>;
pub type Mat = Matrix<f64>;
pub type Mat32 = Matrix<f32>;
pub type SignalF64 = Signal<f64>;
