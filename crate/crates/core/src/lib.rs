//! Information-rate decomposition for first-order Gauss-Markov Rayleigh
//! fading channels with no channel state at either end.
//!
//! Per block of `N` symbols the channel is `Y = G·X + Z`, with the diagonal
//! gains following `G_i = α·G_{i-1} + √(1-α²)·W_i`. The total information at
//! the receiver splits as
//!
//! ```text
//! I(X;Y) + I(G;X,Y) = h(Y) - h(Z)
//! ```
//!
//! and the channel-information term has the closed form
//! `E_x log₂ det(I + (σ_G²/σ_Z²)·A_N)` with `A_N(i,j) = α^|i-j|·x_i·x̄_j`.
//!
//! Modules:
//!
//! - [`channel_model`]: specifications, samplers and the structured matrices.
//! - [`determinant`]: `det(β·I + A_N)` three independent ways.
//! - [`analytic`]: `E₁`, the perfect-CSI Gaussian rate and the AWGN gap.
//! - [`estimators`]: Monte Carlo estimators with reproducible substreams.
//! - [`experiments`]: the sweep/verification driver behind the CLI.
//!
//! All rates are in bits per symbol.

pub mod analytic;
pub mod channel_model;
pub mod determinant;
mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod streams;

pub use channel_model::{ChannelSpec, ComplexBlock, InputSpec};
pub use error::{Error, Result};
pub use estimators::{Estimate, EstimatorConfig, Quantity};

pub use num_complex::Complex64;
