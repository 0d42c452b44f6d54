//! Reference computations for the `gmfade` test suites.
//!
//! Everything here is deliberately computed along a different route from the
//! library: adaptive Gauss-Kronrod quadrature instead of series and continued
//! fractions, pivoted elimination instead of Cholesky. Nothing in this crate
//! is fast and none of it is meant for production use.

pub mod integrals;
pub mod quad;

pub use integrals::{
    complex_determinant, e1_by_quadrature, entropy_y_coherent_gaussian, entropy_y_scalar_discrete,
    entropy_y_scalar_gaussian,
    rayleigh_rate_by_quadrature,
};
pub use quad::{integrate, integrate_to_infinity, Tolerance};
