//! Correlated-photon ("ghost") imaging simulator.
//!
//! Thin objects sit in the Fourier plane of a 4f system illuminated by
//! downconverted photon pairs or a classically anticorrelated source. The
//! crate computes coincidence images, bucket-bucket correlations and the
//! delay-dependent rate of the aberration-cancelling interferometer, each by
//! closed form and, where useful, by direct quadrature of the amplitudes.

pub mod error;
pub mod fields;
pub mod imaging;
pub mod interferometer;
pub mod io;
pub mod sources;
pub mod validate;

pub use error::{Error, Result};
