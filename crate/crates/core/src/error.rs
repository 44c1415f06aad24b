use std::io;

use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants map onto distinct failure classes so front ends can
/// translate them into exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration (unknown mode, bad grid size, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside its physical domain, such as a transmittance above one.
    #[error("physics-domain violation: {0}")]
    Domain(String),

    /// A computation would exceed the configured work budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The background rate vanished, so the modulation term has no normalization.
    #[error("modulation undefined: background rate R0 is zero (all-opaque masks?)")]
    UndefinedModulation,

    /// A displacement moved an object's support off the grid.
    #[error("displacement ({0}, {1}) pixels pushes the object support off the grid")]
    OffGrid(isize, isize),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
