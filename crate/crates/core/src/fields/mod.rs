//! Sampling grids, complex fields, object masks and phase screens.

pub mod field;
pub mod grid;
pub mod mask;
pub mod zernike;

pub use field::{decompose_parity, reflect_grid, ComplexField};
pub use grid::{GridSpec, Pixel};
pub use mask::{MaskShape, ObjectMask};
pub use zernike::{render_phase_screen, Parity, PhaseScreen, ZernikeMode};
