//! Desk-scale configurations shared by the validation suite and its tests.
//!
//! Object grid: 128 x 128 pixels of 10 um, 810 nm photons, `f = 0.25 m`.
//! Imaging uses a 20 um crystal with no walk-off so that the detuning
//! integrals stay flat across the detector to well below 1e-6; the
//! interferometer uses a 1 mm crystal where walk-off matters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{GridSpec, MaskShape, ObjectMask, Parity, PhaseScreen, ZernikeMode};
use crate::imaging::OpticalGeometry;
use crate::sources::SpdcParams;

pub const N: usize = 128;
pub const PITCH: f64 = 10e-6;
pub const WAVELENGTH: f64 = 810e-9;
pub const FOCAL: f64 = 0.25;
pub const SEED: u64 = 0x5eed_2024;
/// Weights of random screens are drawn from `[-MAX_WEIGHT, MAX_WEIGHT]` radians.
pub const MAX_WEIGHT: f64 = 2.0;
/// Random screens use every mode up to this radial degree.
pub const MAX_DEGREE: u32 = 4;

pub fn wavenumber() -> f64 {
    2.0 * std::f64::consts::PI / WAVELENGTH
}

pub fn grid() -> GridSpec {
    GridSpec::new(N, PITCH).expect("valid desk grid")
}

/// 4f geometry with magnification `m`.
pub fn geometry(m: f64) -> OpticalGeometry {
    OpticalGeometry::new(FOCAL, FOCAL * m, 0.3, 0.3, wavenumber()).expect("valid desk geometry")
}

fn omega0() -> f64 {
    2.0 * std::f64::consts::PI * 299_792_458.0 / WAVELENGTH
}

pub fn imaging_source() -> SpdcParams {
    SpdcParams {
        crystal_length: 20e-6,
        delay_mismatch: 2e-10,
        walkoff: 0.0,
        k_pump: 2.0 * wavenumber(),
        omega0: omega0(),
        bandwidth: 1e13,
        n_nu: 9,
    }
}

/// Interferometer crystal with walk-off `m_walkoff`.
pub fn interferometer_source(m_walkoff: f64) -> SpdcParams {
    SpdcParams { crystal_length: 1e-3, walkoff: m_walkoff, ..imaging_source() }
}

pub const INTERFEROMETER_WALKOFF: f64 = 0.07;

/// `steps` delays over `[-DL/2, 3DL/2]`; index `steps / 2` is `DL/2` for odd `steps`.
pub fn tau_grid(p: &SpdcParams, steps: usize) -> Vec<f64> {
    let dl = p.dip_width();
    crate::interferometer::linspace(-0.5 * dl, 1.5 * dl, steps)
}

pub fn mask(shape: MaskShape) -> ObjectMask {
    ObjectMask::generate(grid(), &shape).expect("desk mask within grid")
}

pub fn disk(radius: f64, center: [f64; 2]) -> ObjectMask {
    mask(MaskShape::Disk { radius, center })
}

pub fn glyph(letter: char, height: f64, center: [f64; 2]) -> ObjectMask {
    mask(MaskShape::Glyph { letter, height, center })
}

pub fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Mixed-parity random screen number `index`.
pub fn random_screen(index: u64) -> PhaseScreen {
    PhaseScreen::random(&mut rng(index), MAX_DEGREE, MAX_WEIGHT)
}

/// Even-only random screen number `index`.
pub fn random_even_screen(index: u64) -> PhaseScreen {
    random_screen(index).filtered(Parity::Even)
}

pub fn coma(weight: f64) -> PhaseScreen {
    PhaseScreen::new(vec![(ZernikeMode::named("coma").expect("coma is a named mode"), weight)])
}

pub fn screened(mask: &ObjectMask, screen: &PhaseScreen) -> Result<ObjectMask> {
    mask.clone().with_screen(screen)
}
