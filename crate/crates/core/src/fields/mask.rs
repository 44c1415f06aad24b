use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{check_shape, decompose_parity, ComplexField};
use super::grid::GridSpec;
use super::zernike::{render_phase_screen, PhaseScreen};
use crate::error::{Error, Result};

/// Thin-object modulation `G(x) = t(x) exp(i phi(x))`.
///
/// Amplitude and phase are stored separately; `0 <= t <= 1` is enforced at
/// construction and never clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMask {
    spec: GridSpec,
    amplitude: Array2<f64>,
    phase: Array2<f64>,
}

/// Named mask generators. Lengths are physical (meters) in the object plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum MaskShape {
    /// Fully transparent, `G = 1`.
    Unit,
    /// Fully opaque, `G = 0`.
    Opaque,
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Transparent strip of the given width across `e1`, running along `e2`.
    Slit {
        width: f64,
        #[serde(default)]
        length: Option<f64>,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Single transparent pixel nearest to `center`.
    Pinhole {
        #[serde(default)]
        center: [f64; 2],
    },
    /// Built-in 5x7 bitmap letter; `height` is the physical glyph height.
    Glyph {
        letter: char,
        height: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl ObjectMask {
    pub fn new(spec: GridSpec, amplitude: Array2<f64>, phase: Array2<f64>) -> Result<Self> {
        check_shape(&spec, amplitude.dim())?;
        check_shape(&spec, phase.dim())?;
        if let Some(((i, j), t)) = amplitude.indexed_iter().find(|(_, t)| !(t.is_finite() && (0.0..=1.0).contains(*t))) {
            return Err(Error::Domain(format!("transmittance t = {t} at ({i}, {j}) is outside [0, 1]")));
        }
        if let Some(((i, j), p)) = phase.indexed_iter().find(|(_, p)| !p.is_finite()) {
            return Err(Error::Domain(format!("non-finite phase {p} at ({i}, {j})")));
        }
        Ok(Self { spec, amplitude, phase })
    }

    pub fn from_amplitude(spec: GridSpec, amplitude: Array2<f64>) -> Result<Self> {
        let n = spec.n();
        Self::new(spec, amplitude, Array2::zeros((n, n)))
    }

    pub fn unit(spec: GridSpec) -> Self {
        let n = spec.n();
        Self { spec, amplitude: Array2::ones((n, n)), phase: Array2::zeros((n, n)) }
    }

    pub fn generate(spec: GridSpec, shape: &MaskShape) -> Result<Self> {
        let n = spec.n();
        let amplitude = match *shape {
            MaskShape::Unit => Array2::ones((n, n)),
            MaskShape::Opaque => Array2::zeros((n, n)),
            MaskShape::Disk { radius, center } => {
                positive("disk radius", radius)?;
                Array2::from_shape_fn((n, n), |(i, j)| {
                    let dx = spec.coord(i) - center[0];
                    let dy = spec.coord(j) - center[1];
                    indicator(dx * dx + dy * dy <= radius * radius)
                })
            }
            MaskShape::Slit { width, length, center } => {
                positive("slit width", width)?;
                let half_len = match length {
                    Some(l) => {
                        positive("slit length", l)?;
                        0.5 * l
                    }
                    None => f64::INFINITY,
                };
                Array2::from_shape_fn((n, n), |(i, j)| {
                    let dx = (spec.coord(i) - center[0]).abs();
                    let dy = (spec.coord(j) - center[1]).abs();
                    indicator(dx <= 0.5 * width && dy <= half_len)
                })
            }
            MaskShape::Pinhole { center } => {
                let p = spec
                    .nearest(center)
                    .ok_or_else(|| Error::Config(format!("pinhole center {center:?} is outside the grid")))?;
                let mut a = Array2::zeros((n, n));
                a[[p.i, p.j]] = 1.0;
                a
            }
            MaskShape::Glyph { letter, height, center } => {
                positive("glyph height", height)?;
                glyph_amplitude(&spec, letter, height, center)?
            }
        };
        Self::from_amplitude(spec, amplitude)
    }

    /// Replaces the phase with a rendered screen.
    pub fn with_screen(self, screen: &PhaseScreen) -> Result<Self> {
        let phase = render_phase_screen(screen, &self.spec)?;
        self.with_phase(phase)
    }

    pub fn with_phase(self, phase: Array2<f64>) -> Result<Self> {
        Self::new(self.spec, self.amplitude, phase)
    }

    /// Same amplitude, zero phase.
    pub fn phase_free(&self) -> Self {
        let n = self.spec.n();
        Self { spec: self.spec, amplitude: self.amplitude.clone(), phase: Array2::zeros((n, n)) }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn amplitude(&self) -> &Array2<f64> {
        &self.amplitude
    }

    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    /// `|G|^2 = t^2`, independent of the phase.
    pub fn intensity(&self) -> Array2<f64> {
        self.amplitude.mapv(|t| t * t)
    }

    pub fn as_complex(&self) -> ComplexField {
        let n = self.spec.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| Complex64::from_polar(self.amplitude[[i, j]], self.phase[[i, j]]));
        ComplexField::new(self.spec, values).expect("finite amplitude and phase give a finite field")
    }

    /// Even and odd parts of the phase.
    pub fn phase_parity(&self) -> (Array2<f64>, Array2<f64>) {
        decompose_parity(&self.phase)
    }

    pub fn is_opaque(&self) -> bool {
        self.amplitude.iter().all(|&t| t == 0.0)
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be finite and positive, got {v}")))
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

// 5 columns x 7 rows; bit 4 of each row is the leftmost column.
const GLYPHS: &[(char, [u8; 7])] = &[
    ('E', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111]),
    ('F', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('G', [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111]),
    ('J', [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100]),
    ('L', [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111]),
    ('P', [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('R', [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001]),
];

pub fn available_glyphs() -> impl Iterator<Item = char> {
    GLYPHS.iter().map(|(c, _)| *c)
}

/// Glyph rows run along `-e2` (top of the letter at positive `e2`), columns along `e1`.
fn glyph_amplitude(spec: &GridSpec, letter: char, height: f64, center: [f64; 2]) -> Result<Array2<f64>> {
    let upper = letter.to_ascii_uppercase();
    let rows = GLYPHS
        .iter()
        .find(|(c, _)| *c == upper)
        .map(|(_, r)| r)
        .ok_or_else(|| Error::Config(format!("no built-in glyph for '{letter}'")))?;
    let cell = height / 7.0;
    let width = 5.0 * cell;
    let n = spec.n();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        let u = (spec.coord(i) - center[0] + 0.5 * width) / cell;
        let v = (0.5 * height - (spec.coord(j) - center[1])) / cell;
        if !(0.0..5.0).contains(&u) || !(0.0..7.0).contains(&v) {
            return 0.0;
        }
        let col = u.floor() as usize;
        let row = v.floor() as usize;
        indicator(rows[row] >> (4 - col) & 1 == 1)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::zernike::ZernikeMode;

    fn spec() -> GridSpec {
        GridSpec::new(64, 1e-5).unwrap()
    }

    #[test]
    fn transmittance_out_of_range_is_rejected() {
        let g = spec();
        let mut t = Array2::ones((64, 64));
        t[[1, 2]] = 1.0 + 1e-9;
        assert!(matches!(ObjectMask::from_amplitude(g, t.clone()), Err(Error::Domain(_))));
        t[[1, 2]] = -0.1;
        assert!(matches!(ObjectMask::from_amplitude(g, t), Err(Error::Domain(_))));
    }

    #[test]
    fn as_complex_reproduces_amplitude_and_phase() {
        let g = spec();
        let screen = PhaseScreen::new(vec![(ZernikeMode::named("coma").unwrap(), 1.3), (ZernikeMode::named("defocus").unwrap(), -0.4)]);
        let m = ObjectMask::generate(g, &MaskShape::Disk { radius: 2e-4, center: [0.0, 0.0] })
            .unwrap()
            .with_screen(&screen)
            .unwrap();
        let c = m.as_complex();
        for p in g.pixels() {
            let t = m.amplitude()[[p.i, p.j]];
            if t > 0.0 {
                let v = c.at(p);
                assert!((v.norm() - t).abs() <= 1e-15);
                assert!((v.arg() - m.phase()[[p.i, p.j]]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn disk_area_tracks_radius() {
        let g = spec();
        let m = ObjectMask::generate(g, &MaskShape::Disk { radius: 20e-5, center: [0.0, 0.0] }).unwrap();
        let area = m.amplitude().sum() * g.pixel_area();
        let exact = std::f64::consts::PI * 20e-5f64.powi(2);
        assert!((area - exact).abs() / exact < 0.03);
    }

    #[test]
    fn pinhole_is_one_pixel() {
        let m = ObjectMask::generate(spec(), &MaskShape::Pinhole { center: [0.0, 0.0] }).unwrap();
        assert_eq!(m.amplitude().sum(), 1.0);
        assert_eq!(m.amplitude()[[32, 32]], 1.0);
    }

    #[test]
    fn glyph_f_is_not_point_symmetric() {
        let g = spec();
        let m = ObjectMask::generate(g, &MaskShape::Glyph { letter: 'F', height: 35e-5, center: [0.0, 0.0] }).unwrap();
        let lit = m.amplitude().sum();
        assert!(lit > 20.0);
        let r = crate::fields::field::reflect_grid(m.amplitude());
        assert_ne!(&r, m.amplitude());
        assert!(ObjectMask::generate(g, &MaskShape::Glyph { letter: '?', height: 1e-4, center: [0.0, 0.0] }).is_err());
    }
}
