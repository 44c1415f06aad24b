use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ComplexField, GridSpec, Pixel};

/// Momentum spectrum `F(q) = f(q)^2` of a beam-steered classical source.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSpectrum {
    field: ComplexField,
    even: bool,
}

/// Named spectrum shapes; `sigma_q` is the rms width of `|F|^2` in 1/m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum SpectrumShape {
    Uniform,
    Gaussian { sigma_q: f64 },
}

const EVEN_TOL: f64 = 1e-12;

impl ClassicalSpectrum {
    /// Wraps a sampled spectrum. With `even` set, `F(-q) = F(q)` is checked.
    pub fn new(field: ComplexField, even: bool) -> Result<Self> {
        if even {
            let scale = field.values().iter().fold(0.0f64, |a, v| a.max(v.norm()));
            let reflected = field.reflect();
            let dev = field
                .values()
                .iter()
                .zip(reflected.values().iter())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            if dev > EVEN_TOL * scale {
                return Err(Error::Domain(format!(
                    "spectrum flagged even but max |F(q) - F(-q)| = {dev:e} exceeds {EVEN_TOL:e} x max|F|"
                )));
            }
        }
        Ok(Self { field, even })
    }

    pub fn from_shape(q_grid: GridSpec, shape: &SpectrumShape) -> Result<Self> {
        match *shape {
            SpectrumShape::Uniform => Self::uniform(q_grid),
            SpectrumShape::Gaussian { sigma_q } => Self::gaussian(q_grid, sigma_q),
        }
    }

    pub fn uniform(q_grid: GridSpec) -> Result<Self> {
        Self::new(ComplexField::constant(q_grid, Complex64::new(1.0, 0.0))?, true)
    }

    /// `F(q) = exp(-|q|^2 / (4 sigma_q^2))`, so `|F|^2` has rms width `sigma_q` per axis.
    pub fn gaussian(q_grid: GridSpec, sigma_q: f64) -> Result<Self> {
        if !(sigma_q.is_finite() && sigma_q > 0.0) {
            return Err(Error::Config(format!("sigma_q must be finite and positive, got {sigma_q}")));
        }
        let field = ComplexField::from_fn(q_grid, |p| {
            let [a, b] = q_grid.position(p);
            Complex64::new((-(a * a + b * b) / (4.0 * sigma_q * sigma_q)).exp(), 0.0)
        })?;
        Self::new(field, true)
    }

    /// Real non-negative spectrum sampled on the momentum grid.
    pub fn from_real(q_grid: GridSpec, values: Array2<f64>, even: bool) -> Result<Self> {
        Self::new(ComplexField::new(q_grid, values.mapv(|v| Complex64::new(v, 0.0)))?, even)
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn q_grid(&self) -> &GridSpec {
        self.field.spec()
    }

    /// Weight `F(q)` of the pair (q in branch 1, -q in branch 2).
    pub fn classical_pair_weight(&self, q: Pixel) -> Complex64 {
        self.field.at(q)
    }

    /// `F` at a physical momentum, nearest sample; zero off the grid.
    pub fn at_momentum(&self, q: [f64; 2]) -> Complex64 {
        self.q_grid().nearest(q).map_or(Complex64::new(0.0, 0.0), |p| self.field.at(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qgrid() -> GridSpec {
        GridSpec::new(32, 500.0).unwrap()
    }

    #[test]
    fn gaussian_peaks_at_origin_and_is_even() {
        let s = ClassicalSpectrum::gaussian(qgrid(), 3000.0).unwrap();
        let c = qgrid().center();
        let peak = s.classical_pair_weight(c);
        for p in qgrid().pixels() {
            assert!(s.classical_pair_weight(p).norm() <= peak.norm());
            assert_eq!(s.classical_pair_weight(p), s.classical_pair_weight(qgrid().reflect(p)));
        }
    }

    #[test]
    fn uneven_spectrum_with_even_flag_is_rejected() {
        let g = qgrid();
        let v = Array2::from_shape_fn((32, 32), |(i, _)| i as f64 / 32.0);
        assert!(matches!(ClassicalSpectrum::from_real(g, v.clone(), true), Err(Error::Domain(_))));
        assert!(ClassicalSpectrum::from_real(g, v, false).is_ok());
    }
}
