use ndarray::Array2;
use num_complex::Complex64;

use super::grid::{GridSpec, Pixel};
use crate::error::{Error, Result};

/// Sampled complex amplitude on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Array2<Complex64>,
}

impl ComplexField {
    pub fn new(spec: GridSpec, values: Array2<Complex64>) -> Result<Self> {
        check_shape(&spec, values.dim())?;
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite field value {v} at ({i}, {j})")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Pixel) -> Complex64) -> Result<Self> {
        let n = spec.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(Pixel::new(i, j)));
        Self::new(spec, values)
    }

    pub fn constant(spec: GridSpec, value: Complex64) -> Result<Self> {
        Self::from_fn(spec, |_| value)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    #[inline]
    pub fn at(&self, p: Pixel) -> Complex64 {
        self.values[[p.i, p.j]]
    }

    /// Point reflection `F(x) -> F(-x)`; an exact pixel permutation.
    pub fn reflect(&self) -> ComplexField {
        ComplexField { spec: self.spec, values: reflect_grid(&self.values) }
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }
}

pub(crate) fn check_shape(spec: &GridSpec, dim: (usize, usize)) -> Result<()> {
    if dim != (spec.n(), spec.n()) {
        return Err(Error::Config(format!(
            "grid values have shape {dim:?}, expected ({n}, {n})",
            n = spec.n()
        )));
    }
    Ok(())
}

/// Point reflection of a centered square grid: `(i, j) -> ((n - i) % n, (n - j) % n)`.
pub fn reflect_grid<T: Clone>(a: &Array2<T>) -> Array2<T> {
    let (n, m) = a.dim();
    debug_assert_eq!(n, m);
    Array2::from_shape_fn((n, n), |(i, j)| a[[(n - i) % n, (n - j) % n]].clone())
}

/// Splits a real grid into parts that are even and odd under `x -> -x`.
///
/// Both parts have exact parity on the grid. Their sum reproduces the input
/// up to one rounding of the half-sum and half-difference.
pub fn decompose_parity(phi: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let reflected = reflect_grid(phi);
    let mut even = phi + &reflected;
    even.mapv_inplace(|v| 0.5 * v);
    let mut odd = phi - &reflected;
    odd.mapv_inplace(|v| 0.5 * v);
    (even, odd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(16, 1e-5).unwrap()
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut v = Array2::from_elem((16, 16), Complex64::new(1.0, 0.0));
        v[[3, 4]] = Complex64::new(f64::NAN, 0.0);
        assert!(ComplexField::new(spec(), v).is_err());
        let bad_shape = Array2::from_elem((8, 16), Complex64::new(1.0, 0.0));
        assert!(ComplexField::new(spec(), bad_shape).is_err());
    }

    #[test]
    fn centered_delta_is_fixed_by_reflection() {
        let s = spec();
        let c = s.center();
        let f = ComplexField::from_fn(s, |p| if p == c { Complex64::new(1.0, 0.0) } else { Complex64::default() }).unwrap();
        assert_eq!(f.reflect(), f);
    }

    #[test]
    fn off_center_delta_moves_to_mirror_pixel() {
        let s = spec();
        let src = Pixel::new(8 + 3, 8);
        let f = ComplexField::from_fn(s, |p| if p == src { Complex64::new(0.0, 2.0) } else { Complex64::default() }).unwrap();
        let r = f.reflect();
        assert_eq!(r.at(Pixel::new(8 - 3, 8)), Complex64::new(0.0, 2.0));
        assert_eq!(r.values().iter().filter(|v| v.norm() > 0.0).count(), 1);
    }

    #[test]
    fn quadratic_is_pure_even_and_cubic_pure_odd() {
        let s = spec();
        let quad = Array2::from_shape_fn((16, 16), |(i, j)| s.coord(i).powi(2) + s.coord(j).powi(2));
        let (e, o) = decompose_parity(&quad);
        // Row/column 0 has no mirror partner with negated coordinate; it maps to itself.
        assert_eq!(e, quad);
        assert!(o.iter().all(|&v| v == 0.0));

        let cubic = Array2::from_shape_fn((16, 16), |(i, _)| if i == 0 { 0.0 } else { s.coord(i).powi(3) });
        let (e, o) = decompose_parity(&cubic);
        assert!(e.iter().all(|&v| v == 0.0));
        assert_eq!(o, cubic);
    }
}
