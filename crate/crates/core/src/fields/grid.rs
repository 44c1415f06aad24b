use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square sampling grid with the origin at index `(n/2, n/2)`.
///
/// Axis 0 runs along `e1`, axis 1 along `e2`. Because the origin sits on a
/// pixel, the point reflection `x -> -x` is the exact index permutation
/// `(i, j) -> ((n - i) % n, (n - j) % n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    pitch: f64,
}

/// Index of a grid pixel: `i` along `e1`, `j` along `e2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub i: usize,
    pub j: usize,
}

impl Pixel {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl GridSpec {
    pub const MIN_N: usize = 16;

    pub fn new(n: usize, pitch: f64) -> Result<Self> {
        if n < Self::MIN_N || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size n = {n} must be even and at least {}",
                Self::MIN_N
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::Config(format!("grid pitch {pitch} must be finite and positive")));
        }
        Ok(Self { n, pitch })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Same pixel count with a different pitch.
    pub fn with_pitch(&self, pitch: f64) -> Result<Self> {
        Self::new(self.n, pitch)
    }

    #[inline]
    pub fn center(&self) -> Pixel {
        Pixel::new(self.n / 2, self.n / 2)
    }

    /// Signed offset of an index from the grid center.
    #[inline]
    pub fn offset(&self, index: usize) -> isize {
        index as isize - (self.n / 2) as isize
    }

    /// Physical coordinate along one axis.
    #[inline]
    pub fn coord(&self, index: usize) -> f64 {
        self.offset(index) as f64 * self.pitch
    }

    #[inline]
    pub fn position(&self, p: Pixel) -> [f64; 2] {
        [self.coord(p.i), self.coord(p.j)]
    }

    #[inline]
    pub fn reflect_index(&self, index: usize) -> usize {
        (self.n - index) % self.n
    }

    #[inline]
    pub fn reflect(&self, p: Pixel) -> Pixel {
        Pixel::new(self.reflect_index(p.i), self.reflect_index(p.j))
    }

    /// Pixel whose center is nearest to `x` along one axis, if inside the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let k = (x / self.pitch).round();
        if !k.is_finite() {
            return None;
        }
        let idx = k as i64 + (self.n / 2) as i64;
        (0..self.n as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn nearest(&self, x: [f64; 2]) -> Option<Pixel> {
        Some(Pixel::new(self.nearest_index(x[0])?, self.nearest_index(x[1])?))
    }

    /// Pixel displaced by a signed offset, if it stays inside the grid.
    pub fn shifted(&self, p: Pixel, di: isize, dj: isize) -> Option<Pixel> {
        let i = p.i as isize + di;
        let j = p.j as isize + dj;
        let n = self.n as isize;
        (i >= 0 && i < n && j >= 0 && j < n).then(|| Pixel::new(i as usize, j as usize))
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| Pixel::new(i, j)))
    }

    /// Physical side length of the sampled square.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.pitch
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch * self.pitch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::new(8, 1.0).is_err());
        assert!(GridSpec::new(17, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        assert!(GridSpec::new(16, f64::NAN).is_err());
        assert!(GridSpec::new(16, 1.0).is_ok());
    }

    #[test]
    fn reflection_negates_coordinates_exactly() {
        let g = GridSpec::new(32, 0.37e-5).unwrap();
        for p in g.pixels() {
            let r = g.reflect(p);
            assert_eq!(g.reflect(r), p);
            if p.i != 0 && p.j != 0 {
                let a = g.position(p);
                let b = g.position(r);
                assert_eq!(a[0], -b[0]);
                assert_eq!(a[1], -b[1]);
            }
        }
        assert_eq!(g.reflect(g.center()), g.center());
    }

    #[test]
    fn nearest_roundtrips_pixel_centers() {
        let g = GridSpec::new(16, 2.5e-6).unwrap();
        for p in g.pixels() {
            assert_eq!(g.nearest(g.position(p)), Some(p));
        }
        assert_eq!(g.nearest([1.0, 0.0]), None);
    }
}
