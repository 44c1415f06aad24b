//! Single-branch transfer functions `H_j(q, x_j)` from the Fourier plane to a detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::OpticalGeometry;
use crate::error::{Error, Result};
use crate::fields::{ComplexField, GridSpec, ObjectMask, Pixel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensMode {
    WithLens,
    WithoutLens,
}

impl LensMode {
    pub fn from_flag(on: bool) -> Self {
        if on {
            LensMode::WithLens
        } else {
            LensMode::WithoutLens
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    One,
    Two,
}

/// Transfer function of one branch: 4f system with the object on its Fourier
/// plane, optionally followed by a detection lens.
///
/// Without the lens every momentum spreads over the whole detector as a plane
/// wave. With the lens, momentum `q` is delivered to the single pixel nearest
/// `x = f_D q / k`, scaled by the detector side length in pixels so that the
/// summed `|H|^2` over the detector matches the lensless case.
#[derive(Clone, Debug)]
pub struct BranchTransfer {
    pub mode: LensMode,
    mask: ComplexField,
    q_grid: GridSpec,
    detector: GridSpec,
    geom: OpticalGeometry,
    pupil_radius: f64,
    targets: Vec<Option<Pixel>>,
}

impl BranchTransfer {
    pub fn new(mode: LensMode, mask: &ObjectMask, geom: &OpticalGeometry, detector: GridSpec, branch: Branch) -> Result<Self> {
        geom.validate()?;
        let q_grid = geom.q_grid(mask.spec());
        let pupil_radius = match branch {
            Branch::One => geom.pupil_radius1,
            Branch::Two => geom.pupil_radius2,
        };
        let targets = q_grid
            .pixels()
            .map(|q| {
                let [a, b] = q_grid.position(q);
                detector.nearest([geom.f_d * a / geom.k, geom.f_d * b / geom.k])
            })
            .collect();
        Ok(Self { mode, mask: mask.as_complex(), q_grid, detector, geom: *geom, pupil_radius, targets })
    }

    pub fn q_grid(&self) -> &GridSpec {
        &self.q_grid
    }

    pub fn detector(&self) -> &GridSpec {
        &self.detector
    }

    /// Mask value `G(f q / k)`; the q grid and the mask grid share indices.
    #[inline]
    pub fn mask_at(&self, q: Pixel) -> Complex64 {
        self.mask.at(q)
    }

    /// Detector pixel receiving momentum bin `q` through the detection lens.
    #[inline]
    pub fn target(&self, q: Pixel) -> Option<Pixel> {
        self.targets[q.i * self.q_grid.n() + q.j]
    }

    pub fn vignetted_bins(&self) -> usize {
        match self.mode {
            LensMode::WithLens => self.targets.iter().filter(|t| t.is_none()).count(),
            LensMode::WithoutLens => 0,
        }
    }

    #[inline]
    pub fn pupil(&self, x: Pixel) -> f64 {
        if self.pupil_radius.is_infinite() {
            return 1.0;
        }
        let [a, b] = self.detector.position(x);
        if a * a + b * b <= self.pupil_radius * self.pupil_radius {
            1.0
        } else {
            0.0
        }
    }

    /// Detector-side quadratic phase `exp(-i k x^2 (d2/f_D - 1) / (2 f_D))`.
    #[inline]
    pub fn detector_phase(&self, x: Pixel) -> Complex64 {
        let [a, b] = self.detector.position(x);
        let g = &self.geom;
        Complex64::cis(-g.k * (a * a + b * b) / (2.0 * g.f_d) * (g.d2 / g.f_d - 1.0))
    }

    /// Momentum-side quadratic phase `exp(-i d1 q^2 / (2k))`.
    #[inline]
    pub fn momentum_phase(&self, q: Pixel) -> Complex64 {
        let [a, b] = self.q_grid.position(q);
        Complex64::cis(-self.geom.d1 * (a * a + b * b) / (2.0 * self.geom.k))
    }

    /// Height of the discrete delta.
    #[inline]
    pub fn delta_weight(&self) -> f64 {
        self.detector.n() as f64
    }

    /// Amplitude of the lensed branch at its target pixel, without the pupil.
    #[inline]
    pub fn lensed_amplitude(&self, q: Pixel, x: Pixel) -> Complex64 {
        self.detector_phase(x) * self.momentum_phase(q) * self.mask_at(q) * self.delta_weight()
    }

    /// `H(q, x)` for momentum bin `q` and detector pixel `x`.
    pub fn transfer(&self, q: Pixel, x: Pixel) -> Complex64 {
        let pupil = self.pupil(x);
        match self.mode {
            LensMode::WithoutLens => {
                let [qa, qb] = self.q_grid.position(q);
                let [xa, xb] = self.detector.position(x);
                self.mask_at(q) * Complex64::cis(qa * xa + qb * xb) * pupil
            }
            LensMode::WithLens => {
                if self.target(q) == Some(x) {
                    self.lensed_amplitude(q, x) * pupil
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

/// Inverse of a lens mapping: for each detector pixel, the momentum bins landing on it.
pub(crate) fn inverse_targets(t: &BranchTransfer) -> Vec<Vec<Pixel>> {
    let det = t.detector();
    let mut out = vec![Vec::new(); det.len()];
    for q in t.q_grid().pixels() {
        if let Some(x) = t.target(q) {
            out[x.i * det.n() + x.j].push(q);
        }
    }
    out
}

pub(crate) fn check_same_grid(a: &ObjectMask, b: &ObjectMask) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(Error::Config(format!(
            "masks must share a grid: {:?} vs {:?}",
            a.spec(),
            b.spec()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(mode: LensMode) -> BranchTransfer {
        let obj = GridSpec::new(16, 1e-5).unwrap();
        let geom = OpticalGeometry::new(0.25, 0.5, 0.3, 0.7, 7.7e6).unwrap();
        BranchTransfer::new(mode, &ObjectMask::unit(obj), &geom, geom.detector_grid(&obj), Branch::One).unwrap()
    }

    #[test]
    fn lens_sends_zero_momentum_to_center() {
        let t = setup(LensMode::WithLens);
        let c = t.q_grid().center();
        assert_eq!(t.target(c), Some(t.detector().center()));
        for x in t.detector().pixels() {
            let h = t.transfer(c, x);
            assert_eq!(h.norm() > 0.0, x == t.detector().center());
        }
    }

    #[test]
    fn lensless_unit_mask_has_unit_modulus() {
        let t = setup(LensMode::WithoutLens);
        for q in t.q_grid().pixels().step_by(7) {
            for x in t.detector().pixels().step_by(5) {
                assert!((t.transfer(q, x).norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lens_mapping_is_one_to_one_and_energy_matched() {
        let t = setup(LensMode::WithLens);
        let inv = inverse_targets(&t);
        assert!(inv.iter().all(|v| v.len() == 1));
        assert_eq!(t.vignetted_bins(), 0);
        let n2 = t.detector().len() as f64;
        for q in t.q_grid().pixels().step_by(11) {
            let total: f64 = t.detector().pixels().map(|x| t.transfer(q, x).norm_sqr()).sum();
            assert!((total - n2).abs() / n2 < 1e-14);
        }
    }

    #[test]
    fn quadratic_prefactors_do_not_change_modulus() {
        let obj = GridSpec::new(16, 1e-5).unwrap();
        let det = OpticalGeometry::new(0.25, 0.5, 0.3, 0.7, 7.7e6).unwrap().detector_grid(&obj);
        let mods: Vec<Vec<f64>> = [(0.0, 0.5), (0.3, 0.7), (-2.0, 11.0)]
            .iter()
            .map(|&(d1, d2)| {
                let geom = OpticalGeometry::new(0.25, 0.5, d1, d2, 7.7e6).unwrap();
                let t = BranchTransfer::new(LensMode::WithLens, &ObjectMask::unit(obj), &geom, det, Branch::Two).unwrap();
                obj.pixels().map(|q| t.transfer(q, t.target(q).unwrap()).norm()).collect()
            })
            .collect();
        for m in &mods[1..] {
            for (a, b) in m.iter().zip(&mods[0]) {
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }
}
