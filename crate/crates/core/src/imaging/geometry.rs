use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::GridSpec;

fn infinite() -> f64 {
    f64::INFINITY
}

/// Focal lengths, detection-lens distances and wavenumber of the imaging setup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalGeometry {
    /// Focal length of the 4f lenses (m).
    pub f: f64,
    /// Focal length of the detection lens (m).
    pub f_d: f64,
    /// Conjugate distances of the detection lens (m).
    pub d1: f64,
    pub d2: f64,
    /// Longitudinal wavenumber (1/m).
    pub k: f64,
    /// Detection aperture radii (m); infinite by default.
    #[serde(default = "infinite")]
    pub pupil_radius1: f64,
    #[serde(default = "infinite")]
    pub pupil_radius2: f64,
}

impl OpticalGeometry {
    pub fn new(f: f64, f_d: f64, d1: f64, d2: f64, k: f64) -> Result<Self> {
        let g = Self { f, f_d, d1, d2, k, pupil_radius1: f64::INFINITY, pupil_radius2: f64::INFINITY };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("f", self.f), ("f_d", self.f_d), ("k", self.k)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("geometry: {name} must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("d1", self.d1), ("d2", self.d2)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("geometry: {name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("pupil_radius1", self.pupil_radius1), ("pupil_radius2", self.pupil_radius2)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Config(format!("geometry: {name} must be positive (or inf), got {v}")));
            }
        }
        Ok(())
    }

    /// Image magnification `m = f_D / f`.
    pub fn magnification(&self) -> f64 {
        self.f_d / self.f
    }

    /// Momentum grid matched to an object grid through `y = f q / k`.
    pub fn q_grid(&self, object: &GridSpec) -> GridSpec {
        object.with_pitch(self.k * object.pitch() / self.f).expect("scaled pitch stays valid")
    }

    /// Detector grid on which the detection lens maps each momentum bin to one pixel.
    pub fn detector_grid(&self, object: &GridSpec) -> GridSpec {
        object.with_pitch(self.magnification() * object.pitch()).expect("scaled pitch stays valid")
    }

    pub fn has_finite_pupils(&self) -> bool {
        self.pupil_radius1.is_finite() || self.pupil_radius2.is_finite()
    }

    /// Maximum axial distance from plane Pi over which cancellation is expected
    /// to persist approximately: `f r_s / a` for object radius `r_s` and lens radius `a`.
    /// Reported only; objects are always simulated on the plane.
    pub fn depth_tolerance(&self, object_radius: f64, lens_radius: f64) -> f64 {
        self.f * object_radius / lens_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_grids_scale_pitch() {
        let g = OpticalGeometry::new(0.25, 0.5, 0.3, 0.3, 7.7e6).unwrap();
        let obj = GridSpec::new(64, 1e-5).unwrap();
        assert_eq!(g.magnification(), 2.0);
        assert!((g.detector_grid(&obj).pitch() - 2e-5).abs() < 1e-20);
        assert!((g.q_grid(&obj).pitch() - 7.7e6 * 1e-5 / 0.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(OpticalGeometry::new(0.0, 0.5, 0.3, 0.3, 7.7e6).is_err());
        assert!(OpticalGeometry::new(0.2, -0.5, 0.3, 0.3, 7.7e6).is_err());
        assert!(OpticalGeometry::new(0.2, 0.5, f64::NAN, 0.3, 7.7e6).is_err());
        let mut g = OpticalGeometry::new(0.2, 0.5, 0.3, 0.3, 7.7e6).unwrap();
        g.pupil_radius1 = 0.0;
        assert!(g.validate().is_err());
    }
}
