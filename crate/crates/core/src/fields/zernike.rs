//! Disk-polynomial phase screens.
//!
//! Modes are indexed by radial degree `n` and signed azimuthal order `m`
//! (`m >= 0` selects the cosine term, `m < 0` the sine term). Polynomials are
//! unnormalized, so a unit weight gives a one-radian excursion at the rim.
//! Under point reflection a mode picks up `(-1)^|m|`.
//!
//! Rendering uses the Cartesian form `P(r^2) * Re/Im[(x + iy)^|m|]`, so the
//! parity of each mode holds bit-exactly on a centered grid.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZernikeMode {
    pub n: u32,
    pub m: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

const NAMED_MODES: &[(&str, u32, i32)] = &[
    ("piston", 0, 0),
    ("tilt_x", 1, 1),
    ("tilt_y", 1, -1),
    ("defocus", 2, 0),
    ("astigmatism_0", 2, 2),
    ("astigmatism_45", 2, -2),
    ("coma_x", 3, 1),
    ("coma_y", 3, -1),
    ("trefoil_x", 3, 3),
    ("trefoil_y", 3, -3),
    ("spherical", 4, 0),
    ("secondary_astigmatism_0", 4, 2),
    ("secondary_astigmatism_45", 4, -2),
    ("quadrafoil_0", 4, 4),
    ("quadrafoil_45", 4, -4),
];

impl ZernikeMode {
    pub fn new(n: u32, m: i32) -> Result<Self> {
        let am = m.unsigned_abs();
        if am > n || (n - am) % 2 != 0 {
            return Err(Error::Config(format!(
                "invalid disk-polynomial mode (n = {n}, m = {m}): need |m| <= n and n - |m| even"
            )));
        }
        Ok(Self { n, m })
    }

    /// Looks up a mode by its conventional aberration name.
    pub fn named(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase();
        let alias = match key.as_str() {
            "tilt" => "tilt_x",
            "coma" => "coma_x",
            "astigmatism" => "astigmatism_0",
            "trefoil" => "trefoil_x",
            other => other,
        };
        NAMED_MODES
            .iter()
            .find(|(k, _, _)| *k == alias)
            .map(|&(_, n, m)| Self { n, m })
            .ok_or_else(|| Error::Config(format!("unknown aberration mode '{name}'")))
    }

    pub fn name(&self) -> Option<&'static str> {
        NAMED_MODES.iter().find(|(_, n, m)| *n == self.n && *m == self.m).map(|(k, _, _)| *k)
    }

    pub fn parity(&self) -> Parity {
        if self.m.unsigned_abs() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// All valid modes with radial degree in `1..=max_degree` (piston excluded).
    pub fn up_to_degree(max_degree: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for n in 1..=max_degree {
            for m in (-(n as i32)..=n as i32).step_by(2) {
                out.push(Self { n, m });
            }
        }
        out
    }

    fn radial_coefficients(&self) -> Vec<f64> {
        // Coefficients of R_n^m(r) / r^|m| as a polynomial in r^2, highest power first.
        let am = self.m.unsigned_abs() as u64;
        let n = self.n as u64;
        let fact = |k: u64| (1..=k).fold(1.0f64, |acc, v| acc * v as f64);
        (0..=(n - am) / 2)
            .map(|s| {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact(n - s) / (fact(s) * fact((n + am) / 2 - s) * fact((n - am) / 2 - s))
            })
            .collect()
    }

    /// Evaluates the mode at normalized disk coordinates `(u, v)`, `u^2 + v^2 < 1`.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.eval_with(&self.radial_coefficients(), u, v)
    }

    fn eval_with(&self, coeffs: &[f64], u: f64, v: f64) -> f64 {
        let r2 = u * u + v * v;
        let radial = coeffs.iter().fold(0.0, |acc, &c| acc * r2 + c);
        let z = Complex64::new(u, v);
        let mut zp = Complex64::new(1.0, 0.0);
        for _ in 0..self.m.unsigned_abs() {
            zp *= z;
        }
        let angular = if self.m >= 0 { zp.re } else { zp.im };
        radial * angular
    }
}

impl fmt::Display for ZernikeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => write!(f, "{name}"),
            None => write!(f, "Z(n={}, m={})", self.n, self.m),
        }
    }
}

/// Weighted sum of disk polynomials, in radians, on a disk of given radius.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseScreen {
    pub coefficients: Vec<(ZernikeMode, f64)>,
    /// Disk radius in meters; `None` uses half the grid extent.
    #[serde(default)]
    pub radius: Option<f64>,
}

impl PhaseScreen {
    pub fn new(coefficients: Vec<(ZernikeMode, f64)>) -> Self {
        Self { coefficients, radius: None }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn parities(&self) -> Vec<Parity> {
        self.coefficients.iter().map(|(m, _)| m.parity()).collect()
    }

    /// Keeps only the modes of one parity.
    pub fn filtered(&self, parity: Parity) -> PhaseScreen {
        PhaseScreen {
            coefficients: self.coefficients.iter().copied().filter(|(m, _)| m.parity() == parity).collect(),
            radius: self.radius,
        }
    }

    /// Seeded random screen over all modes up to `max_degree`, weights uniform in `[-max_weight, max_weight]`.
    pub fn random(rng: &mut impl rand::Rng, max_degree: u32, max_weight: f64) -> PhaseScreen {
        let coefficients = ZernikeMode::up_to_degree(max_degree)
            .into_iter()
            .map(|m| (m, rng.random_range(-max_weight..=max_weight)))
            .collect();
        PhaseScreen::new(coefficients)
    }
}

/// Renders `phi(x)` on the grid. Pixels on or outside the disk rim get zero phase.
pub fn render_phase_screen(screen: &PhaseScreen, spec: &GridSpec) -> Result<Array2<f64>> {
    let max_radius = 0.5 * spec.extent();
    let radius = screen.radius.unwrap_or(max_radius);
    if !(radius.is_finite() && radius > 0.0) || radius > max_radius {
        return Err(Error::Config(format!(
            "phase-screen radius {radius} must lie in (0, {max_radius}] for this grid"
        )));
    }
    let mut modes = Vec::with_capacity(screen.coefficients.len());
    for &(mode, weight) in &screen.coefficients {
        let mode = ZernikeMode::new(mode.n, mode.m)?;
        if !weight.is_finite() {
            return Err(Error::Config(format!("non-finite weight for mode {mode}")));
        }
        modes.push((mode, weight, mode.radial_coefficients()));
    }
    let n = spec.n();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        let u = spec.coord(i) / radius;
        let v = spec.coord(j) / radius;
        if u * u + v * v >= 1.0 {
            return 0.0;
        }
        modes.iter().fold(0.0, |acc, (mode, w, c)| acc + w * mode.eval_with(c, u, v))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::field::{decompose_parity, reflect_grid};

    fn spec() -> GridSpec {
        GridSpec::new(64, 1e-5).unwrap()
    }

    #[test]
    fn mode_validation() {
        assert!(ZernikeMode::new(3, 2).is_err());
        assert!(ZernikeMode::new(2, 4).is_err());
        assert!(ZernikeMode::new(4, -2).is_ok());
        assert!(ZernikeMode::named("warp").is_err());
        assert_eq!(ZernikeMode::named("Coma").unwrap(), ZernikeMode { n: 3, m: 1 });
    }

    #[test]
    fn unknown_mode_in_screen_is_config_error() {
        let s = PhaseScreen::new(vec![(ZernikeMode { n: 3, m: 0 }, 1.0)]);
        assert!(matches!(render_phase_screen(&s, &spec()), Err(Error::Config(_))));
    }

    #[test]
    fn radial_polynomials_match_known_forms() {
        let cases: [(ZernikeMode, fn(f64, f64) -> f64); 5] = [
            (ZernikeMode { n: 2, m: 0 }, |u, v| 2.0 * (u * u + v * v) - 1.0),
            (ZernikeMode { n: 3, m: 1 }, |u, v| (3.0 * (u * u + v * v) - 2.0) * u),
            (ZernikeMode { n: 3, m: -1 }, |u, v| (3.0 * (u * u + v * v) - 2.0) * v),
            (ZernikeMode { n: 4, m: 0 }, |u, v| {
                let r2 = u * u + v * v;
                6.0 * r2 * r2 - 6.0 * r2 + 1.0
            }),
            (ZernikeMode { n: 2, m: -2 }, |u, v| 2.0 * u * v),
        ];
        for (mode, f) in cases {
            for &(u, v) in &[(0.1, 0.2), (-0.5, 0.3), (0.7, -0.6)] {
                assert!((mode.eval(u, v) - f(u, v)).abs() < 1e-14, "{mode} at ({u},{v})");
            }
        }
        for mode in ZernikeMode::up_to_degree(6) {
            let edge = mode.eval(1.0, 0.0).abs().max(mode.eval(0.0, 1.0).abs());
            assert!(edge <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn empty_screen_renders_zero() {
        let phi = render_phase_screen(&PhaseScreen::default(), &spec()).unwrap();
        assert!(phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_odd_mode_is_exactly_odd() {
        let s = PhaseScreen::new(vec![(ZernikeMode::named("tilt_x").unwrap(), 1.0)]);
        let phi = render_phase_screen(&s, &spec()).unwrap();
        let r = reflect_grid(&phi);
        assert!(phi.iter().zip(r.iter()).all(|(a, b)| *a == -*b));
        assert!(phi.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn even_part_of_mixed_screen_is_the_defocus_term() {
        let g = spec();
        let defocus = ZernikeMode::named("defocus").unwrap();
        let coma = ZernikeMode::named("coma").unwrap();
        let mixed = render_phase_screen(&PhaseScreen::new(vec![(defocus, 0.7), (coma, 0.3)]), &g).unwrap();
        let only_defocus = render_phase_screen(&PhaseScreen::new(vec![(defocus, 0.7)]), &g).unwrap();
        let only_coma = render_phase_screen(&PhaseScreen::new(vec![(coma, 0.3)]), &g).unwrap();
        let (even, odd) = decompose_parity(&mixed);
        let err_e = (&even - &only_defocus).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err_o = (&odd - &only_coma).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err_e <= 1e-12, "{err_e}");
        assert!(err_o <= 1e-12, "{err_o}");
    }

    #[test]
    fn rejects_radius_beyond_grid() {
        let g = spec();
        let s = PhaseScreen::new(vec![(ZernikeMode::named("coma").unwrap(), 1.0)]).with_radius(g.extent());
        assert!(render_phase_screen(&s, &g).is_err());
    }
}
