//! Biphoton spectrum of collinear type-II downconversion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Crystal and filtering parameters of the downconversion source.
///
/// Walk-off is along grid axis `e2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdcParams {
    /// Crystal thickness `L` (m).
    #[serde(rename = "L")]
    pub crystal_length: f64,
    /// Difference of inverse group velocities `D` (s/m).
    #[serde(rename = "D")]
    pub delay_mismatch: f64,
    /// Spatial walk-off coefficient `M` (dimensionless).
    #[serde(rename = "M")]
    pub walkoff: f64,
    /// Pump wavenumber (1/m).
    pub k_pump: f64,
    /// Center frequency `Omega0` (rad/s).
    pub omega0: f64,
    /// Half-width of the detuning window (rad/s).
    pub bandwidth: f64,
    /// Number of detuning quadrature nodes; odd so that `nu = 0` is a node.
    pub n_nu: usize,
}

impl SpdcParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L", self.crystal_length),
            ("k_pump", self.k_pump),
            ("omega0", self.omega0),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("SPDC parameter {name} must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("D", self.delay_mismatch), ("M", self.walkoff)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("SPDC parameter {name} must be finite, got {v}")));
            }
        }
        if self.n_nu == 0 || self.n_nu % 2 == 0 {
            return Err(Error::Config(format!("n_nu = {} must be odd and at least 1", self.n_nu)));
        }
        if self.bandwidth >= self.omega0 {
            return Err(Error::Domain(format!(
                "bandwidth {} is not narrow compared to omega0 {}",
                self.bandwidth, self.omega0
            )));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> NuQuadrature {
        NuQuadrature::new(self.bandwidth, self.n_nu)
    }

    /// Delay `D L` at which the coincidence dip closes.
    pub fn dip_width(&self) -> f64 {
        self.delay_mismatch * self.crystal_length
    }
}

/// `sin(u)/u` with a series branch near zero.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// `Delta(q, nu) = -nu D + M q2 + 2|q|^2 / k_pump`.
pub fn phase_mismatch(q: [f64; 2], nu: f64, p: &SpdcParams) -> f64 {
    let q2 = q[0] * q[0] + q[1] * q[1];
    -nu * p.delay_mismatch + p.walkoff * q[1] + 2.0 * q2 / p.k_pump
}

/// `Phi(q, nu) = sinc(L Delta / 2) exp(i L Delta / 2)`.
pub fn spdc_spectrum(q: [f64; 2], nu: f64, p: &SpdcParams) -> Complex64 {
    let half = 0.5 * p.crystal_length * phase_mismatch(q, nu, p);
    Complex64::from_polar(1.0, half) * sinc(half)
}

/// Symmetric trapezoid nodes over `[-bandwidth, bandwidth]`.
///
/// Node `i` and node `n - 1 - i` are exact negatives of each other.
#[derive(Clone, Debug, PartialEq)]
pub struct NuQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NuQuadrature {
    pub fn new(bandwidth: f64, n: usize) -> Self {
        assert!(n % 2 == 1, "odd node count required");
        if n == 1 {
            return Self { nodes: vec![0.0], weights: vec![2.0 * bandwidth] };
        }
        let h = 2.0 * bandwidth / (n - 1) as f64;
        let mid = (n / 2) as isize;
        let nodes = (0..n).map(|i| (i as isize - mid) as f64 * h).collect();
        let weights = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `B(q) = integral dnu |Phi(q, nu)|^2` on the detuning quadrature.
pub fn b_integral(q: [f64; 2], p: &SpdcParams) -> f64 {
    p.quadrature().iter().map(|(nu, w)| w * spdc_spectrum(q, nu, p).norm_sqr()).sum()
}

/// `C(q) = integral dnu Phi(q, nu) Phi*(-q, -nu)` on the detuning quadrature.
pub fn c_integral(q: [f64; 2], p: &SpdcParams) -> Complex64 {
    let mq = [-q[0], -q[1]];
    p.quadrature()
        .iter()
        .map(|(nu, w)| spdc_spectrum(q, nu, p) * spdc_spectrum(mq, -nu, p).conj() * w)
        .sum()
}

/// Overall constant of the entangled image rate: `[B(q) + B(-q)] + [C(q) + C*(q)]` at `q = 0`.
pub fn entangled_rate_constant(p: &SpdcParams) -> f64 {
    let zero = [0.0, 0.0];
    2.0 * b_integral(zero, p) + 2.0 * c_integral(zero, p).re
}
