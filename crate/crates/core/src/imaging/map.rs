use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::fields::GridSpec;
use crate::sources::SourceKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComputationPath {
    Analytic,
    BruteForce,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapDiagnostics {
    /// Momentum bins whose detection-lens image falls outside the detector grid.
    pub vignetted_bins: usize,
    /// Finite pupils were in effect.
    pub experimental_pupils: bool,
}

/// Coincidence rate `R(x1)` over the detector-1 grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceMap {
    pub spec: GridSpec,
    pub rates: Array2<f64>,
    /// Overall rate constant applied to the map.
    pub norm: f64,
    /// Peak of the unnormalized map (brute-force maps are stored peak-normalized).
    pub scale: f64,
    pub path: ComputationPath,
    pub source: SourceKind,
    pub diagnostics: MapDiagnostics,
}

impl CoincidenceMap {
    pub fn max(&self) -> f64 {
        self.rates.iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// Map divided by its peak; an all-zero map stays zero.
    pub fn peak_normalized(&self) -> Array2<f64> {
        peak_normalize(&self.rates)
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        coefficient_of_variation(&self.rates)
    }
}

pub fn peak_normalize(a: &Array2<f64>) -> Array2<f64> {
    let peak = a.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak > 0.0 {
        a.mapv(|v| v / peak)
    } else {
        a.clone()
    }
}

/// Population standard deviation over mean. NaN for a zero-mean map.
pub fn coefficient_of_variation(a: &Array2<f64>) -> f64 {
    let n = a.len() as f64;
    let mean = a.sum() / n;
    let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// `max |a - b| / max |b|`; zero when both are identically zero.
pub fn relative_max_error(a: &Array2<f64>, reference: &Array2<f64>) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(reference.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cv_of_flat_map_is_zero() {
        let a = Array2::from_elem((4, 4), 2.5);
        assert_eq!(coefficient_of_variation(&a), 0.0);
        assert!(coefficient_of_variation(&Array2::zeros((4, 4))).is_nan());
    }

    #[test]
    fn relative_error_handles_zero_reference() {
        let z = Array2::<f64>::zeros((2, 2));
        assert_eq!(relative_max_error(&z, &z), 0.0);
        let mut a = z.clone();
        a[[0, 0]] = 1.0;
        assert!(relative_max_error(&a, &z).is_infinite());
        assert_eq!(relative_max_error(&z, &a), 1.0);
    }
}
