//! Closed-form coincidence maps.

use ndarray::Array2;
use rayon::prelude::*;

use super::geometry::OpticalGeometry;
use super::map::{CoincidenceMap, ComputationPath, MapDiagnostics};
use super::transfer::check_same_grid;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ObjectMask};
use crate::sources::{entangled_rate_constant, ClassicalSpectrum, SourceKind, SpdcParams};

/// `R(x1) = R0 |G1(x1/m)|^2 |G2(-x1/m)|^2` on the matched detector grid.
pub fn image_entangled_analytic(g1: &ObjectMask, g2: &ObjectMask, p: &SpdcParams, geom: &OpticalGeometry) -> Result<CoincidenceMap> {
    image_entangled_analytic_on(g1, g2, p, geom, &geom.detector_grid(g1.spec()))
}

/// As [`image_entangled_analytic`] on an arbitrary detector grid (nearest-pixel sampling of the masks).
pub fn image_entangled_analytic_on(
    g1: &ObjectMask,
    g2: &ObjectMask,
    p: &SpdcParams,
    geom: &OpticalGeometry,
    detector: &GridSpec,
) -> Result<CoincidenceMap> {
    p.validate()?;
    let norm = entangled_rate_constant(p);
    let rates = product_map(g1, g2, geom, detector, |_| norm)?;
    Ok(CoincidenceMap {
        spec: *detector,
        scale: rates.iter().fold(0.0f64, |a, &v| a.max(v)),
        rates,
        norm,
        path: ComputationPath::Analytic,
        source: SourceKind::Spdc,
        diagnostics: MapDiagnostics::default(),
    })
}

/// `R(x1) = |F(k x1 / f_D) G1(x1/m) G2(-x1/m)|^2`.
pub fn image_classical(g1: &ObjectMask, g2: &ObjectMask, s: &ClassicalSpectrum, geom: &OpticalGeometry) -> Result<CoincidenceMap> {
    image_classical_on(g1, g2, s, geom, &geom.detector_grid(g1.spec()))
}

pub fn image_classical_on(
    g1: &ObjectMask,
    g2: &ObjectMask,
    s: &ClassicalSpectrum,
    geom: &OpticalGeometry,
    detector: &GridSpec,
) -> Result<CoincidenceMap> {
    if !s.is_even() {
        return Err(Error::Config("classical imaging requires an even spectrum F(q) = F(-q)".into()));
    }
    let scale_q = geom.k / geom.f_d;
    let rates = product_map(g1, g2, geom, detector, |x| s.at_momentum([scale_q * x[0], scale_q * x[1]]).norm_sqr())?;
    Ok(CoincidenceMap {
        spec: *detector,
        scale: rates.iter().fold(0.0f64, |a, &v| a.max(v)),
        rates,
        norm: 1.0,
        path: ComputationPath::Analytic,
        source: SourceKind::Classical,
        diagnostics: MapDiagnostics::default(),
    })
}

/// `w(x1) |G1(x1/m)|^2 |G2(-x1/m)|^2`, with `-x1/m` taken as the grid reflection
/// of the sampled object pixel.
pub(crate) fn product_map(
    g1: &ObjectMask,
    g2: &ObjectMask,
    geom: &OpticalGeometry,
    detector: &GridSpec,
    weight: impl Fn([f64; 2]) -> f64 + Sync,
) -> Result<Array2<f64>> {
    check_same_grid(g1, g2)?;
    geom.validate()?;
    let object = *g1.spec();
    let inv_m = geom.f / geom.f_d;
    let i1 = g1.intensity();
    let i2 = g2.intensity();
    let n = detector.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let x = [detector.coord(i), detector.coord(j)];
                    match object.nearest([x[0] * inv_m, x[1] * inv_m]) {
                        Some(o) => {
                            let r = object.reflect(o);
                            weight(x) * i1[[o.i, o.j]] * i2[[r.i, r.j]]
                        }
                        None => 0.0,
                    }
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}
