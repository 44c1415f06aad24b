//! Bucket-bucket mode: the coincidence count as a function of a transverse
//! displacement of object 1 is the intensity cross-correlation of the two objects.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::geometry::OpticalGeometry;
use super::transfer::check_same_grid;
use crate::error::{Error, Result};
use crate::fields::ObjectMask;
use crate::sources::{entangled_rate_constant, SourceSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationPoint {
    /// Displacement in the detector plane, snapped to the detector lattice (m).
    pub r: [f64; 2],
    /// The same displacement in detector pixels.
    pub shift: [isize; 2],
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationScan {
    pub points: Vec<CorrelationPoint>,
    /// Rate constant multiplying `g` (`R0` for downconversion, 1 for classical light).
    pub norm: f64,
    pub deinvert: bool,
}

/// `g(r) = sum_x1 w(x1) |G1((x1 + r)/m)|^2 |G2(-x1/m)|^2`.
///
/// `w` is 1 for downconversion and `|F(k x1 / f_D)|^2` for a classical source.
/// With `deinvert` the extra lens undoes the inversion and `G2(x1/m)` is used.
/// Displacements are snapped to the detector pixel lattice; a displacement that
/// would move any part of object 1 off the grid is an error.
pub fn correlate_scan(
    g1: &ObjectMask,
    g2: &ObjectMask,
    displacements: &[[f64; 2]],
    source: &SourceSpec,
    geom: &OpticalGeometry,
    deinvert: bool,
) -> Result<CorrelationScan> {
    check_same_grid(g1, g2)?;
    geom.validate()?;
    let det = geom.detector_grid(g1.spec());
    let n = det.n();
    let i1 = g1.intensity();
    let i2 = g2.intensity();

    let (weight, norm) = match source {
        SourceSpec::Spdc(p) => {
            p.validate()?;
            (Array2::ones((n, n)), entangled_rate_constant(p))
        }
        SourceSpec::Classical(s) => {
            if !s.is_even() {
                return Err(Error::Config("classical correlator requires an even spectrum".into()));
            }
            let c = geom.k / geom.f_d;
            let w = Array2::from_shape_fn((n, n), |(i, j)| s.at_momentum([c * det.coord(i), c * det.coord(j)]).norm_sqr());
            (w, 1.0)
        }
    };

    let support = support_box(&i1);
    let shifts = displacements
        .iter()
        .map(|r| {
            let si = (r[0] / det.pitch()).round();
            let sj = (r[1] / det.pitch()).round();
            if !(si.is_finite() && sj.is_finite()) {
                return Err(Error::Config(format!("non-finite displacement {r:?}")));
            }
            let (si, sj) = (si as isize, sj as isize);
            if let Some((imin, imax, jmin, jmax)) = support {
                let nn = n as isize;
                let fits = imin - si >= 0 && imax - si < nn && jmin - sj >= 0 && jmax - sj < nn;
                if !fits {
                    return Err(Error::OffGrid(si, sj));
                }
            }
            Ok((si, sj))
        })
        .collect::<Result<Vec<_>>>()?;

    let points = shifts
        .par_iter()
        .map(|&(si, sj)| {
            let mut g = 0.0;
            for p in det.pixels() {
                let Some(src) = det.shifted(p, si, sj) else { continue };
                let o2 = if deinvert { p } else { det.reflect(p) };
                g += weight[[p.i, p.j]] * i1[[src.i, src.j]] * i2[[o2.i, o2.j]];
            }
            CorrelationPoint { r: [si as f64 * det.pitch(), sj as f64 * det.pitch()], shift: [si, sj], g }
        })
        .collect();
    Ok(CorrelationScan { points, norm, deinvert })
}

/// Square scan of `steps x steps` displacements spanning `[-rmax, rmax]` on each axis.
pub fn square_scan(rmax: f64, steps: usize) -> Vec<[f64; 2]> {
    if steps <= 1 {
        return vec![[0.0, 0.0]];
    }
    let h = 2.0 * rmax / (steps - 1) as f64;
    let axis: Vec<f64> = (0..steps).map(|i| -rmax + i as f64 * h).collect();
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect()
}

fn support_box(a: &Array2<f64>) -> Option<(isize, isize, isize, isize)> {
    let mut b: Option<(isize, isize, isize, isize)> = None;
    for ((i, j), &v) in a.indexed_iter() {
        if v != 0.0 {
            let (i, j) = (i as isize, j as isize);
            b = Some(match b {
                None => (i, i, j, j),
                Some((a0, a1, b0, b1)) => (a0.min(i), a1.max(i), b0.min(j), b1.max(j)),
            });
        }
    }
    b
}
