//! Aberration-cancelling two-photon interferometer: coincidence rate versus delay.
//!
//! `R(tau) = R0 [1 - Lambda(1 - 2 tau / (D L)) Re W(tau)]`. The modulation
//! `W` enters through its real part; for unit masks and zero walk-off it is
//! exactly 1. The walk-off factor couples only the `e2` momentum component,
//! so `W` is delay-independent only when the integrand lives on `q2 = 0`.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{ComplexField, GridSpec, ObjectMask};
use crate::imaging::OpticalGeometry;
use crate::sources::SpdcParams;

/// Tent function: `1 - |x|` on `[-1, 1]`, zero outside.
pub fn triangular(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        1.0 - x.abs()
    } else {
        0.0
    }
}

fn check_masks(g1: &ObjectMask, g2: &ObjectMask) -> Result<GridSpec> {
    if g1.spec() != g2.spec() {
        return Err(Error::Config("interferometer masks must share a grid".into()));
    }
    Ok(*g1.spec())
}

/// `R0 = sum_q |G1(f q / k) G2(-f q / k)|^2 dq^2`. Zero (with a warning) for opaque masks.
pub fn background_r0(g1: &ObjectMask, g2: &ObjectMask, geom: &OpticalGeometry) -> Result<f64> {
    let spec = check_masks(g1, g2)?;
    geom.validate()?;
    let dq2 = geom.q_grid(&spec).pixel_area();
    let a = g1.as_complex();
    let b = g2.as_complex();
    let sum: f64 = spec.pixels().map(|p| (a.at(p) * b.at(spec.reflect(p))).norm_sqr()).sum();
    let r0 = sum * dq2;
    if r0 == 0.0 {
        warn!("background rate R0 vanished; the modulation term cannot be normalized");
    }
    Ok(r0)
}

/// Precomputed integrand of `W(tau)`, summed along `e1` so each delay costs one pass over `e2`.
#[derive(Clone, Debug)]
pub struct ModulationKernel {
    r0: f64,
    dq2: f64,
    /// `sum_{q1} G1*(q) G1(-q) G2*(-q) G2(q)` for each `q2` column.
    columns: Vec<Complex64>,
    q2: Vec<f64>,
    walkoff_per_delay: f64,
}

impl ModulationKernel {
    pub fn new(g1: &ObjectMask, g2: &ObjectMask, p: &SpdcParams, geom: &OpticalGeometry) -> Result<Self> {
        p.validate()?;
        let r0 = background_r0(g1, g2, geom)?;
        if r0 == 0.0 {
            return Err(Error::UndefinedModulation);
        }
        if p.delay_mismatch == 0.0 {
            return Err(Error::Config("modulation W(tau) needs a nonzero group-delay mismatch D".into()));
        }
        let spec = *g1.spec();
        let q_grid = geom.q_grid(&spec);
        let a: ComplexField = g1.as_complex();
        let b: ComplexField = g2.as_complex();
        let n = spec.n();
        let columns = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let q = crate::fields::Pixel::new(i, j);
                        let mq = spec.reflect(q);
                        a.at(q).conj() * a.at(mq) * (b.at(mq).conj() * b.at(q))
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            r0,
            dq2: q_grid.pixel_area(),
            columns,
            q2: (0..n).map(|j| q_grid.coord(j)).collect(),
            walkoff_per_delay: 2.0 * p.walkoff / p.delay_mismatch,
        })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `W(tau) = (1/R0) sum_q exp(-2 i M tau q2 / D) G1*(q) G1(-q) G2*(-q) G2(q) dq^2`.
    pub fn w(&self, tau: f64) -> Complex64 {
        let beta = self.walkoff_per_delay * tau;
        let s: Complex64 = self
            .columns
            .iter()
            .zip(&self.q2)
            .map(|(c, &q2)| if beta == 0.0 { *c } else { Complex64::cis(-beta * q2) * c })
            .sum();
        s * (self.dq2 / self.r0)
    }
}

pub fn modulation_w(tau: f64, g1: &ObjectMask, g2: &ObjectMask, p: &SpdcParams, geom: &OpticalGeometry) -> Result<Complex64> {
    Ok(ModulationKernel::new(g1, g2, p, geom)?.w(tau))
}

#[derive(Clone, Debug, Serialize)]
pub struct TauScan {
    pub taus: Vec<f64>,
    pub rates: Vec<f64>,
    #[serde(skip)]
    pub w: Vec<Complex64>,
    pub r0: f64,
    /// `D L`, the full base width of the dip.
    pub dip_width: f64,
    #[serde(skip)]
    pub params: SpdcParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DipSummary {
    /// Delay of the minimum rate.
    pub center: f64,
    /// `1 - R_min / R0`.
    pub depth: f64,
    /// Distance between the baseline samples that bracket the dip.
    pub width: f64,
}

impl TauScan {
    pub fn summary(&self) -> DipSummary {
        let (imin, rmin) = self
            .rates
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
        let below = |r: &f64| *r < self.r0 * (1.0 - 1e-12);
        let width = match (self.rates.iter().position(below), self.rates.iter().rposition(below)) {
            (Some(a), Some(b)) => {
                let lo = self.taus[a.saturating_sub(1)];
                let hi = self.taus[(b + 1).min(self.taus.len() - 1)];
                hi - lo
            }
            _ => 0.0,
        };
        DipSummary {
            center: self.taus.get(imin).copied().unwrap_or(f64::NAN),
            depth: 1.0 - rmin / self.r0,
            width,
        }
    }
}

/// `R(tau)` over the given delays; evaluated in parallel, order preserved.
pub fn rate_scan(taus: &[f64], g1: &ObjectMask, g2: &ObjectMask, p: &SpdcParams, geom: &OpticalGeometry) -> Result<TauScan> {
    if let Some(t) = taus.iter().find(|t| !t.is_finite()) {
        return Err(Error::Config(format!("non-finite delay {t}")));
    }
    let kernel = ModulationKernel::new(g1, g2, p, geom)?;
    let dl = p.dip_width();
    let r0 = kernel.r0();
    let (w, rates): (Vec<Complex64>, Vec<f64>) = taus
        .par_iter()
        .map(|&tau| {
            let w = kernel.w(tau);
            let rate = r0 * (1.0 - triangular(1.0 - 2.0 * tau / dl) * w.re);
            (w, rate)
        })
        .unzip();
    Ok(TauScan { taus: taus.to_vec(), rates, w, r0, dip_width: dl, params: *p })
}

/// `steps` evenly spaced delays from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let h = (max - min) / (steps - 1) as f64;
            (0..steps).map(|i| min + i as f64 * h).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{MaskShape, PhaseScreen, ZernikeMode};

    fn grid() -> GridSpec {
        GridSpec::new(32, 2e-5).unwrap()
    }

    fn geom() -> OpticalGeometry {
        OpticalGeometry::new(0.25, 0.25, 0.3, 0.3, 7.757e6).unwrap()
    }

    fn params(walkoff: f64) -> SpdcParams {
        SpdcParams {
            crystal_length: 1e-3,
            delay_mismatch: 2e-10,
            walkoff,
            k_pump: 1.55e7,
            omega0: 2.3e15,
            bandwidth: 1e13,
            n_nu: 9,
        }
    }

    #[test]
    fn triangular_values() {
        assert_eq!(triangular(0.0), 1.0);
        assert_eq!(triangular(1.0), 0.0);
        assert_eq!(triangular(-1.0), 0.0);
        assert_eq!(triangular(0.5), 0.5);
        assert_eq!(triangular(-3.0), 0.0);
    }

    #[test]
    fn r0_of_unit_masks_is_grid_area() {
        let g = grid();
        let u = ObjectMask::unit(g);
        let r0 = background_r0(&u, &u, &geom()).unwrap();
        let area = geom().q_grid(&g).extent().powi(2);
        assert!((r0 - area).abs() / area < 1e-14);
    }

    #[test]
    fn r0_ignores_phase() {
        let g = grid();
        let screen = PhaseScreen::new(vec![(ZernikeMode::named("coma").unwrap(), 1.7), (ZernikeMode::named("defocus").unwrap(), -0.9)]);
        let pm = ObjectMask::unit(g).with_screen(&screen).unwrap();
        let a = background_r0(&pm, &pm, &geom()).unwrap();
        let b = background_r0(&ObjectMask::unit(g), &ObjectMask::unit(g), &geom()).unwrap();
        assert!((a - b).abs() / b <= 1e-12);
    }

    #[test]
    fn disk_r0_matches_closed_form() {
        // Finer grid: a 30-pixel disk keeps the Riemann-sum error near 1%.
        let g = GridSpec::new(128, 1e-5).unwrap();
        let a = 30e-5;
        let disk = ObjectMask::generate(g, &MaskShape::Disk { radius: a, center: [0.0, 0.0] }).unwrap();
        let r0 = background_r0(&disk, &ObjectMask::unit(g), &geom()).unwrap();
        let geo = geom();
        let exact = std::f64::consts::PI * a * a * (geo.k / geo.f).powi(2);
        assert!((r0 - exact).abs() / exact < 0.02, "{r0} vs {exact}");
    }

    #[test]
    fn opaque_masks_give_zero_r0_and_undefined_w() {
        let g = grid();
        let o = ObjectMask::generate(g, &MaskShape::Opaque).unwrap();
        assert_eq!(background_r0(&o, &o, &geom()).unwrap(), 0.0);
        assert!(matches!(modulation_w(0.0, &o, &o, &params(0.07), &geom()), Err(Error::UndefinedModulation)));
    }

    #[test]
    fn unit_masks_give_unit_w_at_zero_delay() {
        let u = ObjectMask::unit(grid());
        let w = modulation_w(0.0, &u, &u, &params(0.07), &geom()).unwrap();
        assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dead_zone_is_exactly_background() {
        let u = ObjectMask::unit(grid());
        let p = params(0.07);
        let dl = p.dip_width();
        let scan = rate_scan(&[-0.3 * dl, -1e-20, 1.2 * dl, 5.0 * dl], &u, &u, &p, &geom()).unwrap();
        assert!(scan.rates.iter().all(|&r| r == scan.r0));
    }

    #[test]
    fn no_walkoff_gives_full_depth_dip() {
        let u = ObjectMask::unit(grid());
        let p = params(0.0);
        let dl = p.dip_width();
        let scan = rate_scan(&linspace(-0.5 * dl, 1.5 * dl, 101), &u, &u, &p, &geom()).unwrap();
        assert!(scan.w.iter().all(|w| *w == Complex64::new(1.0, 0.0)));
        let s = scan.summary();
        assert!((s.center - 0.5 * dl).abs() < 1e-12 * dl);
        assert!((s.depth - 1.0).abs() < 1e-12);
        assert!((s.width - dl).abs() <= 2.0 * 2.0 * dl / 100.0);
    }

    #[test]
    fn line_on_e2_axis_gives_delay_independent_w() {
        // Support confined to q2 = 0: the walk-off phase never enters.
        let g = grid();
        let amp = ndarray::Array2::from_shape_fn((32, 32), |(_, j)| if j == 16 { 1.0 } else { 0.0 });
        let phase = ndarray::Array2::from_shape_fn((32, 32), |(i, _)| 0.3 * (g.coord(i) / 1e-4).powi(3));
        let m = ObjectMask::new(g, amp, phase).unwrap();
        let k = ModulationKernel::new(&m, &ObjectMask::unit(g), &params(0.07), &geom()).unwrap();
        let a = k.w(0.0);
        for tau in [1e-14, 7e-14, 2e-13] {
            assert!((k.w(tau) - a).norm() < 1e-12);
        }
    }

    #[test]
    fn walkoff_decoheres_wide_masks() {
        let u = ObjectMask::unit(grid());
        let k = ModulationKernel::new(&u, &u, &params(0.07), &geom()).unwrap();
        assert!(k.w(1e-12).norm() < 0.5);
    }
}
