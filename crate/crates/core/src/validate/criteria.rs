//! The individual acceptance checks. Each returns its metrics and a verdict
//! against the supplied tolerances.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use super::desk;
use super::oracle::{fft_cross_correlation, gaussian_envelope};
use super::{CriterionResult, Digest, Tolerances};
use crate::error::Result;
use crate::fields::{reflect_grid, MaskShape, ObjectMask, Pixel};
use crate::imaging::{
    correlate_scan, image_classical, image_classical_bruteforce, image_entangled_analytic, image_entangled_bruteforce,
    lens_study, relative_max_error, square_scan, BruteForceOptions, OpticalGeometry, BOTH_LENSES,
};
use crate::interferometer::{rate_scan, ModulationKernel};
use crate::sources::{b_integral, c_integral, ClassicalSpectrum, SourceSpec};

struct Builder {
    id: u8,
    name: &'static str,
    metrics: BTreeMap<String, f64>,
    checks: Vec<(String, bool)>,
    digest: Digest,
}

impl Builder {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, metrics: BTreeMap::new(), checks: Vec::new(), digest: Digest::default() }
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Records `value <= limit` as a named check.
    fn at_most(&mut self, key: &str, value: f64, limit: f64) {
        self.metric(key, value);
        self.checks.push((format!("{key} = {value:.3e} <= {limit:.1e}"), value <= limit));
    }

    fn at_least(&mut self, key: &str, value: f64, limit: f64) {
        self.metric(key, value);
        self.checks.push((format!("{key} = {value:.3e} > {limit:.1e}"), value > limit));
    }

    fn holds(&mut self, what: &str, ok: bool) {
        self.metric(what, if ok { 1.0 } else { 0.0 });
        self.checks.push((what.to_string(), ok));
    }

    fn finish(self) -> CriterionResult {
        let passed = self.checks.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = self.checks.iter().filter(|(_, ok)| !ok).map(|(s, _)| s.as_str()).collect();
        let detail = if passed {
            self.checks.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join("; ")
        } else {
            format!("failed: {}", failed.join("; "))
        };
        CriterionResult {
            id: self.id,
            name: self.name.to_string(),
            passed,
            metrics: self.metrics,
            digest: self.digest.hex(),
            detail,
            elapsed_s: 0.0,
        }
    }
}

fn imaging_pair() -> (ObjectMask, ObjectMask) {
    (desk::disk(400e-6, [50e-6, 0.0]), desk::glyph('R', 900e-6, [0.0, 20e-6]))
}

fn screened_pair(g1: &ObjectMask, g2: &ObjectMask, index: u64) -> Result<(ObjectMask, ObjectMask)> {
    Ok((desk::screened(g1, &desk::random_screen(2 * index))?, desk::screened(g2, &desk::random_screen(2 * index + 1))?))
}

pub fn phase_cancellation_analytic(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(1, "phase cancellation, analytic image");
    let geom = desk::geometry(1.0);
    let p = desk::imaging_source();
    let (g1, g2) = imaging_pair();
    let reference = image_entangled_analytic(&g1, &g2, &p, &geom)?;
    b.digest.grid(&reference.rates);
    let mut worst = 0.0f64;
    for s in 0..tol.screens as u64 {
        let (a1, a2) = screened_pair(&g1, &g2, s)?;
        let map = image_entangled_analytic(&a1, &a2, &p, &geom)?;
        worst = worst.max(relative_max_error(&map.rates, &reference.rates));
        b.digest.grid(&map.rates);
    }
    b.metric("screens", tol.screens as f64);
    b.at_most("max_rel_error", worst, tol.analytic_phase);
    Ok(b.finish())
}

pub fn phase_cancellation_bruteforce(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(2, "phase cancellation, brute-force quadrature");
    let geom = desk::geometry(1.0);
    let p = desk::imaging_source();
    let (g1, g2) = imaging_pair();
    let reference = image_entangled_analytic(&g1, &g2, &p, &geom)?.peak_normalized();
    let opts = BruteForceOptions::default();
    let mut worst = 0.0f64;
    let mut vignetted = 0usize;
    for s in 0..tol.screens as u64 {
        let (a1, a2) = screened_pair(&g1, &g2, s)?;
        let map = image_entangled_bruteforce(&a1, &a2, &p, &geom, BOTH_LENSES, &opts)?;
        vignetted = vignetted.max(map.diagnostics.vignetted_bins);
        worst = worst.max(relative_max_error(&map.rates, &reference));
        b.digest.grid(&map.rates);
    }
    b.metric("screens", tol.screens as f64);
    b.metric("vignetted_bins", vignetted as f64);
    b.at_most("max_rel_error", worst, tol.bruteforce_phase);
    Ok(b.finish())
}

pub fn product_structure(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(3, "product structure");
    let geom = desk::geometry(1.0);
    let p = desk::imaging_source();
    let unit = ObjectMask::unit(desk::grid());

    let letter = desk::glyph('E', 700e-6, [-40e-6, 30e-6]);
    // Place the pinhole opposite a transmitting letter pixel so the product is nonzero.
    let spec = desk::grid();
    let lit = spec
        .pixels()
        .filter(|q| letter.amplitude()[[q.i, q.j]] > 0.0)
        .nth(17)
        .expect("letter has transmitting pixels");
    let opposite = spec.position(spec.reflect(lit));
    let pinhole = desk::mask(MaskShape::Pinhole { center: opposite });

    let pairs = [
        ("disk_slit", desk::disk(300e-6, [30e-6, -20e-6]), desk::mask(MaskShape::Slit { width: 120e-6, length: Some(900e-6), center: [0.0, 0.0] })),
        ("letter_pinhole", letter, pinhole),
    ];
    for (label, a, bm) in pairs {
        let joint = image_entangled_analytic(&a, &bm, &p, &geom)?;
        let left = image_entangled_analytic(&a, &unit, &p, &geom)?;
        let right = image_entangled_analytic(&unit, &bm, &p, &geom)?;
        let product = &left.rates * &right.rates / joint.norm;
        let nonzero = joint.rates.iter().filter(|&&v| v > 0.0).count();
        b.metric(&format!("{label}_lit_pixels"), nonzero as f64);
        b.holds(&format!("{label}_nonempty"), nonzero > 0);
        b.at_most(&format!("{label}_rel_error"), relative_max_error(&joint.rates, &product), tol.product);
        b.digest.grid(&joint.rates);
    }
    Ok(b.finish())
}

pub fn inversion_and_magnification(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(4, "ghost inversion and magnification");
    let p = desk::imaging_source();
    let unit = ObjectMask::unit(desk::grid());
    let letter = desk::glyph('F', 800e-6, [60e-6, -30e-6]);
    let geom = desk::geometry(1.0);
    let ghost = image_entangled_analytic(&unit, &letter, &p, &geom)?;
    let direct = image_entangled_analytic(&letter, &unit, &p, &geom)?;
    let mismatched = ghost.rates.iter().zip(reflect_grid(&direct.rates).iter()).filter(|(a, b)| a != b).count();
    b.metric("inversion_mismatched_pixels", mismatched as f64);
    b.holds("inversion_exact", mismatched == 0);
    b.holds("ghost_differs_from_direct", ghost.rates != direct.rates);
    b.digest.grid(&ghost.rates);

    let a = 300e-6;
    let disk = desk::disk(a, [0.0, 0.0]);
    for m in [0.5, 1.0, 2.0] {
        let geom = desk::geometry(m);
        let map = image_entangled_analytic(&disk, &unit, &p, &geom)?;
        let det = map.spec;
        let radius = det
            .pixels()
            .filter(|q| map.rates[[q.i, q.j]] > 0.0)
            .map(|q| {
                let x = det.position(q);
                x[0].hypot(x[1])
            })
            .fold(0.0f64, f64::max);
        let off = (radius - m * a).abs() / det.pitch();
        b.metric(&format!("m{m}_radius"), radius);
        b.at_most(&format!("m{m}_radius_error_px"), off, tol.magnification_pixels);
        b.digest.grid(&map.rates);
    }
    Ok(b.finish())
}

pub fn lens_asymmetry(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(5, "detection-lens asymmetry");
    let geom = desk::geometry(1.0);
    let source = SourceSpec::Spdc(desk::imaging_source());
    let g1 = desk::screened(&desk::disk(350e-6, [0.0, 40e-6]), &desk::random_screen(101))?;
    let g2 = desk::screened(&desk::glyph('G', 800e-6, [0.0, 0.0]), &desk::random_screen(102))?;
    let study = lens_study(&g1, &g2, &source, &geom, &[(true, true), (false, true), (true, false)], &BruteForceOptions::default())?;
    let both = study.entry(true, true).expect("reference entry");
    let no1 = study.entry(false, true).expect("branch-1 entry");
    let no2 = study.entry(true, false).expect("branch-2 entry");
    b.metric("both_lenses_cv", both.cv);
    b.at_most("branch1_removed_cv", no1.cv, tol.lens_cv);
    b.at_most("branch2_removed_rel_deviation", no2.deviation_from_both, tol.lens_branch2);
    for e in &study.entries {
        b.digest.grid(&e.map.rates);
    }
    Ok(b.finish())
}

pub fn bc_constancy(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(6, "B and C integrals independent of x1");
    let p = desk::imaging_source();
    let geom = desk::geometry(1.0);
    let det = geom.detector_grid(&desk::grid());
    let edge = det.coord(1);
    let points = bc_sample_points(edge, tol.bc_points);
    let scale = geom.k / geom.f_d;
    let bs: Vec<f64> = points.iter().map(|x| b_integral([scale * x[0], scale * x[1]], &p)).collect();
    let cs: Vec<Complex64> = points.iter().map(|x| c_integral([scale * x[0], scale * x[1]], &p)).collect();
    let b_mean = bs.iter().sum::<f64>() / bs.len() as f64;
    let c_mean = cs.iter().sum::<Complex64>() / cs.len() as f64;
    let b_spread = bs.iter().fold(0.0f64, |m, v| m.max((v - b_mean).abs())) / b_mean.abs();
    let c_spread = cs.iter().fold(0.0f64, |m, v| m.max((v - c_mean).norm())) / c_mean.norm();
    b.metric("points", points.len() as f64);
    b.metric("b_mean", b_mean);
    b.metric("c_mean_re", c_mean.re);
    b.metric("c_mean_im", c_mean.im);
    b.holds("enough_points", points.len() >= 5);
    b.at_most("b_rel_spread", b_spread, tol.bc_spread);
    b.at_most("c_rel_spread", c_spread, tol.bc_spread);
    b.digest.values(&bs);
    Ok(b.finish())
}

/// Center, then points along the axes and diagonals out to `edge` (negative values included).
fn bc_sample_points(edge: f64, count: usize) -> Vec<[f64; 2]> {
    let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let mut pts = vec![[0.0, 0.0]];
    let mut k = 0;
    while pts.len() < count {
        let d = dirs[k % dirs.len()];
        let frac = 1.0 - 0.25 * (k / dirs.len()) as f64;
        let r = edge.abs() * frac.max(0.1);
        pts.push([d[0] * r, d[1] * r]);
        k += 1;
    }
    pts
}

pub fn interferometer_dip(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(7, "interferometer dip");
    let geom = desk::geometry(1.0);
    let unit = ObjectMask::unit(desk::grid());
    let p0 = desk::interferometer_source(0.0);
    let dl = p0.dip_width();
    let taus = desk::tau_grid(&p0, tol.tau_steps);
    let scan = rate_scan(&taus, &unit, &unit, &p0, &geom)?;
    let outside = |t: f64| !(0.0..=dl).contains(&t);
    let baseline_exact = scan.taus.iter().zip(&scan.rates).filter(|(t, _)| outside(**t)).all(|(_, r)| *r == scan.r0);
    b.holds("baseline_exact_no_walkoff", baseline_exact);
    let summary = scan.summary();
    b.metric("dip_center_over_dl", summary.center / dl);
    b.metric("dip_depth", summary.depth);
    b.at_most("center_offset_over_dl", (summary.center / dl - 0.5).abs(), 1e-12);
    let w_center = ModulationKernel::new(&unit, &unit, &p0, &geom)?.w(0.5 * dl);
    b.at_most("w_center_error", (w_center - Complex64::new(1.0, 0.0)).norm(), tol.dip_w);
    b.digest.values(&scan.rates);

    // With walk-off and structured masks the dead zone is still exactly flat.
    let p = desk::interferometer_source(desk::INTERFEROMETER_WALKOFF);
    let g1 = desk::screened(&desk::disk(450e-6, [0.0, 0.0]), &desk::random_screen(201))?;
    let g2 = desk::glyph('P', 900e-6, [0.0, 0.0]);
    let scan = rate_scan(&desk::tau_grid(&p, tol.tau_steps), &g1, &g2, &p, &geom)?;
    let baseline_exact = scan.taus.iter().zip(&scan.rates).filter(|(t, _)| outside(**t)).all(|(_, r)| *r == scan.r0);
    b.holds("baseline_exact_with_walkoff", baseline_exact);
    b.holds("rates_nonnegative", scan.rates.iter().all(|&r| r >= 0.0));
    b.digest.values(&scan.rates);
    Ok(b.finish())
}

fn w_curve(g1: &ObjectMask, g2: &ObjectMask, geom: &OpticalGeometry, taus: &[f64]) -> Result<Vec<Complex64>> {
    let p = desk::interferometer_source(desk::INTERFEROMETER_WALKOFF);
    let k = ModulationKernel::new(g1, g2, &p, geom)?;
    Ok(taus.iter().map(|&t| k.w(t)).collect())
}

fn max_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn even_order_cancellation(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(8, "even-order cancellation in W");
    let geom = desk::geometry(1.0);
    let p = desk::interferometer_source(desk::INTERFEROMETER_WALKOFF);
    let taus = desk::tau_grid(&p, tol.tau_steps);
    let g1 = desk::disk(500e-6, [0.0, 0.0]);
    let g2 = desk::glyph('P', 900e-6, [30e-6, 0.0]);
    let reference = w_curve(&g1, &g2, &geom, &taus)?;
    b.digest.complex(&reference);

    let mut worst_even = 0.0f64;
    for s in 0..tol.screens as u64 {
        let a1 = desk::screened(&g1, &desk::random_even_screen(300 + 2 * s))?;
        let a2 = desk::screened(&g2, &desk::random_even_screen(301 + 2 * s))?;
        worst_even = worst_even.max(max_deviation(&w_curve(&a1, &a2, &geom, &taus)?, &reference));
    }
    b.at_most("even_screens_max_dev", worst_even, tol.even_w);

    let unit = ObjectMask::unit(desk::grid());
    let comaed = desk::screened(&g1, &desk::coma(1.0))?;
    let odd_dev = max_deviation(&w_curve(&comaed, &unit, &geom, &taus)?, &w_curve(&g1, &unit, &geom, &taus)?);
    b.at_least("coma_control_max_dev", odd_dev, tol.odd_control);

    let mut worst_common = 0.0f64;
    let common_ref = w_curve(&g2, &g2, &geom, &taus)?;
    for s in 0..tol.screens as u64 {
        let c = desk::screened(&g2, &desk::random_screen(400 + s))?;
        let w = w_curve(&c, &c, &geom, &taus)?;
        worst_common = worst_common.max(max_deviation(&w, &common_ref));
        b.digest.complex(&w);
    }
    b.at_most("common_mask_max_dev", worst_common, tol.even_w);
    b.metric("tau_points", taus.len() as f64);
    Ok(b.finish())
}

pub fn classical_source(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(9, "classical source");
    let geom = desk::geometry(1.0);
    let p = desk::imaging_source();
    let spec = desk::grid();
    let q_grid = geom.q_grid(&spec);
    let (g1, g2) = imaging_pair();
    let (a1, a2) = screened_pair(&g1, &g2, 500)?;

    let uniform = ClassicalSpectrum::uniform(q_grid)?;
    let classical = image_classical(&a1, &a2, &uniform, &geom)?.peak_normalized();
    let entangled = image_entangled_analytic(&a1, &a2, &p, &geom)?.peak_normalized();
    b.at_most("uniform_vs_entangled", relative_max_error(&classical, &entangled), tol.classical_uniform);
    b.digest.grid(&classical);

    // 200 um rms envelope in the detector plane.
    let sigma_q = 200e-6 * geom.k / geom.f_d;
    let gauss = ClassicalSpectrum::gaussian(q_grid, sigma_q)?;
    let unit = ObjectMask::unit(spec);
    let opts = BruteForceOptions::default();
    let det = geom.detector_grid(&spec);
    let envelope = Array2::from_shape_fn((det.n(), det.n()), |(i, j)| {
        gaussian_envelope(det.position(Pixel::new(i, j)), sigma_q, geom.k, geom.f_d)
    });
    let analytic_unit = image_classical(&unit, &unit, &gauss, &geom)?;
    b.at_most("gaussian_analytic_vs_closed_form", relative_max_error(&analytic_unit.peak_normalized(), &envelope), tol.classical_uniform);
    let brute_unit = image_classical_bruteforce(&unit, &unit, &gauss, &geom, BOTH_LENSES, &opts)?;
    b.at_most("gaussian_bruteforce_vs_envelope", relative_max_error(&brute_unit.rates, &envelope), tol.classical_gaussian);

    let analytic = image_classical(&a1, &a2, &gauss, &geom)?.peak_normalized();
    let brute = image_classical_bruteforce(&a1, &a2, &gauss, &geom, BOTH_LENSES, &opts)?;
    b.at_most("gaussian_masked_bruteforce_vs_analytic", relative_max_error(&brute.rates, &analytic), tol.classical_gaussian);
    b.metric("envelope_width", sigma_q * geom.f_d / geom.k);
    b.digest.grid(&brute.rates);
    Ok(b.finish())
}

pub fn correlator(tol: &Tolerances) -> Result<CriterionResult> {
    let mut b = Builder::new(10, "bucket-bucket correlator");
    let m = 2.0;
    let geom = desk::geometry(m);
    let spec = desk::grid();
    let det = geom.detector_grid(&spec);
    let source = SourceSpec::Spdc(desk::imaging_source());
    let letter = desk::glyph('J', 500e-6, [20e-6, 0.0]);
    let pinhole = desk::mask(MaskShape::Pinhole { center: [0.0, 0.0] });
    let shifts = square_scan(0.6e-3, 13);

    let scan = correlate_scan(&letter, &pinhole, &shifts, &source, &geom, true)?;
    let intensity = letter.intensity();
    let (mut diff, mut peak) = (0.0f64, 0.0f64);
    for pt in &scan.points {
        // Object pixel at r / m.
        let o = spec.shifted(spec.center(), pt.shift[0], pt.shift[1]).expect("scan stays on grid");
        let expect = intensity[[o.i, o.j]];
        diff = diff.max((pt.g - expect).abs());
        peak = peak.max(expect.abs());
    }
    b.holds("pinhole_scan_hits_letter", peak > 0.0);
    b.at_most("pinhole_recovers_object", if peak > 0.0 { diff / peak } else { f64::INFINITY }, tol.correlator);

    let g1 = desk::disk(200e-6, [-40e-6, 60e-6]);
    let g2 = desk::glyph('L', 600e-6, [30e-6, 0.0]);
    let mut worst_phase = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for deinvert in [true, false] {
        let plain = correlate_scan(&g1, &g2, &shifts, &source, &geom, deinvert)?;
        let gs: Vec<f64> = plain.points.iter().map(|p| p.g).collect();
        let (s1, s2) = screened_pair(&g1, &g2, 600 + deinvert as u64)?;
        let phased: Vec<f64> = correlate_scan(&s1, &s2, &shifts, &source, &geom, deinvert)?.points.iter().map(|p| p.g).collect();
        worst_phase = worst_phase.max(rel_dev(&phased, &gs));

        let i2 = if deinvert { g2.intensity() } else { reflect_grid(&g2.intensity()) };
        let oracle = fft_cross_correlation(&g1.intensity(), &i2);
        let n = det.n() as isize;
        let reference: Vec<f64> = plain
            .points
            .iter()
            .map(|p| oracle[[(p.shift[0] + n - 1) as usize, (p.shift[1] + n - 1) as usize]])
            .collect();
        worst_oracle = worst_oracle.max(rel_dev(&gs, &reference));
        b.digest.values(&gs);
    }
    b.at_most("phase_screens_rel_dev", worst_phase, tol.correlator);
    b.at_most("fft_oracle_rel_dev", worst_oracle, tol.correlator);
    b.metric("scan_points", shifts.len() as f64);
    Ok(b.finish())
}

fn rel_dev(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(reference).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub(crate) struct DeterminismBuilder {
    b: Builder,
    notes: Vec<String>,
}

pub(crate) fn determinism_builder() -> DeterminismBuilder {
    DeterminismBuilder { b: Builder::new(11, "determinism across thread counts"), notes: Vec::new() }
}

impl DeterminismBuilder {
    pub(crate) fn record(&mut self, base: usize, threads: usize, identical: bool, difference: &str) {
        self.b.holds(&format!("identical_{base}_vs_{threads}_threads"), identical);
        if !identical {
            self.notes.push(difference.to_string());
        }
    }

    pub(crate) fn finish(mut self, counts: &[usize]) -> CriterionResult {
        self.b.metric("runs", counts.len() as f64);
        self.b.holds("multiple_thread_counts", counts.len() >= 2);
        let mut r = self.b.finish();
        if !self.notes.is_empty() {
            r.detail = format!("{}; {}", r.detail, self.notes.join("; "));
        }
        r
    }
}
