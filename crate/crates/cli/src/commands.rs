//! Experiment runners behind the subcommands.

use std::collections::BTreeMap;

use ghostsim_core::fields::{decompose_parity, ObjectMask};
use ghostsim_core::imaging::{
    bruteforce_map, correlate_scan, image_classical, image_entangled_analytic, lens_study, relative_max_error,
    square_scan, CoincidenceMap, LensMode,
};
use ghostsim_core::interferometer::{background_r0, linspace, rate_scan, ModulationKernel};
use ghostsim_core::sources::SourceSpec;
use ghostsim_core::validate::{run_all_with, Tolerances, ValidationReport};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::OutDir;
use crate::scenario::{Assertion, Experiment, ImagePath, Scenario};

pub type Metrics = BTreeMap<String, f64>;

#[derive(Clone, Debug, Serialize)]
pub struct AssertionOutcome {
    #[serde(flatten)]
    pub assertion: Assertion,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub experiment: &'static str,
    pub metrics: Metrics,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
    pub files: Vec<String>,
}

/// Command-line overrides for the image experiment.
#[derive(Clone, Debug, Default)]
pub struct ImageOptions {
    pub path: Option<ImagePath>,
    pub branch1_lens: Option<bool>,
    pub branch2_lens: Option<bool>,
    pub png: bool,
}

#[derive(Clone, Debug, Default)]
pub struct InterfereOptions {
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct CorrelateOptions {
    pub scan: Option<(f64, usize)>,
    pub deinvert: bool,
}

fn analytic(s: &Scenario, g1: &ObjectMask, g2: &ObjectMask) -> CliResult<CoincidenceMap> {
    Ok(match &s.source {
        SourceSpec::Spdc(p) => image_entangled_analytic(g1, g2, p, &s.geometry)?,
        SourceSpec::Classical(f) => image_classical(g1, g2, f, &s.geometry)?,
    })
}

/// `image(A, 1) * image(1, B) / image(1, 1)`, zero where the unit map vanishes.
fn factorized(s: &Scenario) -> CliResult<Array2<f64>> {
    let unit = ObjectMask::unit(s.grid);
    let left = analytic(s, &s.mask1, &unit)?.rates;
    let right = analytic(s, &unit, &s.mask2)?.rates;
    let both = analytic(s, &unit, &unit)?.rates;
    Ok(ndarray::Zip::from(&left).and(&right).and(&both).map_collect(|&a, &b, &u| if u > 0.0 { a * b / u } else { 0.0 }))
}

pub fn image(s: &Scenario, opts: &ImageOptions, out: &mut OutDir) -> CliResult<Metrics> {
    let path = opts.path.unwrap_or(s.image.path);
    let lens1 = opts.branch1_lens.unwrap_or(s.image.branch1_lens);
    let lens2 = opts.branch2_lens.unwrap_or(s.image.branch2_lens);
    let mut m = Metrics::new();

    let reference = analytic(s, &s.mask1.phase_free(), &s.mask2.phase_free())?;
    if matches!(path, ImagePath::Analytic | ImagePath::Both) {
        if !lens1 {
            return Err(CliError::Parse(
                "the analytic image assumes the branch-1 detection lens; use --path bruteforce to study its removal".into(),
            ));
        }
        let map = analytic(s, &s.mask1, &s.mask2)?;
        m.insert("analytic_max".into(), map.max());
        m.insert("analytic_norm".into(), map.norm);
        m.insert("analytic_cv".into(), map.coefficient_of_variation());
        m.insert("phase_cancellation_residual".into(), relative_max_error(&map.rates, &reference.rates));
        m.insert("product_structure_residual".into(), relative_max_error(&map.rates, &factorized(s)?));
        out.pgm("map_analytic.pgm", &map.rates, &[format!("analytic map, peak {:e}", map.max())])?;
        if opts.png {
            out.png("map_analytic.png", &map.rates)?;
        }
    }
    if matches!(path, ImagePath::Bruteforce | ImagePath::Both) {
        let modes = (LensMode::from_flag(lens1), LensMode::from_flag(lens2));
        let map = bruteforce_map(&s.mask1, &s.mask2, &s.source, &s.geometry, modes, &s.bruteforce)?;
        m.insert("bruteforce_scale".into(), map.scale);
        m.insert("bruteforce_cv".into(), map.coefficient_of_variation());
        m.insert("bruteforce_vignetted_bins".into(), map.diagnostics.vignetted_bins as f64);
        if lens1 {
            m.insert(
                "phase_cancellation_residual_bruteforce".into(),
                relative_max_error(&map.rates, &reference.peak_normalized()),
            );
        }
        let label = format!("brute-force map, branch lenses {}/{}", on_off(lens1), on_off(lens2));
        out.pgm("map_bruteforce.pgm", &map.rates, &[label])?;
        if opts.png {
            out.png("map_bruteforce.png", &map.rates)?;
        }
    }
    Ok(m)
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Masks with the even part of their phase removed.
fn odd_only(m: &ObjectMask) -> CliResult<ObjectMask> {
    let (_, odd) = decompose_parity(m.phase());
    Ok(m.clone().with_phase(odd)?)
}

pub fn interfere(s: &Scenario, opts: &InterfereOptions, out: &mut OutDir) -> CliResult<Metrics> {
    let p = s.spdc()?;
    let dl = p.dip_width();
    let lo = opts.tau_min.or(s.interfere.tau_min).unwrap_or(-0.5 * dl);
    let hi = opts.tau_max.or(s.interfere.tau_max).unwrap_or(1.5 * dl);
    let steps = opts.steps.unwrap_or(s.interfere.steps);
    if steps < 2 || !(hi > lo) {
        return Err(CliError::Parse(format!("delay scan needs tau_max > tau_min and at least 2 steps (got [{lo:e}, {hi:e}], {steps})")));
    }
    let taus = linspace(lo, hi, steps);
    let scan = rate_scan(&taus, &s.mask1, &s.mask2, p, &s.geometry)?;
    let summary = scan.summary();
    let step = (hi - lo) / (steps - 1) as f64;

    let mut m = Metrics::new();
    m.insert("r0".into(), scan.r0);
    m.insert("dip_full_width".into(), dl);
    m.insert("dip_center".into(), summary.center);
    m.insert("dip_depth".into(), summary.depth);
    m.insert("dip_width".into(), summary.width);
    m.insert("dip_width_error_steps".into(), (summary.width - dl).abs() / step);
    let baseline = scan
        .taus
        .iter()
        .zip(&scan.rates)
        .filter(|(t, _)| !(0.0..=dl).contains(*t))
        .fold(0.0f64, |a, (_, r)| a.max((r - scan.r0).abs()));
    m.insert("baseline_residual".into(), if scan.r0 > 0.0 { baseline / scan.r0 } else { baseline });
    let r0_free = background_r0(&s.mask1.phase_free(), &s.mask2.phase_free(), &s.geometry)?;
    m.insert("r0_phase_residual".into(), (scan.r0 - r0_free).abs() / r0_free);

    let w_of = |a: &ObjectMask, b: &ObjectMask| -> CliResult<Vec<Complex64>> {
        let k = ModulationKernel::new(a, b, p, &s.geometry)?;
        Ok(taus.iter().map(|&t| k.w(t)).collect())
    };
    let dev = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let odd = w_of(&odd_only(&s.mask1)?, &odd_only(&s.mask2)?)?;
    let free = w_of(&s.mask1.phase_free(), &s.mask2.phase_free())?;
    m.insert("even_phase_residual".into(), dev(&scan.w, &odd));
    m.insert("phase_deviation".into(), dev(&scan.w, &free));

    let rows: Vec<Vec<f64>> = scan.taus.iter().zip(&scan.rates).zip(&scan.w).map(|((&t, &r), w)| vec![t, r, w.re, w.im]).collect();
    out.csv("tau_scan.csv", &["tau", "R", "ReW", "ImW"], &rows)?;
    Ok(m)
}

pub fn correlate(s: &Scenario, opts: &CorrelateOptions, out: &mut OutDir) -> CliResult<Metrics> {
    let (rmax, steps) = match (opts.scan, s.correlate.rmax, s.correlate.steps) {
        (Some(scan), _, _) => scan,
        (None, Some(r), Some(n)) => (r, n),
        _ => return Err(CliError::Parse("correlate needs --scan rmax,steps or [correlate] rmax and steps".into())),
    };
    let deinvert = opts.deinvert || s.correlate.deinvert;
    let shifts = square_scan(rmax, steps);
    let scan = correlate_scan(&s.mask1, &s.mask2, &shifts, &s.source, &s.geometry, deinvert)?;
    let free = correlate_scan(&s.mask1.phase_free(), &s.mask2.phase_free(), &shifts, &s.source, &s.geometry, deinvert)?;

    let g: Vec<f64> = scan.points.iter().map(|p| p.g).collect();
    let gf: Vec<f64> = free.points.iter().map(|p| p.g).collect();
    let peak = gf.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let diff = g.iter().zip(&gf).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let best = scan.points.iter().fold(None::<&ghostsim_core::imaging::CorrelationPoint>, |b, p| match b {
        Some(q) if q.g >= p.g => Some(q),
        _ => Some(p),
    });

    let mut m = Metrics::new();
    m.insert("norm".into(), scan.norm);
    m.insert("g_max".into(), best.map_or(0.0, |p| p.g));
    m.insert("g_argmax_rx".into(), best.map_or(0.0, |p| p.r[0]));
    m.insert("g_argmax_ry".into(), best.map_or(0.0, |p| p.r[1]));
    m.insert("phase_cancellation_residual".into(), if peak > 0.0 { diff / peak } else { diff });
    m.insert("deinvert".into(), if deinvert { 1.0 } else { 0.0 });
    let rows: Vec<Vec<f64>> = scan.points.iter().map(|p| vec![p.r[0], p.r[1], p.g]).collect();
    out.csv("correlation.csv", &["rx", "ry", "g"], &rows)?;
    Ok(m)
}

pub fn lens_study_cmd(s: &Scenario, png: bool, out: &mut OutDir) -> CliResult<Metrics> {
    let configs = [(true, true), (false, true), (true, false), (false, false)];
    let study = lens_study(&s.mask1, &s.mask2, &s.source, &s.geometry, &configs, &s.bruteforce)?;
    let mut m = Metrics::new();
    for e in &study.entries {
        let tag = format!("lens1_{}_lens2_{}", on_off(e.branch1_lens), on_off(e.branch2_lens));
        m.insert(format!("{tag}_cv"), e.cv);
        m.insert(format!("{tag}_deviation"), e.deviation_from_both);
        out.pgm(&format!("{tag}.pgm"), &e.map.rates, &[format!("brute-force map, {tag}")])?;
        if png {
            out.png(&format!("{tag}.png"), &e.map.rates)?;
        }
    }
    Ok(m)
}

pub fn check_assertions(s: &Scenario, metrics: &Metrics) -> CliResult<Vec<AssertionOutcome>> {
    s.assertions
        .iter()
        .map(|a| {
            let value = *metrics.get(&a.metric).ok_or_else(|| {
                let known: Vec<&str> = metrics.keys().map(String::as_str).collect();
                CliError::Parse(format!("assertion names unknown metric '{}'; available: {}", a.metric, known.join(", ")))
            })?;
            let passed = !value.is_nan() && a.max.is_none_or(|x| value <= x) && a.min.is_none_or(|x| value >= x);
            Ok(AssertionOutcome { assertion: a.clone(), value, passed })
        })
        .collect()
}

pub fn experiment_name(e: Experiment) -> &'static str {
    match e {
        Experiment::Image => "image",
        Experiment::Interfere => "interfere",
        Experiment::Correlate => "correlate",
        Experiment::LensStudy => "lens-study",
    }
}

/// Writes `summary.json` and turns failed assertions into an error.
pub fn finish(s: &Scenario, experiment: Experiment, metrics: Metrics, out: &mut OutDir) -> CliResult<Summary> {
    let assertions = check_assertions(s, &metrics)?;
    let failed = assertions.iter().filter(|a| !a.passed).count();
    let mut files: Vec<String> =
        out.written().iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    files.push("summary.json".into());
    let summary = Summary { experiment: experiment_name(experiment), metrics, passed: failed == 0, assertions, files };
    out.json("summary.json", &summary)?;
    if failed > 0 {
        for a in summary.assertions.iter().filter(|a| !a.passed) {
            log::error!("assertion failed: {} = {:e} (min {:?}, max {:?})", a.assertion.metric, a.value, a.assertion.min, a.assertion.max);
        }
        return Err(CliError::Assertions { failed, total: summary.assertions.len() });
    }
    Ok(summary)
}

pub fn validate(progress: impl FnMut(&ghostsim_core::validate::CriterionResult)) -> CliResult<ValidationReport> {
    Ok(run_all_with(&Tolerances::default(), progress)?)
}

