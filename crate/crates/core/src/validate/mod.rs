//! Acceptance suite: every closed-form prediction checked against an
//! independent computation at desk scale, plus a determinism check across
//! thread counts.

pub mod criteria;
pub mod desk;
pub mod oracle;

use std::collections::BTreeMap;
use std::hash::Hasher;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pass thresholds and suite sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub analytic_phase: f64,
    pub bruteforce_phase: f64,
    pub product: f64,
    pub magnification_pixels: f64,
    pub lens_cv: f64,
    pub lens_branch2: f64,
    pub bc_spread: f64,
    pub dip_w: f64,
    pub even_w: f64,
    /// Minimum deviation the odd-screen positive control must show.
    pub odd_control: f64,
    pub classical_uniform: f64,
    pub classical_gaussian: f64,
    pub correlator: f64,
    pub screens: usize,
    pub bc_points: usize,
    pub tau_steps: usize,
    pub thread_counts: Vec<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            analytic_phase: 1e-12,
            bruteforce_phase: 1e-3,
            product: 1e-12,
            magnification_pixels: 1.0,
            lens_cv: 1e-6,
            lens_branch2: 1e-6,
            bc_spread: 1e-6,
            dip_w: 1e-10,
            even_w: 1e-10,
            odd_control: 1e-3,
            classical_uniform: 1e-12,
            classical_gaussian: 1e-2,
            correlator: 1e-12,
            screens: 20,
            bc_points: 9,
            tau_steps: 101,
            thread_counts: vec![1, 2, 8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    /// Hash of the raw outputs behind the metrics.
    pub digest: String,
    pub detail: String,
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl CriterionResult {
    /// One-line summary: `PASS  3 product structure (0.12 s): ...`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub version: String,
    pub tolerances: Tolerances,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failed(&self) -> impl Iterator<Item = &CriterionResult> {
        self.criteria.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Order-sensitive hash over the exact bit patterns of computed values.
#[derive(Default)]
pub(crate) struct Digest(std::hash::DefaultHasher);

impl Digest {
    pub(crate) fn values(&mut self, v: &[f64]) {
        for x in v {
            self.0.write_u64(x.to_bits());
        }
    }

    pub(crate) fn grid(&mut self, a: &Array2<f64>) {
        for x in a.iter() {
            self.0.write_u64(x.to_bits());
        }
    }

    pub(crate) fn complex(&mut self, v: &[Complex64]) {
        for z in v {
            self.0.write_u64(z.re.to_bits());
            self.0.write_u64(z.im.to_bits());
        }
    }

    pub(crate) fn hex(&self) -> String {
        format!("{:016x}", self.0.finish())
    }
}

type Check = fn(&Tolerances) -> Result<CriterionResult>;

/// The ten physics criteria, in order. Determinism (11) wraps them.
pub const CHECKS: [(u8, Check); 10] = [
    (1, criteria::phase_cancellation_analytic),
    (2, criteria::phase_cancellation_bruteforce),
    (3, criteria::product_structure),
    (4, criteria::inversion_and_magnification),
    (5, criteria::lens_asymmetry),
    (6, criteria::bc_constancy),
    (7, criteria::interferometer_dip),
    (8, criteria::even_order_cancellation),
    (9, criteria::classical_source),
    (10, criteria::correlator),
];

/// Runs one physics criterion, timing it. Errors become failures.
pub fn run_criterion(id: u8, tol: &Tolerances) -> Result<CriterionResult> {
    let (_, check) = CHECKS
        .iter()
        .find(|(i, _)| *i == id)
        .ok_or_else(|| Error::Config(format!("no criterion {id}; physics criteria are 1..=10")))?;
    let start = Instant::now();
    let mut r = match check(tol) {
        Ok(r) => r,
        Err(e) => CriterionResult {
            id,
            name: format!("criterion {id}"),
            passed: false,
            metrics: BTreeMap::new(),
            digest: String::new(),
            detail: format!("error: {e}"),
            elapsed_s: 0.0,
        },
    };
    r.elapsed_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn run_physics(tol: &Tolerances, threads: usize) -> Result<Vec<CriterionResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("cannot build a {threads}-thread pool: {e}")))?;
    pool.install(|| CHECKS.iter().map(|(id, _)| run_criterion(*id, tol)).collect())
}

/// Runs criteria 1 to 10 once per configured thread count and compares the
/// serialized results; reports the first run plus the determinism verdict.
pub fn run_all(tol: &Tolerances) -> Result<ValidationReport> {
    run_all_with(tol, |_| {})
}

/// As [`run_all`], calling `progress` after each physics criterion of the first run.
pub fn run_all_with(tol: &Tolerances, mut progress: impl FnMut(&CriterionResult)) -> Result<ValidationReport> {
    let counts = if tol.thread_counts.is_empty() { vec![1] } else { tol.thread_counts.clone() };
    let first_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(counts[0])
        .build()
        .map_err(|e| Error::Resource(format!("cannot build a {}-thread pool: {e}", counts[0])))?;
    let mut criteria = Vec::with_capacity(11);
    for (id, _) in CHECKS.iter() {
        let r = first_pool.install(|| run_criterion(*id, tol))?;
        progress(&r);
        criteria.push(r);
    }

    let start = Instant::now();
    let reference = serde_json::to_string(&criteria).expect("results serialize");
    let mut det = criteria::determinism_builder();
    for &t in &counts[1..] {
        let again = serde_json::to_string(&run_physics(tol, t)?).expect("results serialize");
        det.record(counts[0], t, again == reference, &first_difference(&reference, &again));
    }
    let mut r11 = det.finish(&counts);
    r11.elapsed_s = start.elapsed().as_secs_f64();
    progress(&r11);
    criteria.push(r11);

    let passed = criteria.iter().all(|c| c.passed);
    Ok(ValidationReport { version: env!("CARGO_PKG_VERSION").to_string(), tolerances: tol.clone(), criteria, passed })
}

fn first_difference(a: &str, b: &str) -> String {
    let at = a.bytes().zip(b.bytes()).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
    let lo = at.saturating_sub(40);
    let snippet = |s: &str| s.get(lo..(at + 40).min(s.len())).unwrap_or("").to_string();
    if a == b {
        String::new()
    } else {
        format!("first difference near byte {at}: '{}' vs '{}'", snippet(a), snippet(b))
    }
}
