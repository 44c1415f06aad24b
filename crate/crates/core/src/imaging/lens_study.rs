use serde::Serialize;

use super::bruteforce::{image_classical_bruteforce, image_entangled_bruteforce, BruteForceOptions, LensModes};
use super::geometry::OpticalGeometry;
use super::map::{relative_max_error, CoincidenceMap};
use super::transfer::LensMode;
use crate::error::Result;
use crate::fields::ObjectMask;
use crate::sources::SourceSpec;

#[derive(Clone, Debug, Serialize)]
pub struct LensStudyEntry {
    pub branch1_lens: bool,
    pub branch2_lens: bool,
    /// Coefficient of variation of the map over the detector.
    pub cv: f64,
    /// Max deviation from the two-lens map, relative to its peak (both peak-normalized).
    pub deviation_from_both: f64,
    #[serde(skip)]
    pub map: CoincidenceMap,
}

#[derive(Clone, Debug, Serialize)]
pub struct LensStudy {
    pub entries: Vec<LensStudyEntry>,
}

impl LensStudy {
    pub fn entry(&self, branch1_lens: bool, branch2_lens: bool) -> Option<&LensStudyEntry> {
        self.entries.iter().find(|e| e.branch1_lens == branch1_lens && e.branch2_lens == branch2_lens)
    }
}

pub fn bruteforce_map(
    g1: &ObjectMask,
    g2: &ObjectMask,
    source: &SourceSpec,
    geom: &OpticalGeometry,
    modes: LensModes,
    opts: &BruteForceOptions,
) -> Result<CoincidenceMap> {
    match source {
        SourceSpec::Spdc(p) => image_entangled_bruteforce(g1, g2, p, geom, modes, opts),
        SourceSpec::Classical(s) => image_classical_bruteforce(g1, g2, s, geom, modes, opts),
    }
}

/// Brute-force maps for each requested (branch 1 lens, branch 2 lens) setting.
/// The two-lens configuration is always computed as the reference.
pub fn lens_study(
    g1: &ObjectMask,
    g2: &ObjectMask,
    source: &SourceSpec,
    geom: &OpticalGeometry,
    configs: &[(bool, bool)],
    opts: &BruteForceOptions,
) -> Result<LensStudy> {
    let modes = |a: bool, b: bool| (LensMode::from_flag(a), LensMode::from_flag(b));
    let reference = bruteforce_map(g1, g2, source, geom, modes(true, true), opts)?;
    let ref_norm = reference.peak_normalized();
    let mut entries = Vec::with_capacity(configs.len());
    for &(a, b) in configs {
        let map = if (a, b) == (true, true) {
            reference.clone()
        } else {
            bruteforce_map(g1, g2, source, geom, modes(a, b), opts)?
        };
        entries.push(LensStudyEntry {
            branch1_lens: a,
            branch2_lens: b,
            cv: map.coefficient_of_variation(),
            deviation_from_both: relative_max_error(&map.peak_normalized(), &ref_norm),
            map,
        });
    }
    Ok(LensStudy { entries })
}
