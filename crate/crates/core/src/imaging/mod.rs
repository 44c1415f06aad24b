//! Coincidence imaging: closed-form and brute-force maps, classical sources,
//! the bucket-bucket correlator and the detection-lens study.

pub mod analytic;
pub mod bruteforce;
pub mod correlate;
pub mod geometry;
pub mod lens_study;
pub mod map;
pub mod transfer;

pub use analytic::{image_classical, image_classical_on, image_entangled_analytic, image_entangled_analytic_on};
pub use bruteforce::{image_classical_bruteforce, image_entangled_bruteforce, BruteForceOptions, LensModes, BOTH_LENSES};
pub use correlate::{correlate_scan, square_scan, CorrelationPoint, CorrelationScan};
pub use geometry::OpticalGeometry;
pub use lens_study::{bruteforce_map, lens_study, LensStudy, LensStudyEntry};
pub use map::{coefficient_of_variation, peak_normalize, relative_max_error, CoincidenceMap, ComputationPath, MapDiagnostics};
pub use transfer::{Branch, BranchTransfer, LensMode};
