//! Scenario files: TOML documents describing one experiment.
//!
//! See `docs/scenario-format.md` for the schema.

use std::fs;
use std::path::{Path, PathBuf};

use ghostsim_core::fields::{GridSpec, MaskShape, ObjectMask, Parity, PhaseScreen, ZernikeMode};
use ghostsim_core::imaging::{BruteForceOptions, OpticalGeometry};
use ghostsim_core::io::{mask_from_pgm, read_raw_grid};
use ghostsim_core::sources::{ClassicalSpectrum, SourceSpec, SpdcParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Image,
    Interfere,
    Correlate,
    LensStudy,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    seed: u64,
    experiment: Experiment,
    grid: GridSection,
    geometry: GeometrySection,
    source: SourceSection,
    mask1: toml::Table,
    mask2: toml::Table,
    #[serde(default)]
    image: ImageSection,
    #[serde(default)]
    interfere: InterfereSection,
    #[serde(default)]
    correlate: CorrelateSection,
    #[serde(default)]
    bruteforce: BruteForceSection,
    #[serde(default, rename = "assert")]
    assertions: Vec<Assertion>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: usize,
    pitch: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    f: f64,
    /// Detection-lens focal length; alternatively `magnification`.
    f_d: Option<f64>,
    magnification: Option<f64>,
    d1: f64,
    d2: f64,
    /// Longitudinal wavenumber; alternatively `wavelength`.
    k: Option<f64>,
    wavelength: Option<f64>,
    pupil_radius1: Option<f64>,
    pupil_radius2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SourceSection {
    Spdc {
        #[serde(rename = "L")]
        crystal_length: f64,
        #[serde(rename = "D")]
        delay_mismatch: f64,
        #[serde(rename = "M", default)]
        walkoff: f64,
        k_pump: Option<f64>,
        omega0: Option<f64>,
        bandwidth: f64,
        n_nu: usize,
    },
    Classical {
        #[serde(rename = "F")]
        spectrum: SpectrumSection,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
enum SpectrumSection {
    Uniform,
    Gaussian {
        sigma_q: f64,
    },
    /// Real `F(q)` samples as a raw grid on the momentum grid.
    File {
        path: PathBuf,
        header: Option<PathBuf>,
        #[serde(default = "yes")]
        even: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
enum MaskGenerator {
    Unit,
    Opaque,
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Slit {
        width: f64,
        length: Option<f64>,
        #[serde(default)]
        center: [f64; 2],
    },
    Pinhole {
        #[serde(default)]
        center: [f64; 2],
    },
    Glyph {
        letter: char,
        height: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Amplitude from a graymap file.
    Letter {
        path: PathBuf,
    },
    /// Identical to mask 1, phase included (`mask2` only).
    Copy,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseSection {
    #[serde(default)]
    modes: Vec<ModeWeight>,
    radius: Option<f64>,
    random: Option<RandomScreen>,
    /// Raw phase grid (radians) added to the rendered modes.
    raw: Option<PathBuf>,
    header: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeWeight {
    mode: Option<String>,
    n: Option<u32>,
    m: Option<i32>,
    weight: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParityFilter {
    #[default]
    Mixed,
    Even,
    Odd,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomScreen {
    max_degree: u32,
    max_weight: f64,
    #[serde(default)]
    parity: ParityFilter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ImagePath {
    #[default]
    Analytic,
    Bruteforce,
    Both,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSection {
    #[serde(default)]
    pub path: ImagePath,
    #[serde(default = "yes")]
    pub branch1_lens: bool,
    #[serde(default = "yes")]
    pub branch2_lens: bool,
}

impl Default for ImageSection {
    fn default() -> Self {
        Self { path: ImagePath::Analytic, branch1_lens: true, branch2_lens: true }
    }
}

/// Delay scan; bounds default to `[-DL/2, 3DL/2]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfereSection {
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    101
}

impl Default for InterfereSection {
    fn default() -> Self {
        Self { tau_min: None, tau_max: None, steps: default_steps() }
    }
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSection {
    pub rmax: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default)]
    pub deinvert: bool,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BruteForceSection {
    max_work: Option<f64>,
}

/// In-scenario check on a named output metric.
#[derive(Clone, Debug, Deserialize, PartialEq, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    pub max: Option<f64>,
    pub min: Option<f64>,
}

/// A fully resolved scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub path: PathBuf,
    pub sha256: String,
    pub seed: u64,
    pub experiment: Experiment,
    pub grid: GridSpec,
    pub geometry: OpticalGeometry,
    pub source: SourceSpec,
    pub mask1: ObjectMask,
    pub mask2: ObjectMask,
    pub image: ImageSection,
    pub interfere: InterfereSection,
    pub correlate: CorrelateSection,
    pub bruteforce: BruteForceOptions,
    pub assertions: Vec<Assertion>,
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Parse(format!("{}: not valid UTF-8", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut s = Self::parse(&text, &base).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        s.path = path.to_path_buf();
        s.sha256 = hex(&Sha256::digest(&bytes));
        Ok(s)
    }

    /// Parses scenario text; relative file references resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let grid = GridSpec::new(raw.grid.n, raw.grid.pitch)?;
        let geometry = build_geometry(&raw.geometry)?;
        let source = build_source(&raw.source, &geometry, &grid, base)?;
        let mask1 = build_mask("mask1", &raw.mask1, grid, raw.seed, 1, None, base)?;
        let mask2 = build_mask("mask2", &raw.mask2, grid, raw.seed, 2, Some(&mask1), base)?;
        for a in &raw.assertions {
            if a.max.is_none() && a.min.is_none() {
                return Err(CliError::Parse(format!("assertion on '{}' needs max or min", a.metric)));
            }
        }
        let mut bruteforce = BruteForceOptions::default();
        if let Some(w) = raw.bruteforce.max_work {
            bruteforce.max_work = w;
        }
        Ok(Self {
            path: PathBuf::new(),
            sha256: hex(&Sha256::digest(text.as_bytes())),
            seed: raw.seed,
            experiment: raw.experiment,
            grid,
            geometry,
            source,
            mask1,
            mask2,
            image: raw.image,
            interfere: raw.interfere,
            correlate: raw.correlate,
            bruteforce,
            assertions: raw.assertions,
        })
    }

    pub fn spdc(&self) -> CliResult<&SpdcParams> {
        match &self.source {
            SourceSpec::Spdc(p) => Ok(p),
            SourceSpec::Classical(_) => Err(CliError::Parse("this experiment needs an spdc source".into())),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn one_of(what: &str, a: (&str, Option<f64>), b: (&str, Option<f64>)) -> CliResult<(bool, f64)> {
    match (a.1, b.1) {
        (Some(x), None) => Ok((true, x)),
        (None, Some(y)) => Ok((false, y)),
        _ => Err(CliError::Parse(format!("{what}: give exactly one of `{}` and `{}`", a.0, b.0))),
    }
}

fn build_geometry(g: &GeometrySection) -> CliResult<OpticalGeometry> {
    let (is_k, v) = one_of("geometry", ("k", g.k), ("wavelength", g.wavelength))?;
    let k = if is_k { v } else { 2.0 * std::f64::consts::PI / v };
    let (is_fd, v) = one_of("geometry", ("f_d", g.f_d), ("magnification", g.magnification))?;
    let f_d = if is_fd { v } else { v * g.f };
    let mut geom = OpticalGeometry::new(g.f, f_d, g.d1, g.d2, k)?;
    if let Some(r) = g.pupil_radius1 {
        geom.pupil_radius1 = r;
    }
    if let Some(r) = g.pupil_radius2 {
        geom.pupil_radius2 = r;
    }
    geom.validate()?;
    if geom.has_finite_pupils() {
        log::warn!("finite detection pupils are experimental");
    }
    Ok(geom)
}

fn build_source(s: &SourceSection, geom: &OpticalGeometry, grid: &GridSpec, base: &Path) -> CliResult<SourceSpec> {
    Ok(match s {
        &SourceSection::Spdc { crystal_length, delay_mismatch, walkoff, k_pump, omega0, bandwidth, n_nu } => {
            let p = SpdcParams {
                crystal_length,
                delay_mismatch,
                walkoff,
                // Degenerate collinear pump.
                k_pump: k_pump.unwrap_or(2.0 * geom.k),
                omega0: omega0.unwrap_or(SPEED_OF_LIGHT * geom.k),
                bandwidth,
                n_nu,
            };
            p.validate()?;
            SourceSpec::Spdc(p)
        }
        SourceSection::Classical { spectrum } => {
            let q_grid = geom.q_grid(grid);
            let f = match spectrum {
                SpectrumSection::Uniform => ClassicalSpectrum::uniform(q_grid)?,
                SpectrumSection::Gaussian { sigma_q } => ClassicalSpectrum::gaussian(q_grid, *sigma_q)?,
                SpectrumSection::File { path, header, even } => {
                    let data = base.join(path);
                    let header = header.as_ref().map(|h| base.join(h));
                    let values = read_raw_grid(&data, header.as_deref(), &q_grid)?;
                    ClassicalSpectrum::from_real(q_grid, values, *even)?
                }
            };
            SourceSpec::Classical(f)
        }
    })
}

fn build_mask(
    name: &str,
    table: &toml::Table,
    grid: GridSpec,
    seed: u64,
    stream: u64,
    previous: Option<&ObjectMask>,
    base: &Path,
) -> CliResult<ObjectMask> {
    let mut table = table.clone();
    let phase: PhaseSection = match table.remove("phase") {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| CliError::Parse(format!("{name}.phase: {}", e.message())))?,
        None => PhaseSection::default(),
    };
    let generator: MaskGenerator = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Parse(format!("{name}: {}", e.message())))?;
    let shape = |s: MaskShape| ObjectMask::generate(grid, &s);
    let mask = match generator {
        MaskGenerator::Unit => ObjectMask::unit(grid),
        MaskGenerator::Opaque => shape(MaskShape::Opaque)?,
        MaskGenerator::Disk { radius, center } => shape(MaskShape::Disk { radius, center })?,
        MaskGenerator::Slit { width, length, center } => shape(MaskShape::Slit { width, length, center })?,
        MaskGenerator::Pinhole { center } => shape(MaskShape::Pinhole { center })?,
        MaskGenerator::Glyph { letter, height, center } => shape(MaskShape::Glyph { letter, height, center })?,
        MaskGenerator::Letter { path } => mask_from_pgm(&base.join(path), grid)?,
        MaskGenerator::Copy => {
            let m = previous.ok_or_else(|| CliError::Parse(format!("{name}: generator \"copy\" is only valid for mask2")))?;
            if phase_is_set(&phase) {
                return Err(CliError::Parse(format!("{name}: a copied mask cannot add its own phase")));
            }
            return Ok(m.clone());
        }
    };
    if !phase_is_set(&phase) {
        return Ok(mask);
    }
    let screen = build_screen(name, &phase, seed, stream)?;
    let mut phi = ghostsim_core::fields::render_phase_screen(&screen, &grid)?;
    if let Some(raw) = &phase.raw {
        let header = phase.header.as_ref().map(|h| base.join(h));
        phi += &read_raw_grid(&base.join(raw), header.as_deref(), &grid)?;
    }
    Ok(mask.with_phase(phi)?)
}

fn phase_is_set(p: &PhaseSection) -> bool {
    !p.modes.is_empty() || p.random.is_some() || p.raw.is_some()
}

fn build_screen(name: &str, p: &PhaseSection, seed: u64, stream: u64) -> CliResult<PhaseScreen> {
    let mut coefficients = Vec::new();
    for (i, mw) in p.modes.iter().enumerate() {
        let mode = match (&mw.mode, mw.n, mw.m) {
            (Some(label), None, None) => ZernikeMode::named(label)?,
            (None, Some(n), Some(m)) => ZernikeMode::new(n, m)?,
            _ => {
                return Err(CliError::Parse(format!(
                    "{name}.phase.modes[{i}]: give either `mode` (a name) or both `n` and `m`"
                )))
            }
        };
        coefficients.push((mode, mw.weight));
    }
    if let Some(r) = &p.random {
        // Independent stream per mask, fixed by the scenario seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut screen = PhaseScreen::random(&mut rng, r.max_degree, r.max_weight);
        screen = match r.parity {
            ParityFilter::Mixed => screen,
            ParityFilter::Even => screen.filtered(Parity::Even),
            ParityFilter::Odd => screen.filtered(Parity::Odd),
        };
        coefficients.extend(screen.coefficients);
    }
    let mut screen = PhaseScreen::new(coefficients);
    if let Some(r) = p.radius {
        screen = screen.with_radius(r);
    }
    Ok(screen)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
experiment = "image"
[grid]
n = 32
pitch = 1e-5
[geometry]
f = 0.25
magnification = 2.0
d1 = 0.3
d2 = 0.3
wavelength = 810e-9
[source]
kind = "spdc"
L = 2e-5
D = 2e-10
bandwidth = 1e13
n_nu = 9
[mask1]
generator = "disk"
radius = 1e-4
[mask1.phase]
modes = [{ mode = "coma", weight = 0.5 }, { n = 2, m = 0, weight = 1.0 }]
random = { max_degree = 3, max_weight = 1.0 }
[mask2]
generator = "glyph"
letter = "F"
height = 2e-4
"#;

    #[test]
    fn parses_and_defaults() {
        let s = Scenario::parse(BASE, Path::new(".")).unwrap();
        assert_eq!(s.experiment, Experiment::Image);
        assert_eq!(s.geometry.magnification(), 2.0);
        let p = s.spdc().unwrap();
        assert_eq!(p.k_pump, 2.0 * s.geometry.k);
        assert_eq!(p.walkoff, 0.0);
        assert!(s.mask1.phase().iter().any(|&v| v != 0.0));
        assert!(s.mask2.phase().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeded_screens_are_reproducible() {
        let a = Scenario::parse(BASE, Path::new(".")).unwrap();
        let b = Scenario::parse(BASE, Path::new(".")).unwrap();
        assert_eq!(a.mask1, b.mask1);
        let c = Scenario::parse(&BASE.replace("seed = 3", "seed = 4"), Path::new(".")).unwrap();
        assert_ne!(a.mask1.phase(), c.mask1.phase());
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let e = Scenario::parse(&BASE.replace("radius = 1e-4", "radius = 1e-4\nradios = 2"), Path::new(".")).unwrap_err();
        assert!(matches!(e, CliError::Parse(ref m) if m.contains("radios")), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn copy_duplicates_mask1() {
        let text = BASE.replace("generator = \"glyph\"\nletter = \"F\"\nheight = 2e-4", "generator = \"copy\"");
        let s = Scenario::parse(&text, Path::new(".")).unwrap();
        assert_eq!(s.mask1, s.mask2);
    }

    #[test]
    fn ambiguous_geometry_is_rejected() {
        let text = BASE.replace("magnification = 2.0", "magnification = 2.0\nf_d = 0.5");
        assert!(matches!(Scenario::parse(&text, Path::new(".")), Err(CliError::Parse(_))));
    }
}
