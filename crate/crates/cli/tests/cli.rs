use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const GRID: &str = r#"
[grid]
n = 32
pitch = 20e-6

[geometry]
f = 0.25
magnification = 1.0
d1 = 0.3
d2 = 0.3
wavelength = 810e-9
"#;

const THIN: &str = r#"
[source]
kind = "spdc"
L = 20e-6
D = 2e-10
bandwidth = 1e13
n_nu = 5
"#;

const THICK: &str = r#"
[source]
kind = "spdc"
L = 1e-3
D = 2e-10
M = 0.07
bandwidth = 1e13
n_nu = 5
"#;

fn scenario(dir: &Path, name: &str, experiment: &str, source: &str, rest: &str) -> PathBuf {
    let text = format!("seed = 11\nexperiment = \"{experiment}\"\n{GRID}{source}{rest}");
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn ghostsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ghostsim"));
    cmd.args(args).env_remove("GHOSTSIM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(scn: &Path, out: &Path) -> Output {
    ghostsim(&["run", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()], &[])
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn metric(v: &Value, name: &str) -> f64 {
    v["metrics"][name].as_f64().unwrap_or_else(|| panic!("metric {name} missing in {v}"))
}

const ABERRATED: &str = r#"
[mask1]
generator = "disk"
radius = 150e-6

[mask1.phase]
random = { max_degree = 4, max_weight = 2.0 }

[mask2]
generator = "slit"
width = 120e-6

[mask2.phase]
modes = [{ mode = "coma", weight = 1.3 }, { mode = "defocus", weight = -0.7 }]
"#;

#[test]
fn unit_masks_give_a_flat_image() {
    let tmp = TempDir::new().unwrap();
    let rest = "[mask1]\ngenerator = \"unit\"\n[mask2]\ngenerator = \"unit\"\n[image]\npath = \"both\"\n";
    let scn = scenario(tmp.path(), "unit.scn", "image", THIN, rest);
    let out = tmp.path().join("out");
    let o = run(&scn, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!(metric(&s, "analytic_cv") <= 1e-6);
    assert!(metric(&s, "bruteforce_cv") <= 1e-6);
    assert!(out.join("map_analytic.pgm").exists());
    assert!(out.join("map_bruteforce.pgm").exists());
}

#[test]
fn aberrations_cancel_in_brute_force_image() {
    let tmp = TempDir::new().unwrap();
    let rest = format!(
        "{ABERRATED}\n[image]\npath = \"both\"\n\n[[assert]]\nmetric = \"phase_cancellation_residual_bruteforce\"\nmax = 1e-3\n"
    );
    let scn = scenario(tmp.path(), "ab.scn", "image", THIN, &rest);
    let out = tmp.path().join("out");
    let o = run(&scn, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["passed"], Value::Bool(true));
    assert!(metric(&s, "phase_cancellation_residual") <= 1e-12);
}

#[test]
fn interferometer_dip_width_matches_crystal_delay() {
    let tmp = TempDir::new().unwrap();
    let source = THICK.replace("M = 0.07", "M = 0.0");
    let rest = "[mask1]\ngenerator = \"unit\"\n[mask2]\ngenerator = \"unit\"\n\n[[assert]]\nmetric = \"dip_width_error_steps\"\nmax = 2.0\n";
    let scn = scenario(tmp.path(), "dip.scn", "interfere", &source, rest);
    let out = tmp.path().join("out");
    let o = run(&scn, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!((metric(&s, "dip_full_width") - 2e-13).abs() < 1e-25);
    assert!((metric(&s, "dip_depth") - 1.0).abs() < 1e-12);
    let csv = fs::read_to_string(out.join("tau_scan.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "tau,R,ReW,ImW");
    assert_eq!(rows.len(), 102);
}

#[test]
fn command_line_overrides_scan_settings() {
    let tmp = TempDir::new().unwrap();
    let scn = scenario(tmp.path(), "i.scn", "interfere", THICK, ABERRATED);
    let out = tmp.path().join("out");
    let o = ghostsim(
        &[
            "interfere",
            "--scenario",
            scn.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--tau-min",
            "-1e-13",
            "--tau-max",
            "3e-13",
            "--steps",
            "11",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("tau_scan.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 12);
}

#[test]
fn outputs_carry_version_and_scenario_hash() {
    let tmp = TempDir::new().unwrap();
    let scn = scenario(tmp.path(), "p.scn", "interfere", THICK, ABERRATED);
    let out = tmp.path().join("out");
    assert_eq!(code(&run(&scn, &out)), 0);
    let hash = hex(&Sha256::digest(fs::read(&scn).unwrap()));
    let s = summary(&out);
    assert_eq!(s["provenance"]["scenario_sha256"], Value::String(hash.clone()));
    assert_eq!(s["provenance"]["version"], Value::String(env!("CARGO_PKG_VERSION").into()));
    assert_eq!(s["provenance"]["seed"], Value::from(11));
    let csv = fs::read_to_string(out.join("tau_scan.csv")).unwrap();
    assert!(csv.contains(&hash));
    assert!(csv.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let rest = format!("{ABERRATED}\n[image]\npath = \"both\"\n");
    let scn = scenario(tmp.path(), "t.scn", "image", THIN, &rest);
    let mut digests = Vec::new();
    for threads in ["1", "2"] {
        let out = tmp.path().join(format!("out{threads}"));
        let o = ghostsim(
            &["image", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap(), "--png"],
            &[("GHOSTSIM_THREADS", threads)],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        let mut h = Sha256::new();
        for p in names {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update(fs::read(p).unwrap());
        }
        digests.push(hex(&h.finalize()));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn correlator_and_lens_study_run() {
    let tmp = TempDir::new().unwrap();
    let rest = format!("{ABERRATED}\n[correlate]\nrmax = 100e-6\nsteps = 11\ndeinvert = true\n");
    let scn = scenario(tmp.path(), "c.scn", "correlate", THIN, &rest);
    let out = tmp.path().join("corr");
    assert_eq!(code(&run(&scn, &out)), 0);
    let s = summary(&out);
    let g = metric(&s, "g_max");
    assert!(g.is_finite() && g > 0.0, "{g}");
    assert!(metric(&s, "phase_cancellation_residual") <= 1e-12);
    let csv = fs::read_to_string(out.join("correlation.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11 * 11);

    let scn = scenario(tmp.path(), "l.scn", "lens-study", THIN, ABERRATED);
    let out = tmp.path().join("lens");
    assert_eq!(code(&run(&scn, &out)), 0);
    let s = summary(&out);
    assert!(metric(&s, "lens1_off_lens2_on_cv") <= 1e-6);
    assert!(metric(&s, "lens1_on_lens2_off_deviation") <= 1e-6);
    assert!(metric(&s, "lens1_on_lens2_on_cv") > 0.1);
}

#[test]
fn malformed_scenario_exits_with_2() {
    let tmp = TempDir::new().unwrap();
    let scn = scenario(tmp.path(), "bad.scn", "image", THIN, "[mask1]\ngenerator = \"unit\"\nbogus = 1\n");
    assert_eq!(code(&run(&scn, &tmp.path().join("o"))), 2);
    assert_eq!(code(&run(&tmp.path().join("missing.scn"), &tmp.path().join("o"))), 2);
}

#[test]
fn out_of_domain_source_exits_with_3() {
    let tmp = TempDir::new().unwrap();
    let source = THIN.replace("bandwidth = 1e13", "bandwidth = 5e15");
    let scn = scenario(tmp.path(), "dom.scn", "image", &source, "[mask1]\ngenerator = \"unit\"\n[mask2]\ngenerator = \"unit\"\n");
    let o = run(&scn, &tmp.path().join("o"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn work_budget_exits_with_4() {
    let tmp = TempDir::new().unwrap();
    let rest = "[mask1]\ngenerator = \"unit\"\n[mask2]\ngenerator = \"unit\"\n[image]\npath = \"bruteforce\"\n[bruteforce]\nmax_work = 10.0\n";
    let scn = scenario(tmp.path(), "res.scn", "image", THIN, rest);
    let o = run(&scn, &tmp.path().join("o"));
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_assertion_exits_with_1_and_still_writes_summary() {
    let tmp = TempDir::new().unwrap();
    let rest = format!("{ABERRATED}\n[[assert]]\nmetric = \"r0\"\nmax = 0.0\n");
    let scn = scenario(tmp.path(), "fail.scn", "interfere", THICK, &rest);
    let out = tmp.path().join("o");
    assert_eq!(code(&run(&scn, &out)), 1);
    let s = summary(&out);
    assert_eq!(s["passed"], Value::Bool(false));
}

#[test]
fn unknown_metric_in_assertion_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    let rest = format!("{ABERRATED}\n[[assert]]\nmetric = \"nonsense\"\nmax = 1.0\n");
    let scn = scenario(tmp.path(), "m.scn", "interfere", THICK, &rest);
    assert_eq!(code(&run(&scn, &tmp.path().join("o"))), 2);
}

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scn") {
            ghostsim::scenario::Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}
