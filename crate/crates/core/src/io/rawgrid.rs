//! Raw little-endian `f64` grids (row-major over `[[i, j]]`, `j` fastest)
//! with a small text header giving `n` and `pitch`.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::fields::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawGridHeader {
    pub n: usize,
    pub pitch: f64,
}

/// Header path used when none is given: `<data>.hdr`.
pub fn default_header_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn parse_header(text: &str) -> std::result::Result<RawGridHeader, String> {
    let mut n = None;
    let mut pitch = None;
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", k + 1))?;
        let value = value.trim();
        match key.trim() {
            "n" => n = Some(value.parse::<usize>().map_err(|e| format!("line {}: n: {e}", k + 1))?),
            "pitch" => pitch = Some(value.parse::<f64>().map_err(|e| format!("line {}: pitch: {e}", k + 1))?),
            other => return Err(format!("line {}: unknown key '{other}'", k + 1)),
        }
    }
    Ok(RawGridHeader { n: n.ok_or("missing n")?, pitch: pitch.ok_or("missing pitch")? })
}

/// Reads a raw grid and checks it against `spec`.
pub fn read_raw_grid(data: &Path, header: Option<&Path>, spec: &GridSpec) -> Result<Array2<f64>> {
    let hpath = header.map(Path::to_path_buf).unwrap_or_else(|| default_header_path(data));
    let fmt = |p: &Path, msg: String| Error::Format { path: p.display().to_string(), msg };
    let h = parse_header(&fs::read_to_string(&hpath)?).map_err(|m| fmt(&hpath, m))?;
    if h.n != spec.n() {
        return Err(fmt(&hpath, format!("n = {} does not match grid n = {}", h.n, spec.n())));
    }
    if (h.pitch - spec.pitch()).abs() > 1e-9 * spec.pitch() {
        return Err(fmt(&hpath, format!("pitch = {} does not match grid pitch = {}", h.pitch, spec.pitch())));
    }
    let bytes = fs::read(data)?;
    let need = 8 * h.n * h.n;
    if bytes.len() != need {
        return Err(fmt(data, format!("expected {need} bytes, found {}", bytes.len())));
    }
    let v: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(Array2::from_shape_vec((h.n, h.n), v).expect("length checked"))
}

/// Writes `values` and its header (`<data>.hdr`).
pub fn write_raw_grid(data: &Path, values: &Array2<f64>, spec: &GridSpec) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * values.len());
    for v in values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(data, &bytes)?;
    let header = format!("n = {}\npitch = {:e}\n", spec.n(), spec.pitch());
    write_atomic(&default_header_path(data), header.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_parsing() {
        let h = parse_header("# phase\nn = 16\npitch = 1e-5\n").unwrap();
        assert_eq!(h, RawGridHeader { n: 16, pitch: 1e-5 });
        assert!(parse_header("n = 16").is_err());
        assert!(parse_header("n = 16\npitch = 1\ncolor = 3").is_err());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(16, 1e-5).unwrap();
        let v = Array2::from_shape_fn((16, 16), |(i, j)| i as f64 - 0.25 * j as f64);
        let p = dir.path().join("phase.raw");
        write_raw_grid(&p, &v, &spec).unwrap();
        assert_eq!(read_raw_grid(&p, None, &spec).unwrap(), v);
        let other = GridSpec::new(16, 2e-5).unwrap();
        assert!(read_raw_grid(&p, None, &other).is_err());
    }
}
