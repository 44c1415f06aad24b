//! Netpbm graymaps. Pixel `(i, j)` is stored at column `i`, row `n - 1 - j`,
//! so `+e2` points up in an image viewer.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ObjectMask};

/// A decoded graymap, samples scaled to `[0, 1]` and indexed `[[i, j]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pgm {
    pub values: Array2<f64>,
    pub maxval: u16,
    pub comments: Vec<String>,
}

/// Encodes `values` (expected in `[0, 1]`, clamped) as a binary 16-bit PGM.
pub fn encode_pgm16(values: &Array2<f64>, comments: &[String]) -> Vec<u8> {
    let (w, h) = values.dim();
    let mut out = Vec::with_capacity(64 + 2 * w * h);
    out.extend_from_slice(b"P5\n");
    for c in comments {
        for line in c.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
    }
    out.extend_from_slice(format!("{w} {h}\n65535\n").as_bytes());
    for row in 0..h {
        let j = h - 1 - row;
        for i in 0..w {
            let v = values[[i, j]];
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            let s = (v * 65535.0).round() as u16;
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn write_pgm16(path: &Path, values: &Array2<f64>, comments: &[String]) -> Result<()> {
    write_atomic(path, &encode_pgm16(values, comments))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    comments: Vec<String>,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                let start = self.pos + 1;
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                self.comments.push(String::from_utf8_lossy(&self.bytes[start..self.pos]).trim().to_string());
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let t = self.token().ok_or_else(|| format!("missing {what}"))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {what} '{}'", String::from_utf8_lossy(t)))
    }
}

/// Decodes P2 (ASCII) or P5 (binary) graymaps with 8- or 16-bit samples.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Pgm, String> {
    let mut c = Cursor { bytes, pos: 0, comments: Vec::new() };
    let magic = c.token().ok_or("empty file")?.to_vec();
    let binary = match magic.as_slice() {
        b"P5" => true,
        b"P2" => false,
        m => return Err(format!("unsupported magic '{}', expected P2 or P5", String::from_utf8_lossy(m))),
    };
    let w = c.number("width")?;
    let h = c.number("height")?;
    let maxval = c.number("maxval")?;
    if w == 0 || h == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let scale = 1.0 / maxval as f64;
    let mut values = Array2::zeros((w, h));
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = c.pos + 1;
        let bps = if maxval < 256 { 1 } else { 2 };
        let need = w * h * bps;
        let data = bytes.get(start..start + need).ok_or_else(|| format!("raster truncated: need {need} bytes"))?;
        for row in 0..h {
            for i in 0..w {
                let k = (row * w + i) * bps;
                let s = if bps == 1 { data[k] as usize } else { u16::from_be_bytes([data[k], data[k + 1]]) as usize };
                if s > maxval {
                    return Err(format!("sample {s} exceeds maxval {maxval}"));
                }
                values[[i, h - 1 - row]] = s as f64 * scale;
            }
        }
    } else {
        for row in 0..h {
            for i in 0..w {
                let s = c.number("sample")?;
                if s > maxval {
                    return Err(format!("sample {s} exceeds maxval {maxval}"));
                }
                values[[i, h - 1 - row]] = s as f64 * scale;
            }
        }
    }
    Ok(Pgm { values, maxval: maxval as u16, comments: c.comments })
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path)?;
    decode_pgm(&bytes).map_err(|msg| Error::Format { path: path.display().to_string(), msg })
}

/// Loads a square graymap as mask amplitude on `spec`.
pub fn mask_from_pgm(path: &Path, spec: GridSpec) -> Result<ObjectMask> {
    let pgm = read_pgm(path)?;
    let (w, h) = pgm.values.dim();
    if w != spec.n() || h != spec.n() {
        return Err(Error::Config(format!(
            "{}: image is {w}x{h} but the grid is {n}x{n}",
            path.display(),
            n = spec.n()
        )));
    }
    ObjectMask::from_amplitude(spec, pgm.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_16_bit() {
        let v = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 / 14.0);
        let bytes = encode_pgm16(&v, &["hello".into()]);
        let back = decode_pgm(&bytes).unwrap();
        assert_eq!(back.maxval, 65535);
        assert_eq!(back.comments, vec!["hello".to_string()]);
        for (a, b) in v.iter().zip(back.values.iter()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn ascii_8_bit_orientation() {
        // Top row of the file is the highest j.
        let p = b"P2\n# c\n2 2\n255\n255 0\n0 0\n";
        let g = decode_pgm(p).unwrap();
        assert_eq!(g.values[[0, 1]], 1.0);
        assert_eq!(g.values[[0, 0]], 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\0").is_err());
        assert!(decode_pgm(b"P2\n1 1\n10\n11\n").is_err());
    }
}
