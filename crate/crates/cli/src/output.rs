//! Artifact writers. Every file is written atomically and carries the tool
//! version and the scenario hash.

use std::fs;
use std::path::{Path, PathBuf};

use ghostsim_core::io::{encode_pgm16, write_atomic};
use ndarray::Array2;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

pub const TOOL: &str = "ghostsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn of(s: &Scenario) -> Self {
        Self { tool: TOOL, version: VERSION, scenario_sha256: s.sha256.clone(), seed: s.seed }
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("{} {}", self.tool, self.version),
            format!("scenario sha256 {}", self.scenario_sha256),
            format!("seed {}", self.seed),
        ]
    }
}

/// Output directory, created on first use.
pub struct OutDir {
    dir: PathBuf,
    prov: Provenance,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(dir: &Path, prov: Provenance) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), prov, written: Vec::new() })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        log::info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    /// `{"provenance": ..., <body fields>}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> CliResult<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Doc { provenance: &self.prov, body })
            .map_err(|e| CliError::Parse(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// CSV with `#` provenance lines ahead of the header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<PathBuf> {
        let mut buf = Vec::new();
        for l in self.prov.lines() {
            buf.extend_from_slice(format!("# {l}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Parse(format!("cannot encode {name}: {e}"));
            w.write_record(header).map_err(fail)?;
            for r in rows {
                w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Parse(format!("cannot encode {name}: {e}")))?;
        }
        self.put(name, &buf)
    }

    /// 16-bit PGM of a map scaled to its peak.
    pub fn pgm(&mut self, name: &str, map: &Array2<f64>, extra: &[String]) -> CliResult<PathBuf> {
        let mut comments = self.prov.lines();
        comments.extend_from_slice(extra);
        self.put(name, &encode_pgm16(&scaled(map), &comments))
    }

    /// 16-bit grayscale PNG preview with the provenance in text chunks.
    pub fn png(&mut self, name: &str, map: &Array2<f64>) -> CliResult<PathBuf> {
        let v = scaled(map);
        let (w, h) = v.dim();
        let mut data = Vec::with_capacity(2 * w * h);
        for row in 0..h {
            for i in 0..w {
                let s = (v[[i, h - 1 - row]].clamp(0.0, 1.0) * 65535.0).round() as u16;
                data.extend_from_slice(&s.to_be_bytes());
            }
        }
        let mut bytes = Vec::new();
        {
            let fail = |e: png::EncodingError| CliError::Parse(format!("cannot encode {name}: {e}"));
            let mut enc = png::Encoder::new(&mut bytes, w as u32, h as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            enc.add_text_chunk("Software".into(), format!("{} {}", self.prov.tool, self.prov.version)).map_err(fail)?;
            enc.add_text_chunk("Scenario-SHA256".into(), self.prov.scenario_sha256.clone()).map_err(fail)?;
            let mut writer = enc.write_header().map_err(fail)?;
            writer.write_image_data(&data).map_err(fail)?;
            writer.finish().map_err(fail)?;
        }
        self.put(name, &bytes)
    }
}

fn scaled(map: &Array2<f64>) -> Array2<f64> {
    let peak = map.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak > 0.0 {
        map.mapv(|v| v / peak)
    } else {
        map.clone()
    }
}
