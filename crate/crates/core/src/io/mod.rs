//! File formats: PGM images and raw `f64` grids with a sidecar header.

pub mod pgm;
pub mod rawgrid;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use pgm::{decode_pgm, encode_pgm16, mask_from_pgm, read_pgm, write_pgm16, Pgm};
pub use rawgrid::{read_raw_grid, write_raw_grid, RawGridHeader};

use crate::error::Result;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}
