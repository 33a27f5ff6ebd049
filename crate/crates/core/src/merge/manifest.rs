//! Stream manifests: one `<timestamp_ms> <ppm_path>` per line. Relative
//! paths resolve against the manifest's directory. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{read_ppm, Eye, Frame, MergeError};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub timestamp: f64,
    pub path: PathBuf,
}

pub fn parse_manifest(text: &str, origin: &Path) -> Result<Vec<ManifestEntry>, MergeError> {
    let err = |line: usize, message: String| MergeError::Manifest { path: origin.display().to_string(), line, message };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (ts, path) =
            line.split_once(char::is_whitespace).ok_or_else(|| err(i + 1, "expected `<timestamp> <path>`".into()))?;
        let timestamp: f64 = ts.parse().map_err(|_| err(i + 1, format!("bad timestamp `{ts}`")))?;
        if !timestamp.is_finite() {
            return Err(err(i + 1, format!("bad timestamp `{ts}`")));
        }
        out.push(ManifestEntry { timestamp, path: PathBuf::from(path.trim()) });
    }
    Ok(out)
}

/// Loads every frame a manifest lists, tagged with `eye`.
pub fn read_stream(manifest: &Path, eye: Eye) -> Result<Vec<Frame>, MergeError> {
    let text = std::fs::read_to_string(manifest).map_err(|e| MergeError::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, manifest)?.into_iter().map(|e| read_ppm(&base.join(&e.path), e.timestamp, eye)).collect()
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), MergeError> {
    let mut text = String::new();
    for e in entries {
        let _ = writeln!(text, "{} {}", e.timestamp, e.path.display());
    }
    std::fs::write(path, text).map_err(|e| MergeError::io(path, e))
}
