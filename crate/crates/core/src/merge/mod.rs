//! Stereo frame merging: timestamp pairing of two captured streams, then
//! side-by-side or anaglyph composition.
//!
//! Anaglyphs put the left eye in the blue channel and the right eye in the
//! red channel. This is the reverse of the common red-left glasses
//! convention, so glasses must be worn blue-left.

mod manifest;
mod ppm;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;

pub use manifest::{parse_manifest, read_stream, write_manifest, ManifestEntry};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("frame size mismatch: left {lw}x{lh}, right {rw}x{rh}")]
    DimensionMismatch { lw: u32, lh: u32, rw: u32, rh: u32 },
    #[error("{stream} stream is not sorted by timestamp at index {index}")]
    Unsorted { stream: &'static str, index: usize },
    #[error("pixel buffer holds {actual} bytes, {width}x{height} RGB needs {expected}")]
    BufferSize { width: u32, height: u32, expected: usize, actual: usize },
    #[error("frame from the {found:?} eye in the {expected:?} stream")]
    WrongEye { expected: Eye, found: Eye },
    #[error("tolerance must be finite and non-negative, got {0}")]
    Tolerance(f64),
    #[error("PPM: {0}")]
    Ppm(String),
    #[error("manifest {path}, line {line}: {message}")]
    Manifest { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl MergeError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        MergeError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eye {
    Left,
    Right,
    /// Output of a composition.
    Stereo,
}

/// Row-major RGB frame, 8 bits per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub timestamp: f64,
    pub source: Eye,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, timestamp: f64, source: Eye) -> Result<Self, MergeError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(MergeError::BufferSize { width, height, expected, actual: pixels.len() });
        }
        Ok(Frame { width, height, pixels, timestamp, source })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3], timestamp: f64, source: Eye) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Frame { width, height, pixels, timestamp, source }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn row(&self, y: usize) -> &[u8] {
        let stride = self.width as usize * 3;
        &self.pixels[y * stride..(y + 1) * stride]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FramePair {
    pub left: Frame,
    pub right: Frame,
    pub timestamp_skew: f64,
}

/// Index-level result of timestamp pairing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    /// (left index, right index), in left order.
    pub pairs: Vec<(usize, usize)>,
    pub dropped_left: Vec<usize>,
    pub dropped_right: Vec<usize>,
}

fn check_sorted(ts: &[f64], stream: &'static str) -> Result<(), MergeError> {
    for (i, t) in ts.iter().enumerate() {
        if !t.is_finite() || (i > 0 && *t < ts[i - 1]) {
            return Err(MergeError::Unsorted { stream, index: i });
        }
    }
    Ok(())
}

/// Greedy nearest-timestamp matching. Left frames are taken in order; each
/// claims the closest still-unmatched right frame within `tolerance`, the
/// earlier one on a tie.
pub fn pair_by_timestamp(left: &[f64], right: &[f64], tolerance: f64) -> Result<Pairing, MergeError> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(MergeError::Tolerance(tolerance));
    }
    check_sorted(left, "left")?;
    check_sorted(right, "right")?;
    let mut taken = vec![false; right.len()];
    let mut out = Pairing::default();
    for (i, &l) in left.iter().enumerate() {
        let lo = right.partition_point(|&r| r < l - tolerance);
        let mut best: Option<(usize, f64)> = None;
        for (j, &r) in right.iter().enumerate().skip(lo) {
            if r > l + tolerance {
                break;
            }
            let d = (r - l).abs();
            if !taken[j] && d <= tolerance && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, _)) => {
                taken[j] = true;
                out.pairs.push((i, j));
            }
            None => out.dropped_left.push(i),
        }
    }
    out.dropped_right = (0..right.len()).filter(|j| !taken[*j]).collect();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedStreams {
    pub pairs: Vec<FramePair>,
    pub dropped_left: usize,
    pub dropped_right: usize,
}

fn check_eye(frames: &[Frame], expected: Eye) -> Result<(), MergeError> {
    match frames.iter().find(|f| f.source != expected) {
        Some(f) => Err(MergeError::WrongEye { expected, found: f.source }),
        None => Ok(()),
    }
}

pub fn pair_frames(left: Vec<Frame>, right: Vec<Frame>, tolerance: f64) -> Result<PairedStreams, MergeError> {
    check_eye(&left, Eye::Left)?;
    check_eye(&right, Eye::Right)?;
    let lt: Vec<f64> = left.iter().map(|f| f.timestamp).collect();
    let rt: Vec<f64> = right.iter().map(|f| f.timestamp).collect();
    let pairing = pair_by_timestamp(&lt, &rt, tolerance)?;
    let mut right: Vec<Option<Frame>> = right.into_iter().map(Some).collect();
    let mut left: Vec<Option<Frame>> = left.into_iter().map(Some).collect();
    let pairs = pairing
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (l, r) = (left[i].take().expect("left used once"), right[j].take().expect("right used once"));
            FramePair { timestamp_skew: (l.timestamp - r.timestamp).abs(), left: l, right: r }
        })
        .collect();
    Ok(PairedStreams { pairs, dropped_left: pairing.dropped_left.len(), dropped_right: pairing.dropped_right.len() })
}

fn check_dims(pair: &FramePair) -> Result<(u32, u32), MergeError> {
    let (l, r) = (&pair.left, &pair.right);
    if (l.width, l.height) != (r.width, r.height) {
        return Err(MergeError::DimensionMismatch { lw: l.width, lh: l.height, rw: r.width, rh: r.height });
    }
    for f in [l, r] {
        let expected = f.width as usize * f.height as usize * 3;
        if f.pixels.len() != expected {
            return Err(MergeError::BufferSize { width: f.width, height: f.height, expected, actual: f.pixels.len() });
        }
    }
    Ok((l.width, l.height))
}

/// Double-width frame: left image in columns `[0, w)`, right in `[w, 2w)`.
pub fn side_by_side(pair: &FramePair) -> Result<Frame, MergeError> {
    let (w, h) = check_dims(pair)?;
    let mut pixels = Vec::with_capacity(pair.left.pixels.len() * 2);
    for y in 0..h as usize {
        pixels.extend_from_slice(pair.left.row(y));
        pixels.extend_from_slice(pair.right.row(y));
    }
    Ok(Frame { width: 2 * w, height: h, pixels, timestamp: pair.left.timestamp, source: Eye::Stereo })
}

/// BT.601 luma, rounded half up, in exact integer arithmetic.
pub fn luminance([r, g, b]: [u8; 3]) -> u8 {
    ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
}

pub fn anaglyph(pair: &FramePair) -> Result<Frame, MergeError> {
    anaglyph_with(pair, Exec::default())
}

/// Red = luminance of the right eye, green = 0, blue = luminance of the left.
pub fn anaglyph_with(pair: &FramePair, exec: Exec) -> Result<Frame, MergeError> {
    let (w, h) = check_dims(pair)?;
    let rows = exec.map_range(h as usize, |y| {
        let (l, r) = (pair.left.row(y), pair.right.row(y));
        let mut out = Vec::with_capacity(l.len());
        for (lp, rp) in l.chunks_exact(3).zip(r.chunks_exact(3)) {
            let ll = luminance([lp[0], lp[1], lp[2]]);
            let rl = luminance([rp[0], rp[1], rp[2]]);
            out.extend_from_slice(&[rl, 0, ll]);
        }
        out
    });
    Ok(Frame { width: w, height: h, pixels: rows.concat(), timestamp: pair.left.timestamp, source: Eye::Stereo })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    Sbs,
    Anaglyph,
}

pub fn compose(pair: &FramePair, mode: MergeMode) -> Result<Frame, MergeError> {
    match mode {
        MergeMode::Sbs => side_by_side(pair),
        MergeMode::Anaglyph => anaglyph_with(pair, Exec::Sequential),
    }
}

/// Composes every pair, in input order.
pub fn compose_all(pairs: &[FramePair], mode: MergeMode, exec: Exec) -> Result<Vec<Frame>, MergeError> {
    exec.map(pairs, |p| compose(p, mode)).into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeReport {
    pub pairs: usize,
    pub dropped_left: usize,
    pub dropped_right: usize,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Reads two stream manifests, pairs and composes their frames, and writes
/// `frame_NNNNN.ppm` files plus a `manifest.txt` into `out_dir`.
pub fn merge_streams(
    left_manifest: &Path,
    right_manifest: &Path,
    mode: MergeMode,
    tolerance: f64,
    out_dir: &Path,
    exec: Exec,
) -> Result<MergeReport, MergeError> {
    let left = read_stream(left_manifest, Eye::Left)?;
    let right = read_stream(right_manifest, Eye::Right)?;
    let paired = pair_frames(left, right, tolerance)?;
    let frames = compose_all(&paired.pairs, mode, exec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| MergeError::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(frames.len());
    let mut outputs = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let name = format!("frame_{i:05}.ppm");
        let path = out_dir.join(&name);
        write_ppm(&path, frame)?;
        entries.push(ManifestEntry { timestamp: frame.timestamp, path: PathBuf::from(name) });
        outputs.push(path);
    }
    let manifest = out_dir.join("manifest.txt");
    write_manifest(&manifest, &entries)?;
    Ok(MergeReport {
        pairs: paired.pairs.len(),
        dropped_left: paired.dropped_left,
        dropped_right: paired.dropped_right,
        outputs,
        manifest,
    })
}
