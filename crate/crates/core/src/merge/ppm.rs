//! Binary PPM (P6, maxval 255) reading and writing.

use std::path::Path;

use super::{Eye, Frame, MergeError};

fn bad(msg: impl Into<String>) -> MergeError {
    MergeError::Ppm(msg.into())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8], MergeError> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() && data[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(bad("truncated header"));
    }
    Ok(&data[start..*pos])
}

fn number(data: &[u8], pos: &mut usize, what: &str) -> Result<u32, MergeError> {
    let tok = token(data, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(format!("bad {what}: {}", String::from_utf8_lossy(tok))))
}

/// Decodes a P6 image into a frame with the given timestamp and eye.
pub fn decode_ppm(data: &[u8], timestamp: f64, source: Eye) -> Result<Frame, MergeError> {
    let mut pos = 0;
    if token(data, &mut pos)? != b"P6" {
        return Err(bad("not a binary PPM (P6)"));
    }
    let width = number(data, &mut pos, "width")?;
    let height = number(data, &mut pos, "height")?;
    let maxval = number(data, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(bad(format!("only maxval 255 is supported, got {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(bad("missing raster"));
    }
    pos += 1;
    let need = width as usize * height as usize * 3;
    let raster = &data[pos..];
    if raster.len() < need {
        return Err(bad(format!("raster has {} bytes, {width}x{height} needs {need}", raster.len())));
    }
    Frame::new(width, height, raster[..need].to_vec(), timestamp, source)
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn read_ppm(path: &Path, timestamp: f64, source: Eye) -> Result<Frame, MergeError> {
    let data = std::fs::read(path).map_err(|e| MergeError::io(path, e))?;
    decode_ppm(&data, timestamp, source).map_err(|e| match e {
        MergeError::Ppm(m) => MergeError::Ppm(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_ppm(path: &Path, frame: &Frame) -> Result<(), MergeError> {
    std::fs::write(path, encode_ppm(frame)).map_err(|e| MergeError::io(path, e))
}
