//! Binary PGM (P5) for ground-truth and detection masks.

use std::path::Path;

use super::portable::{read_raw, write_raw};
use super::{read_bytes, write_atomic, IoError};
use crate::types::GroundTruthMask;

pub(crate) struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

/// Encodes a P5 image; samples are one byte when `maxval < 256`, otherwise
/// two bytes big-endian.
pub(crate) fn encode(width: usize, height: usize, maxval: u32, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval < 256 {
        out.extend(samples.iter().map(|&s| s as u8));
    } else {
        out.extend(samples.iter().flat_map(|s| s.to_be_bytes()));
    }
    out
}

pub(crate) fn decode(path: &Path, bytes: &[u8]) -> Result<Pgm, IoError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(IoError::parse(path, 1, "not a binary PGM (magic P5)"));
    }
    let mut pos = 2;
    let mut line = 1;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => {
                    if *b == b'\n' {
                        line += 1;
                    }
                    pos += 1;
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::parse(path, line, "expected an unsigned integer in the PGM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| IoError::parse(path, line, "PGM header value out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(IoError::parse(path, line, "missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(IoError::parse(path, line, "PGM dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(IoError::parse(path, line, format!("maxval {maxval} outside 1..=65535")));
    }
    let (width, height) = (width as usize, height as usize);
    let wide = maxval > 255;
    let expected = (width * height * if wide { 2 } else { 1 }) as u64;
    let data = &bytes[pos..];
    if data.len() as u64 != expected {
        return Err(IoError::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            got: data.len() as u64,
        });
    }
    let samples = if wide {
        data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        data.iter().map(|&b| b as u16).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u32,
        samples,
    })
}

/// Reads an 8-bit P5 mask; any nonzero sample marks an anomaly.
pub fn read_pgm_mask(path: &Path) -> Result<GroundTruthMask, IoError> {
    let pgm = decode(path, &read_bytes(path)?)?;
    if pgm.maxval > 255 {
        return Err(IoError::unsupported(path, "maxval", pgm.maxval));
    }
    let labels = pgm.samples.iter().map(|&s| s != 0).collect();
    Ok(GroundTruthMask::new(pgm.height, pgm.width, labels)?)
}

/// Writes anomalies as 255 and background as 0.
pub fn write_pgm_mask(mask: &GroundTruthMask, path: &Path) -> Result<(), IoError> {
    let samples: Vec<u16> = mask.labels().iter().map(|&l| if l { 255 } else { 0 }).collect();
    write_atomic(path, &encode(mask.cols(), mask.rows(), 255, &samples))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a mask from a P5 PGM, or from a portable container (`.json`
/// sidecar) with one band.
pub fn read_mask(path: &Path) -> Result<GroundTruthMask, IoError> {
    if !is_json(path) {
        return read_pgm_mask(path);
    }
    let (sc, data) = read_raw(path)?;
    if sc.bands != 1 {
        return Err(IoError::unsupported(path, "bands", sc.bands));
    }
    let labels = data.iter().map(|&v| v != 0.0).collect();
    Ok(GroundTruthMask::new(sc.rows, sc.cols, labels)?)
}

/// Counterpart of [`read_mask`], chosen by the `.json` extension.
pub fn write_mask(mask: &GroundTruthMask, path: &Path) -> Result<(), IoError> {
    if !is_json(path) {
        return write_pgm_mask(mask, path);
    }
    let data: Vec<f64> = mask.labels().iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    write_raw(path, (mask.rows(), mask.cols(), 1), &data, None, Default::default())
}
