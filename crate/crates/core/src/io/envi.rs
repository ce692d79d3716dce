//! ENVI reader for the common subset: BSQ/BIL/BIP, int16/float32/float64,
//! either byte order, no compression.

use std::collections::BTreeMap;
use std::path::Path;

use super::{read_bytes, IoError};
use crate::types::HsiCube;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    I16,
    F32,
    F64,
}

impl DataType {
    fn from_code(code: u32) -> Option<Self> {
        match code {
            2 => Some(DataType::I16),
            4 => Some(DataType::F32),
            5 => Some(DataType::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DataType::I16 => 2,
            DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    pub header_offset: usize,
    /// Every other key, lowercased, with its raw value.
    pub extra: BTreeMap<String, String>,
}

impl EnviHeader {
    pub fn payload_len(&self) -> usize {
        self.samples * self.lines * self.bands * self.data_type.size()
    }
}

fn split_entries(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.by_ref().find(|(_, l)| !l.trim().is_empty()) {
        Some((_, l)) if l.trim() == "ENVI" => {}
        Some((n, _)) => return Err(IoError::parse(path, n, "missing ENVI magic")),
        None => return Err(IoError::parse(path, 1, "empty header")),
    }
    let mut out = Vec::new();
    while let Some((n, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| IoError::parse(path, n, format!("expected `key = value`, got `{line}`")))?;
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                let (_, more) = lines
                    .next()
                    .ok_or_else(|| IoError::parse(path, n, "unterminated `{`"))?;
                value.push(' ');
                value.push_str(more.trim());
            }
        }
        out.push((n, key.trim().to_ascii_lowercase(), value));
    }
    Ok(out)
}

fn parse_header(path: &Path, text: &str) -> Result<EnviHeader, IoError> {
    let entries = split_entries(path, text)?;
    let mut extra = BTreeMap::new();
    let mut fields: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (n, key, value) in entries {
        let known = ["samples", "lines", "bands", "interleave", "data type", "byte order", "header offset"];
        match known.iter().find(|k| **k == key) {
            Some(k) => {
                fields.insert(k, (n, value));
            }
            None => {
                extra.insert(key, value);
            }
        }
    }
    let last_line = text.lines().count().max(1);
    let int = |name: &'static str, default: Option<usize>, min: usize| -> Result<usize, IoError> {
        match fields.get(name) {
            Some((n, v)) => {
                let x: usize = v
                    .parse()
                    .map_err(|_| IoError::parse(path, *n, format!("{name} must be a non-negative integer, got `{v}`")))?;
                if x < min {
                    return Err(IoError::parse(path, *n, format!("{name} must be at least {min}")));
                }
                Ok(x)
            }
            None => default.ok_or_else(|| IoError::parse(path, last_line, format!("missing `{name}`"))),
        }
    };
    let samples = int("samples", None, 1)?;
    let lines = int("lines", None, 1)?;
    let bands = int("bands", None, 1)?;
    let header_offset = int("header offset", Some(0), 0)?;
    let code = int("data type", None, 0)?;
    let data_type = u32::try_from(code)
        .ok()
        .and_then(DataType::from_code)
        .ok_or_else(|| IoError::unsupported(path, "data type", code))?;
    let byte_order = match int("byte order", Some(0), 0)? {
        0 => ByteOrder::Little,
        1 => ByteOrder::Big,
        other => return Err(IoError::unsupported(path, "byte order", other)),
    };
    let interleave = match fields.get("interleave") {
        Some((_, v)) => match v.to_ascii_lowercase().as_str() {
            "bsq" => Interleave::Bsq,
            "bil" => Interleave::Bil,
            "bip" => Interleave::Bip,
            _ => return Err(IoError::unsupported(path, "interleave", v)),
        },
        None => return Err(IoError::parse(path, last_line, "missing `interleave`")),
    };
    if let Some(v) = extra.get("file compression") {
        if v.trim() != "0" {
            return Err(IoError::unsupported(path, "file compression", v));
        }
    }
    Ok(EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        data_type,
        byte_order,
        header_offset,
        extra,
    })
}

pub fn read_envi_header(path: &Path) -> Result<EnviHeader, IoError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| IoError::parse(path, 1, e.to_string()))?;
    parse_header(path, &text)
}

fn decode(raw: &[u8], dtype: DataType, order: ByteOrder) -> Vec<f64> {
    macro_rules! conv {
        ($t:ty, $n:expr) => {
            raw.chunks_exact($n)
                .map(|c| {
                    let a: [u8; $n] = c.try_into().unwrap();
                    match order {
                        ByteOrder::Little => <$t>::from_le_bytes(a) as f64,
                        ByteOrder::Big => <$t>::from_be_bytes(a) as f64,
                    }
                })
                .collect()
        };
    }
    match dtype {
        DataType::I16 => conv!(i16, 2),
        DataType::F32 => conv!(f32, 4),
        DataType::F64 => conv!(f64, 8),
    }
}

/// Reads an ENVI cube into the in-memory BIP layout. Integer samples are
/// cast without scaling. Header keys other than the layout fields are kept
/// as cube metadata.
pub fn read_envi(header_path: &Path, data_path: &Path) -> Result<HsiCube, IoError> {
    let h = read_envi_header(header_path)?;
    let bytes = read_bytes(data_path)?;
    let expected = (h.header_offset + h.payload_len()) as u64;
    if bytes.len() as u64 != expected {
        return Err(IoError::SizeMismatch {
            path: data_path.to_path_buf(),
            expected,
            got: bytes.len() as u64,
        });
    }
    let values = decode(&bytes[h.header_offset..], h.data_type, h.byte_order);
    let (rows, cols, bands) = (h.lines, h.samples, h.bands);
    let data = match h.interleave {
        Interleave::Bip => values,
        Interleave::Bsq | Interleave::Bil => {
            let mut data = vec![0.0; values.len()];
            for r in 0..rows {
                for c in 0..cols {
                    for b in 0..bands {
                        let src = match h.interleave {
                            Interleave::Bsq => (b * rows + r) * cols + c,
                            _ => (r * bands + b) * cols + c,
                        };
                        data[(r * cols + c) * bands + b] = values[src];
                    }
                }
            }
            data
        }
    };
    Ok(HsiCube::new(rows, cols, bands, data)?.with_metadata(h.extra))
}
