//! Portable cube container: a JSON sidecar plus a raw payload of
//! little-endian `f64` values in BIP order.
//!
//! ```json
//! { "rows": 2, "cols": 3, "bands": 4, "dtype": "f64", "order": "bip",
//!   "endianness": "little", "band_domain": {"lo": 0.0, "hi": 1.0},
//!   "metadata": {}, "payload": "cube.bin" }
//! ```
//!
//! The payload path is relative to the sidecar's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_bytes, write_atomic, IoError};
use crate::types::{Domain, HsiCube};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Sidecar {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub dtype: String,
    pub order: String,
    pub endianness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_domain: Option<Domain>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub payload: String,
}

fn payload_path(sidecar: &Path) -> PathBuf {
    sidecar.with_extension("bin")
}

pub(crate) fn write_raw(
    path: &Path,
    shape: (usize, usize, usize),
    data: &[f64],
    band_domain: Option<Domain>,
    metadata: BTreeMap<String, String>,
) -> Result<(), IoError> {
    let payload = payload_path(path);
    let name = payload
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| IoError::parse(path, 0, "sidecar path has no usable file name"))?
        .to_string();
    let sidecar = Sidecar {
        rows: shape.0,
        cols: shape.1,
        bands: shape.2,
        dtype: "f64".into(),
        order: "bip".into(),
        endianness: "little".into(),
        band_domain,
        metadata,
        payload: name,
    };
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_atomic(&payload, &bytes)?;
    let mut json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    json.push(b'\n');
    write_atomic(path, &json)
}

pub(crate) fn read_raw(path: &Path) -> Result<(Sidecar, Vec<f64>), IoError> {
    let text = read_bytes(path)?;
    let sc: Sidecar = serde_json::from_slice(&text).map_err(|e| IoError::json(path, e))?;
    for (name, value, want) in [
        ("dtype", &sc.dtype, "f64"),
        ("order", &sc.order, "bip"),
        ("endianness", &sc.endianness, "little"),
    ] {
        if value != want {
            return Err(IoError::unsupported(path, name, value));
        }
    }
    let dir = path.parent().unwrap_or(Path::new(""));
    let payload = dir.join(&sc.payload);
    let bytes = read_bytes(&payload)?;
    let expected = sc
        .rows
        .checked_mul(sc.cols)
        .and_then(|n| n.checked_mul(sc.bands))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| IoError::parse(path, 0, "dimensions overflow"))? as u64;
    if bytes.len() as u64 != expected {
        return Err(IoError::SizeMismatch {
            path: payload,
            expected,
            got: bytes.len() as u64,
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((sc, data))
}

/// Writes `path` (the sidecar) and its payload next to it with a `.bin`
/// extension.
pub fn write_cube(cube: &HsiCube, path: &Path) -> Result<(), IoError> {
    write_raw(
        path,
        (cube.rows(), cube.cols(), cube.bands()),
        cube.data(),
        Some(cube.band_domain()),
        cube.metadata().clone(),
    )
}

pub fn read_cube(path: &Path) -> Result<HsiCube, IoError> {
    let (sc, data) = read_raw(path)?;
    let domain = sc.band_domain.unwrap_or_default();
    Ok(HsiCube::with_domain(sc.rows, sc.cols, sc.bands, data, domain)?.with_metadata(sc.metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn cube() -> HsiCube {
        let data: Vec<f64> = (0..2 * 3 * 4).map(|i| (i as f64).sin() * 1e-300 + i as f64 / 7.0).collect();
        let mut meta = BTreeMap::new();
        meta.insert("sensor".to_string(), "test".to_string());
        HsiCube::with_domain(2, 3, 4, data, Domain::new(400.0, 2500.0).unwrap())
            .unwrap()
            .with_metadata(meta)
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let c = cube();
        write_cube(&c, &p).unwrap();
        assert!(dir.path().join("c.bin").exists());
        let back = read_cube(&p).unwrap();
        assert_eq!(back, c);
        let bits = |c: &HsiCube| c.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&c));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        write_cube(&cube(), &p).unwrap();
        let bin = dir.path().join("c.bin");
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_cube(&p), Err(IoError::SizeMismatch { expected: 192, got: 189, .. })));
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 8]);
        fs::write(&bin, longer).unwrap();
        assert!(matches!(read_cube(&p), Err(IoError::SizeMismatch { .. })));
    }

    #[test]
    fn unknown_order_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        write_cube(&cube(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replace("\"bip\"", "\"bsq\"");
        fs::write(&p, text).unwrap();
        assert!(matches!(read_cube(&p), Err(IoError::UnsupportedField { ref name, .. }) if name == "order"));
    }

    #[test]
    fn bad_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, "{\n \"rows\": 2,\n oops\n}").unwrap();
        assert!(matches!(read_cube(&p), Err(IoError::Parse { line: 3, .. })));
    }
}
