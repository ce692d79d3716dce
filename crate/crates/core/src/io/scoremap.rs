//! Score-map export as CSV, normalized 16-bit PGM, or the portable container.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::portable::{read_raw, write_raw};
use super::{pgm, read_bytes, sibling, write_atomic, IoError};
use crate::types::ScoreMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    /// `r,c,score` rows; scores use the shortest round-trip decimal form.
    Csv,
    /// Min-max normalized to 0..=65535, constants in a `.json` sidecar.
    Pgm16,
    /// One-band portable container holding the raw doubles.
    Portable,
}

impl ScoreFormat {
    /// `.csv`, `.pgm` or `.json`.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Some(ScoreFormat::Csv),
            "pgm" => Some(ScoreFormat::Pgm16),
            "json" => Some(ScoreFormat::Portable),
            _ => None,
        }
    }
}

impl FromStr for ScoreFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ScoreFormat::Csv),
            "pgm16" => Ok(ScoreFormat::Pgm16),
            "portable" => Ok(ScoreFormat::Portable),
            _ => Err(format!("unknown score format `{s}` (csv, pgm16, portable)")),
        }
    }
}

/// Normalization constants written next to a pgm16 export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pgm16Sidecar {
    pub detector_id: String,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

const DETECTOR_KEY: &str = "detector_id";

pub fn write_scoremap(map: &ScoreMap, path: &Path, format: ScoreFormat) -> Result<(), IoError> {
    match format {
        ScoreFormat::Csv => {
            let mut out = String::from("r,c,score\n");
            for r in 0..map.rows() {
                for c in 0..map.cols() {
                    out.push_str(&format!("{r},{c},{}\n", map.get(r, c)));
                }
            }
            write_atomic(path, out.as_bytes())
        }
        ScoreFormat::Pgm16 => {
            let s = map.scores();
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = max - min;
            let samples: Vec<u16> = if range > 0.0 {
                s.iter().map(|v| ((v - min) / range * 65535.0).round() as u16).collect()
            } else {
                vec![0; s.len()]
            };
            let side = Pgm16Sidecar {
                detector_id: map.detector_id().to_string(),
                min,
                max,
                range,
                note: (range <= 0.0).then(|| "zero range: every pixel written as 0".to_string()),
            };
            let mut json = serde_json::to_vec_pretty(&side).expect("sidecar serializes");
            json.push(b'\n');
            write_atomic(path, &pgm::encode(map.cols(), map.rows(), 65535, &samples))?;
            write_atomic(&sibling(path, ".json"), &json)
        }
        ScoreFormat::Portable => {
            let mut meta = BTreeMap::new();
            meta.insert(DETECTOR_KEY.to_string(), map.detector_id().to_string());
            write_raw(path, (map.rows(), map.cols(), 1), map.scores(), None, meta)
        }
    }
}

fn read_csv(path: &Path) -> Result<ScoreMap, IoError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| IoError::parse(path, 1, e.to_string()))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == "r,c,score" => {}
        _ => return Err(IoError::parse(path, 1, "expected header `r,c,score`")),
    }
    let mut cells = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || IoError::parse(path, n, format!("expected `r,c,score`, got `{line}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let r: usize = parts[0].parse().map_err(|_| bad())?;
        let c: usize = parts[1].parse().map_err(|_| bad())?;
        let s: f64 = parts[2].parse().map_err(|_| bad())?;
        cells.push((n, r, c, s));
    }
    let rows = cells.iter().map(|x| x.1 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|x| x.2 + 1).max().unwrap_or(0);
    if rows == 0 || rows * cols != cells.len() {
        return Err(IoError::parse(path, 0, format!("{} cells do not fill a {rows}x{cols} grid", cells.len())));
    }
    let mut scores = vec![None; rows * cols];
    for (n, r, c, s) in cells {
        let slot = &mut scores[r * cols + c];
        if slot.is_some() {
            return Err(IoError::parse(path, n, format!("duplicate cell ({r}, {c})")));
        }
        *slot = Some(s);
    }
    let scores = scores.into_iter().map(|s| s.unwrap()).collect();
    Ok(ScoreMap::new(rows, cols, scores, "unknown")?)
}

/// Reads a CSV or portable score map. The pgm16 form is lossy and is not
/// accepted.
pub fn read_scoremap(path: &Path) -> Result<ScoreMap, IoError> {
    match ScoreFormat::from_path(path) {
        Some(ScoreFormat::Csv) => read_csv(path),
        Some(ScoreFormat::Portable) => {
            let (sc, data) = read_raw(path)?;
            if sc.bands != 1 {
                return Err(IoError::unsupported(path, "bands", sc.bands));
            }
            let id = sc.metadata.get(DETECTOR_KEY).cloned().unwrap_or_else(|| "unknown".into());
            Ok(ScoreMap::new(sc.rows, sc.cols, data, id)?)
        }
        _ => Err(IoError::unsupported(
            path,
            "score map format",
            path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        )),
    }
}
