//! C ABI over `scdt-anomaly`.
//!
//! Cubes and score maps are opaque handles owned by the caller and released
//! with the matching `*_free`. Every fallible call returns a [`HadStatus`];
//! on failure [`had_last_error_message`] describes the error for the calling
//! thread. Panics are caught at the boundary and reported as
//! `HAD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use scdt_anomaly::error::Error;
use scdt_anomaly::eval::{auc_report, roc_from_labels};
use scdt_anomaly::io::{read_cube, read_envi};
use scdt_anomaly::rx::rx_score_cube;
use scdt_anomaly::scdt::{scdt_forward_values, ScdtVector};
use scdt_anomaly::subspace::{ScdtDetector, DEFAULT_ENERGY_THRESHOLD};
use scdt_anomaly::types::{Domain, HsiCube, ScoreMap};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IoError = 3,
    FormatError = 4,
    ShapeMismatch = 5,
    DataError = 6,
    NumericalError = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Hyperspectral cube, pixels stored band-interleaved-by-pixel.
pub struct HadCube(HsiCube);

/// Per-pixel anomaly scores in row-major order.
pub struct HadScoreMap(ScoreMap);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HadAucReport {
    pub auc_full: f64,
    pub pauc_raw_1e2: f64,
    pub pauc_raw_1e3: f64,
    pub pauc_std_1e2: f64,
    pub pauc_std_1e3: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HadStatus {
    match e.category() {
        "IoError" => HadStatus::IoError,
        "ParseError" | "UnsupportedField" => HadStatus::FormatError,
        "ShapeMismatch" | "SizeMismatch" => HadStatus::ShapeMismatch,
        "BadParameter" => HadStatus::InvalidArgument,
        _ if e.exit_code() == scdt_anomaly::error::EXIT_NUMERICAL => HadStatus::NumericalError,
        _ => HadStatus::DataError,
    }
}

struct Fail(HadStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), format!("{}: {}", e.category(), e))
    }
}

fn fail(status: HadStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HadStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside scdt-anomaly");
            HadStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(fail(HadStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Fail> {
    non_null(p, name)?;
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HadStatus::InvalidArgument, format!("{name} is not UTF-8")))?;
    Ok(Path::new(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn had_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn had_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `rows * cols * bands` BIP samples into a new cube.
///
/// # Safety
/// `data` must point to that many readable doubles and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn had_cube_new(
    rows: usize,
    cols: usize,
    bands: usize,
    data: *const f64,
    out: *mut *mut HadCube,
) -> HadStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(bands))
            .ok_or_else(|| fail(HadStatus::InvalidArgument, "cube dimensions overflow"))?;
        let values = std::slice::from_raw_parts(data, n).to_vec();
        let cube = HsiCube::new(rows, cols, bands, values).map_err(Error::from)?;
        *out = boxed(HadCube(cube));
        Ok(())
    })
}

/// Reads a portable cube from its JSON sidecar path.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn had_cube_read_portable(path: *const c_char, out: *mut *mut HadCube) -> HadStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        non_null(out, "out")?;
        let cube = read_cube(path).map_err(Error::from)?;
        *out = boxed(HadCube(cube));
        Ok(())
    })
}

/// Reads an ENVI cube from its header and data file.
///
/// # Safety
/// Both paths must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn had_cube_read_envi(
    header_path: *const c_char,
    data_path: *const c_char,
    out: *mut *mut HadCube,
) -> HadStatus {
    guard(|| {
        let header = path_arg(header_path, "header_path")?;
        let data = path_arg(data_path, "data_path")?;
        non_null(out, "out")?;
        let cube = read_envi(header, data).map_err(Error::from)?;
        *out = boxed(HadCube(cube));
        Ok(())
    })
}

/// # Safety
/// `cube` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn had_cube_free(cube: *mut HadCube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

/// # Safety
/// `cube` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn had_cube_dims(
    cube: *const HadCube,
    rows: *mut usize,
    cols: *mut usize,
    bands: *mut usize,
) -> HadStatus {
    guard(|| {
        non_null(cube, "cube")?;
        non_null(rows, "rows")?;
        non_null(cols, "cols")?;
        non_null(bands, "bands")?;
        let c = &(*cube).0;
        *rows = c.rows();
        *cols = c.cols();
        *bands = c.bands();
        Ok(())
    })
}

/// Number of doubles [`had_scdt_forward`] writes for `grid_size`.
#[no_mangle]
pub extern "C" fn had_scdt_flat_len(grid_size: usize) -> usize {
    ScdtVector::flat_len(grid_size)
}

/// Signed CDT of one signal on `[domain_lo, domain_hi]`, written as
/// `[pos quantiles | pos mass | neg quantiles | neg mass]`.
///
/// # Safety
/// `values` must hold `len` doubles and `out` room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn had_scdt_forward(
    values: *const f64,
    len: usize,
    domain_lo: f64,
    domain_hi: f64,
    grid_size: usize,
    out: *mut f64,
    out_len: usize,
) -> HadStatus {
    guard(|| {
        non_null(values, "values")?;
        non_null(out, "out")?;
        let need = ScdtVector::flat_len(grid_size);
        if out_len < need {
            return Err(fail(HadStatus::BufferTooSmall, format!("need {need} doubles, got {out_len}")));
        }
        let domain = Domain::new(domain_lo, domain_hi).map_err(Error::from)?;
        let v = scdt_forward_values(std::slice::from_raw_parts(values, len), domain, grid_size)
            .map_err(Error::from)?;
        ptr::copy_nonoverlapping(v.to_flat().as_ptr(), out, need);
        Ok(())
    })
}

/// SCDT subspace detector. `grid_size = 0` selects twice the band count;
/// `energy_threshold <= 0` selects the default 0.9999. `out_k` may be null.
///
/// # Safety
/// `cube` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn had_detect_scdt(
    cube: *const HadCube,
    grid_size: usize,
    energy_threshold: f64,
    out: *mut *mut HadScoreMap,
    out_k: *mut usize,
) -> HadStatus {
    guard(|| {
        non_null(cube, "cube")?;
        non_null(out, "out")?;
        let det = ScdtDetector {
            grid_size: (grid_size > 0).then_some(grid_size),
            energy_threshold: if energy_threshold > 0.0 { energy_threshold } else { DEFAULT_ENERGY_THRESHOLD },
            ..ScdtDetector::default()
        };
        let (map, model) = det.score_cube(&(*cube).0).map_err(Error::from)?;
        if !out_k.is_null() {
            *out_k = model.k();
        }
        *out = boxed(HadScoreMap(map));
        Ok(())
    })
}

/// Global RX. A negative `ridge` selects the default loading.
///
/// # Safety
/// `cube` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn had_detect_rx(cube: *const HadCube, ridge: f64, out: *mut *mut HadScoreMap) -> HadStatus {
    guard(|| {
        non_null(cube, "cube")?;
        non_null(out, "out")?;
        let ridge = if ridge < 0.0 { None } else { Some(ridge) };
        let (map, _) = rx_score_cube(&(*cube).0, ridge).map_err(Error::from)?;
        *out = boxed(HadScoreMap(map));
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn had_scoremap_len(map: *const HadScoreMap) -> usize {
    if map.is_null() {
        0
    } else {
        (*map).0.scores().len()
    }
}

/// Copies the scores (row-major) into `out`.
///
/// # Safety
/// `map` must be a live handle and `out` hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn had_scoremap_copy(map: *const HadScoreMap, out: *mut f64, out_len: usize) -> HadStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(out, "out")?;
        let s = (*map).0.scores();
        if out_len < s.len() {
            return Err(fail(HadStatus::BufferTooSmall, format!("need {} doubles, got {out_len}", s.len())));
        }
        ptr::copy_nonoverlapping(s.as_ptr(), out, s.len());
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn had_scoremap_free(map: *mut HadScoreMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Full and partial AUC of `n` scores against labels (nonzero = anomaly).
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn had_auc_report(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut HadAucReport,
) -> HadStatus {
    guard(|| {
        non_null(scores, "scores")?;
        non_null(labels, "labels")?;
        non_null(out, "out")?;
        let s = std::slice::from_raw_parts(scores, n);
        let l: Vec<bool> = std::slice::from_raw_parts(labels, n).iter().map(|&b| b != 0).collect();
        let r = auc_report(&roc_from_labels(s, &l).map_err(Error::from)?);
        *out = HadAucReport {
            auc_full: r.auc_full,
            pauc_raw_1e2: r.pauc_raw_1e2,
            pauc_raw_1e3: r.pauc_raw_1e3,
            pauc_std_1e2: r.pauc_std_1e2,
            pauc_std_1e3: r.pauc_std_1e3,
        };
        Ok(())
    })
}
