//! C ABI over the terracast library.
//!
//! Datasets and models are opaque handles created by `*_open` and released
//! by `*_free`. Every fallible call returns a [`TcStatus`]; on failure the
//! message is available from [`tc_last_error_message`] on the same thread.
//! Maps cross the boundary as row-major `uint16_t` buffers with 0 for NODATA
//! and 1..K for classes.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use terracast::grid::{Dataset, LandCoverGrid};
use terracast::model::Model;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Data = 4,
    Model = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque dataset handle.
pub struct TcDataset {
    inner: Dataset,
}

/// Opaque model handle.
pub struct TcModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> TcStatus) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TcStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(TcStatus::Panic, "internal panic"),
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, TcStatus> {
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, "null path"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(TcStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

fn write_map(map: &LandCoverGrid, out: *mut u16, len: usize) -> TcStatus {
    let raw = map.to_raw();
    if out.is_null() {
        return fail(TcStatus::NullPointer, "null output buffer");
    }
    if len < raw.len() {
        return fail(TcStatus::BufferTooSmall, format!("buffer holds {len} cells, map has {}", raw.len()));
    }
    // SAFETY: caller guarantees `out` points to `len` writable cells.
    unsafe { std::ptr::copy_nonoverlapping(raw.as_ptr(), out, raw.len()) };
    TcStatus::Ok
}

/// Load the dataset described by `manifest.txt` in `dir` (or a manifest file path).
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_dataset_open(dir: *const c_char, out: *mut *mut TcDataset) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TcStatus::NullPointer, "null output handle");
        }
        // SAFETY: forwarded caller contract.
        let path = match unsafe { path_arg(dir) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match terracast::manifest::read_dataset(path) {
            Ok(d) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(TcDataset { inner: d })) };
                TcStatus::Ok
            }
            Err(e) => {
                use terracast::grid::GridError;
                use terracast::kv::KvError;
                use terracast::manifest::ManifestError;
                let status = match &e {
                    ManifestError::Io { .. }
                    | ManifestError::Kv(KvError::Io { .. })
                    | ManifestError::Grid { source: GridError::Io { .. }, .. } => TcStatus::Io,
                    _ => TcStatus::Data,
                };
                fail(status, format!("manifest: {e}"))
            }
        }
    })
}

/// Release a dataset handle. Null is ignored.
///
/// # Safety
/// `d` must come from [`tc_dataset_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_dataset_free(d: *mut TcDataset) {
    if !d.is_null() {
        // SAFETY: handle was created by Box::into_raw.
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Grid size, number of dates and number of classes.
///
/// # Safety
/// `d` must be a live handle; output pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn tc_dataset_shape(
    d: *const TcDataset,
    rows: *mut usize,
    cols: *mut usize,
    dates: *mut usize,
    classes: *mut usize,
) -> TcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let Some(d) = (unsafe { d.as_ref() }) else {
            return fail(TcStatus::NullPointer, "null dataset");
        };
        let (r, c) = d.inner.dims();
        for (ptr, v) in [(rows, r), (cols, c), (dates, d.inner.dates()), (classes, d.inner.class_count())] {
            if !ptr.is_null() {
                // SAFETY: non-null output pointer from the caller.
                unsafe { *ptr = v };
            }
        }
        TcStatus::Ok
    })
}

/// Copy the cover map of `date` into `out` (`rows * cols` cells).
///
/// # Safety
/// `d` must be a live handle; `out` must hold `len` cells.
#[no_mangle]
pub unsafe extern "C" fn tc_dataset_cover(d: *const TcDataset, date: usize, out: *mut u16, len: usize) -> TcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let Some(d) = (unsafe { d.as_ref() }) else {
            return fail(TcStatus::NullPointer, "null dataset");
        };
        match d.inner.covers.get(date) {
            Some(map) => write_map(map, out, len),
            None => fail(TcStatus::InvalidArgument, format!("date {date} out of range")),
        }
    })
}

/// Load a model file written by the library or the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_model_open(path: *const c_char, out: *mut *mut TcModel) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TcStatus::NullPointer, "null output handle");
        }
        // SAFETY: forwarded caller contract.
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match Model::read(path) {
            Ok(m) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(TcModel { inner: m })) };
                TcStatus::Ok
            }
            Err(terracast::model::ModelError::Io { path, source }) => fail(TcStatus::Io, format!("model: {path}: {source}")),
            Err(e) => fail(TcStatus::Model, format!("model: {e}")),
        }
    })
}

/// Release a model handle. Null is ignored.
///
/// # Safety
/// `m` must come from [`tc_model_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_model_free(m: *mut TcModel) {
    if !m.is_null() {
        // SAFETY: handle was created by Box::into_raw.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Predict the map following `from_date`; non-frontier pixels are copied
/// when `frontier_only` is non-zero.
///
/// # Safety
/// Handles must be live; `out` must hold `len` cells.
#[no_mangle]
pub unsafe extern "C" fn tc_predict_map(
    m: *const TcModel,
    d: *const TcDataset,
    from_date: usize,
    frontier_only: c_int,
    frontier_order: usize,
    out: *mut u16,
    len: usize,
) -> TcStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (Some(m), Some(d)) = (unsafe { m.as_ref() }, unsafe { d.as_ref() }) else {
            return fail(TcStatus::NullPointer, "null handle");
        };
        match terracast::eval::predict_map(&m.inner, &d.inner, from_date, frontier_only != 0, frontier_order) {
            Ok(map) => write_map(&map, out, len),
            Err(e) => fail(TcStatus::Data, format!("eval: {e}")),
        }
    })
}

/// Per-class and overall misclassification of `pred` against `truth`.
///
/// `per_class` receives `classes` values; an absent class yields NaN.
///
/// # Safety
/// `truth` and `pred` must hold `len` cells; `per_class` must hold `classes`
/// values or be null; `overall` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn tc_misclassification(
    truth: *const u16,
    pred: *const u16,
    len: usize,
    classes: usize,
    per_class: *mut f64,
    overall: *mut f64,
) -> TcStatus {
    guard(|| {
        if truth.is_null() || pred.is_null() {
            return fail(TcStatus::NullPointer, "null map buffer");
        }
        if len == 0 || classes == 0 {
            return fail(TcStatus::InvalidArgument, "empty map or zero classes");
        }
        // SAFETY: caller guarantees `len` readable cells in each buffer.
        let (t, p) = unsafe { (std::slice::from_raw_parts(truth, len), std::slice::from_raw_parts(pred, len)) };
        if let Some(v) = t.iter().chain(p).find(|&&v| usize::from(v) > classes) {
            return fail(TcStatus::InvalidArgument, format!("class {v} exceeds {classes}"));
        }
        let (Ok(tg), Ok(pg)) = (LandCoverGrid::from_raw(1, len, t), LandCoverGrid::from_raw(1, len, p)) else {
            return fail(TcStatus::InvalidArgument, "bad map buffer");
        };
        match terracast::eval::misclassification(&tg, &pg, classes, None) {
            Ok(r) => {
                if !per_class.is_null() {
                    for (k, e) in r.per_class.iter().enumerate() {
                        // SAFETY: caller guarantees `classes` writable values.
                        unsafe { *per_class.add(k) = e.unwrap_or(f64::NAN) };
                    }
                }
                if !overall.is_null() {
                    // SAFETY: non-null output pointer from the caller.
                    unsafe { *overall = r.overall };
                }
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::Data, format!("eval: {e}")),
        }
    })
}

/// Number of free parameters of the regression model with `classes` classes
/// and `covariates` covariates (one-hot previous class plus encoded layers).
#[no_mangle]
pub extern "C" fn tc_polyreg_param_count(classes: usize, covariates: usize) -> usize {
    terracast::polyreg::param_count(classes, covariates)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
