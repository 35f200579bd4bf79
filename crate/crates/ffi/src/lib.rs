//! C ABI for `wjl`.
//!
//! Objects cross the boundary as opaque heap handles created by `*_new` (or
//! `*_deserialize`) functions and released with the matching `*_free`.
//! Every fallible function returns a [`WjlStatus`]; on failure a description
//! is available from [`wjl_last_error_message`] on the same thread. Outputs
//! are written through pointer arguments only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wjl::oracle::WeightedPair;
use wjl::projection::{rho, rho_pairwise, PlanParams, ProjectionMatrix, ReducedVector};
use wjl::sketch::{plan_sketch, SketchConfig, StreamMode, StreamSketch};
use wjl::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WjlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ProvenanceMismatch = 4,
    ConfigMismatch = 5,
    FormatError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Interpretation of the `t` argument of [`wjl_sketch_update`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WjlStreamMode {
    Timestep = 0,
    Turnstile = 1,
}

/// A seeded `k x d` projection matrix.
pub struct WjlMatrix(ProjectionMatrix);

/// A reduced vector `g(x)` tagged with its matrix.
pub struct WjlReduced(ReducedVector);

/// A streaming sketch.
pub struct WjlSketch(StreamSketch);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| {
        let mut bytes = message.into_bytes();
        bytes.retain(|&b| b != 0);
        *e.borrow_mut() = bytes;
    });
}

fn status_of(error: &Error) -> WjlStatus {
    match error {
        Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } => WjlStatus::DimensionMismatch,
        Error::ProvenanceMismatch => WjlStatus::ProvenanceMismatch,
        Error::ConfigMismatch => WjlStatus::ConfigMismatch,
        Error::Format(_) | Error::Io(_) => WjlStatus::FormatError,
        _ => WjlStatus::InvalidArgument,
    }
}

struct Failure(WjlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn null(name: &str) -> Failure {
    Failure(WjlStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> FfiResult) -> WjlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WjlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            WjlStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

/// A slice from `(ptr, len)`; `ptr` may be null when `len` is zero.
unsafe fn as_slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> FfiResult {
    put(out, Box::into_raw(Box::new(value)), "out")
}

/// Copies `bytes` into `(buf, cap)`. `*written` always receives the full
/// length, so a call with a null buffer queries the required size.
unsafe fn emit_bytes(bytes: &[u8], buf: *mut u8, cap: usize, written: *mut usize) -> FfiResult {
    put(written, bytes.len(), "written")?;
    if buf.is_null() || cap < bytes.len() {
        return Err(Failure(
            WjlStatus::BufferTooSmall,
            format!("buffer holds {cap} bytes, {} needed", bytes.len()),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wjl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`). Returns the untruncated length including
/// the terminator; 0 means no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn wjl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        if message.is_empty() {
            return 0;
        }
        if !buf.is_null() && cap > 0 {
            let n = message.len().min(cap - 1);
            ptr::copy_nonoverlapping(message.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        message.len() + 1
    })
}

/// Creates the seeded `k x d` matrix.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_matrix_new(d: usize, k: usize, seed: u64, out: *mut *mut WjlMatrix) -> WjlStatus {
    guard(|| put_handle(out, WjlMatrix(ProjectionMatrix::sample(d, k, seed)?)))
}

/// # Safety
/// `matrix` must be null or a handle from `wjl_matrix_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wjl_matrix_free(matrix: *mut WjlMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Reduces a dense vector of length `len` (which must equal `d`).
///
/// # Safety
/// `x` must be valid for `len` reads; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduce(
    matrix: *const WjlMatrix,
    x: *const f64,
    len: usize,
    out: *mut *mut WjlReduced,
) -> WjlStatus {
    guard(|| {
        let a = as_ref(matrix, "matrix")?;
        let x = as_slice(x, len, "x")?;
        put_handle(out, WjlReduced(a.0.reduce(x)?))
    })
}

/// Reduces a sparse vector given as `nnz` parallel `(index, value)` arrays.
///
/// # Safety
/// `indices` and `values` must be valid for `nnz` reads.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduce_sparse(
    matrix: *const WjlMatrix,
    indices: *const usize,
    values: *const f64,
    nnz: usize,
    out: *mut *mut WjlReduced,
) -> WjlStatus {
    guard(|| {
        let a = as_ref(matrix, "matrix")?;
        let indices = as_slice(indices, nnz, "indices")?;
        let values = as_slice(values, nnz, "values")?;
        let entries: Vec<(usize, f64)> = indices.iter().copied().zip(values.iter().copied()).collect();
        put_handle(out, WjlReduced(a.0.reduce_sparse(&entries)?))
    })
}

/// # Safety
/// `reduced` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduced_free(reduced: *mut WjlReduced) {
    if !reduced.is_null() {
        drop(Box::from_raw(reduced));
    }
}

/// Reduced dimension `k`.
///
/// # Safety
/// `reduced` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduced_dim(reduced: *const WjlReduced, out: *mut usize) -> WjlStatus {
    guard(|| put(out, as_ref(reduced, "reduced")?.0.k(), "out"))
}

/// Estimate of `||x||_w^2` from `g(x)` and `g(w)`.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_rho(gx: *const WjlReduced, gw: *const WjlReduced, out: *mut f64) -> WjlStatus {
    guard(|| {
        let value = rho(&as_ref(gx, "gx")?.0, &as_ref(gw, "gw")?.0)?;
        put(out, value, "out")
    })
}

/// Estimate of `||x - y||_w^2` from `g(x)`, `g(y)` and `g(w)`.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_rho_pairwise(
    gx: *const WjlReduced,
    gy: *const WjlReduced,
    gw: *const WjlReduced,
    out: *mut f64,
) -> WjlStatus {
    guard(|| {
        let value = rho_pairwise(&as_ref(gx, "gx")?.0, &as_ref(gy, "gy")?.0, &as_ref(gw, "gw")?.0)?;
        put(out, value, "out")
    })
}

/// Writes the WJLR encoding. `*written` receives the encoded length even
/// when the buffer is too small (status `BufferTooSmall`).
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes; `written` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduced_serialize(
    reduced: *const WjlReduced,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> WjlStatus {
    guard(|| emit_bytes(&as_ref(reduced, "reduced")?.0.to_bytes(), buf, cap, written))
}

/// # Safety
/// `bytes` must be valid for `len` reads; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_reduced_deserialize(
    bytes: *const u8,
    len: usize,
    out: *mut *mut WjlReduced,
) -> WjlStatus {
    guard(|| put_handle(out, WjlReduced(ReducedVector::from_bytes(as_slice(bytes, len, "bytes")?)?)))
}

/// Reduced dimension sufficient for an `(epsilon, delta)` guarantee on inputs
/// with distortion at most `distortion`, using the default constant.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_required_k(epsilon: f64, delta: f64, distortion: f64, out: *mut u64) -> WjlStatus {
    guard(|| {
        let params = PlanParams::new(epsilon, delta, distortion)?;
        put(out, wjl::required_k(&params), "out")
    })
}

/// Sketch dimensions `(r, m)` for an `(epsilon, delta)` guarantee.
///
/// # Safety
/// `r` and `m` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_plan_sketch(
    epsilon: f64,
    delta: f64,
    distortion: f64,
    r: *mut usize,
    m: *mut usize,
) -> WjlStatus {
    guard(|| {
        let dims = plan_sketch(epsilon, delta, distortion)?;
        if r.is_null() || m.is_null() {
            return Err(null("r or m"));
        }
        put(r, dims.r, "r")?;
        put(m, dims.m, "m")
    })
}

/// Zeroed sketch. Sketches to be compared or merged must be created with the
/// same `(r, m, seed, mode)`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_new(
    r: usize,
    m: usize,
    seed: u64,
    mode: WjlStreamMode,
    out: *mut *mut WjlSketch,
) -> WjlStatus {
    guard(|| {
        let mode = match mode {
            WjlStreamMode::Timestep => StreamMode::Timestep,
            WjlStreamMode::Turnstile => StreamMode::Turnstile,
        };
        let config = SketchConfig::new(r, m, seed, mode)?;
        put_handle(out, WjlSketch(StreamSketch::new(config)))
    })
}

/// Zeroed sketch sharing the hashes of `sketch` (cheaper than
/// `wjl_sketch_new` with the same arguments).
///
/// # Safety
/// `sketch` must be live; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_empty_like(sketch: *const WjlSketch, out: *mut *mut WjlSketch) -> WjlStatus {
    guard(|| put_handle(out, WjlSketch(as_ref(sketch, "sketch")?.0.empty_like())))
}

/// # Safety
/// `sketch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_free(sketch: *mut WjlSketch) {
    if !sketch.is_null() {
        drop(Box::from_raw(sketch));
    }
}

/// Adds `v * h(t)` to every counter.
///
/// # Safety
/// `sketch` must be live and not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_update(sketch: *mut WjlSketch, t: u64, v: f64) -> WjlStatus {
    guard(|| Ok(as_mut(sketch, "sketch")?.0.update(t, v)?))
}

/// New sketch whose counters are the sums of those of `a` and `b`.
///
/// # Safety
/// Handles must be live; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_merge(
    a: *const WjlSketch,
    b: *const WjlSketch,
    out: *mut *mut WjlSketch,
) -> WjlStatus {
    guard(|| {
        let merged = StreamSketch::merge(&as_ref(a, "a")?.0, &as_ref(b, "b")?.0)?;
        put_handle(out, WjlSketch(merged))
    })
}

/// Median-of-means estimate of `||x||_w^2`. May be negative.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_estimate(sx: *const WjlSketch, sw: *const WjlSketch, out: *mut f64) -> WjlStatus {
    guard(|| {
        let estimate = StreamSketch::estimate(&as_ref(sx, "sx")?.0, &as_ref(sw, "sw")?.0)?;
        put(out, estimate.value, "out")
    })
}

/// Writes the WJLS encoding, with the same size protocol as
/// `wjl_reduced_serialize`.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes; `written` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_serialize(
    sketch: *const WjlSketch,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> WjlStatus {
    guard(|| emit_bytes(&as_ref(sketch, "sketch")?.0.to_bytes()?, buf, cap, written))
}

/// # Safety
/// `bytes` must be valid for `len` reads; `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn wjl_sketch_deserialize(bytes: *const u8, len: usize, out: *mut *mut WjlSketch) -> WjlStatus {
    guard(|| put_handle(out, WjlSketch(StreamSketch::from_bytes(as_slice(bytes, len, "bytes")?)?)))
}

unsafe fn pair(x: *const f64, w: *const f64, d: usize) -> Result<WeightedPair, Failure> {
    let x = as_slice(x, d, "x")?;
    let w = as_slice(w, d, "w")?;
    Ok(WeightedPair::new(x.to_vec(), w.to_vec())?)
}

/// Exact `sum_i w_i^2 x_i^2`.
///
/// # Safety
/// `x` and `w` must be valid for `d` reads; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_weighted_sq_norm(x: *const f64, w: *const f64, d: usize, out: *mut f64) -> WjlStatus {
    guard(|| put(out, pair(x, w, d)?.weighted_sq_norm(), "out"))
}

/// Exact `||x||_2 ||w||_2 / ||x||_w`.
///
/// # Safety
/// `x` and `w` must be valid for `d` reads; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn wjl_distortion(x: *const f64, w: *const f64, d: usize, out: *mut f64) -> WjlStatus {
    guard(|| put(out, pair(x, w, d)?.distortion()?, "out"))
}
