//! C ABI over the `sikwave` library.
//!
//! Every fallible function returns a [`SikStatus`]; on failure the message
//! is available from [`sik_last_error_message`] on the same thread. Codebooks
//! cross the boundary as opaque [`SikCodebook`] handles owned by the caller
//! and released with [`sik_codebook_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ndarray::{Array2, ArrayView2};
use sikwave::io::{read_artifact, write_artifact};
use sikwave::ranking::{chi2_statistic, ContingencyTable};
use sikwave::sikmeans::{fit, Assigner, Backend, SikmeansConfig};
use sikwave::{metrics, Class, Codebook, Error};

const CODEBOOK_FORMAT: &str = "codebook";

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SikStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Format = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SikBackend {
    Naive = 0,
    Fft = 1,
}

impl From<SikBackend> for Backend {
    fn from(b: SikBackend) -> Backend {
        match b {
            SikBackend::Naive => Backend::Naive,
            SikBackend::Fft => Backend::Fft,
        }
    }
}

/// Opaque codebook handle.
pub struct SikCodebook {
    inner: Codebook,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SikStatus {
    match e {
        Error::Numerical(_) => SikStatus::Numerical,
        Error::Io(_) => SikStatus::Io,
        Error::MissingArtifact(_) | Error::Format(_) | Error::Json(_) => SikStatus::Format,
        Error::Stage { source, .. } => status_of(source),
        _ => SikStatus::InvalidArgument,
    }
}

struct Fail(SikStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SikStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> SikStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SikStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SikStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SikStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn handle<'a>(cb: *const SikCodebook) -> Result<&'a Codebook, Fail> {
    cb.as_ref().map(|h| &h.inner).ok_or_else(|| null("codebook"))
}

fn class_of(tag: u32) -> Result<Class, Fail> {
    Class::from_index(tag as usize).map_err(Fail::from)
}

fn boxed(cb: Codebook) -> *mut SikCodebook {
    Box::into_raw(Box::new(SikCodebook { inner: cb }))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sik_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn sik_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cosine distance between two length-`n` vectors.
///
/// # Safety
/// `y` and `z` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_cosine_distance(y: *const f64, z: *const f64, n: usize, out: *mut f64) -> SikStatus {
    guard(|| {
        let d = sikwave::cosine_distance(slice(y, n, "y")?, slice(z, n, "z")?)?;
        write(out, d, "out")
    })
}

/// Pearson χ² of a waveform's 2×2 occurrence table.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_chi2_statistic(o0: u64, o1: u64, m0: u64, m1: u64, out: *mut f64) -> SikStatus {
    guard(|| {
        let t = ContingencyTable::new(0, o0, o1, m0, m1)?;
        write(out, chi2_statistic(&t)?, "out")
    })
}

/// Matthews correlation coefficient of a confusion matrix.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_mcc(tp: u64, fp: u64, tn: u64, fn_: u64, out: *mut f64) -> SikStatus {
    guard(|| {
        let c = metrics::ConfusionCounts { tp, fp, tn, fn_ };
        write(out, metrics::mcc(&c)?, "out")
    })
}

/// Builds a codebook from `k × p` row-major centroids; rows are normalized.
/// `class_tag` is 0 (interictal) or 1 (preictal).
///
/// # Safety
/// `centroids` must point to `k * p` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_from_centroids(
    centroids: *const f64,
    k: usize,
    p: usize,
    class_tag: u32,
    out: *mut *mut SikCodebook,
) -> SikStatus {
    guard(|| {
        let data = slice(centroids, k * p, "centroids")?.to_vec();
        let array = Array2::from_shape_vec((k, p), data).map_err(|e| Fail(SikStatus::InvalidArgument, e.to_string()))?;
        let cb = Codebook::new(array, class_of(class_tag)?)?;
        write(out, boxed(cb), "out")
    })
}

/// Fits a codebook to `n` row-major signals of length `l`.
///
/// # Safety
/// `signals` must point to `n * l` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_fit(
    signals: *const f64,
    n: usize,
    l: usize,
    k: usize,
    p: usize,
    max_iter: usize,
    n_init: usize,
    seed: u64,
    backend: SikBackend,
    class_tag: u32,
    out: *mut *mut SikCodebook,
) -> SikStatus {
    guard(|| {
        let x = slice(signals, n * l, "signals")?;
        let view = ArrayView2::from_shape((n, l), x).map_err(|e| Fail(SikStatus::InvalidArgument, e.to_string()))?;
        let cfg = SikmeansConfig {
            k,
            p,
            max_iter,
            n_init,
            seed,
            backend: backend.into(),
            ..SikmeansConfig::default()
        };
        let result = fit(view, &cfg, class_of(class_tag)?)?;
        write(out, boxed(result.codebook), "out")
    })
}

/// Reads a codebook written by [`sik_codebook_save`].
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_load(path_: *const c_char, out: *mut *mut SikCodebook) -> SikStatus {
    guard(|| {
        let cb: Codebook = read_artifact(path(path_)?, CODEBOOK_FORMAT, None)?;
        write(out, boxed(cb), "out")
    })
}

/// Writes a codebook as a versioned JSON artifact.
///
/// # Safety
/// `cb` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_save(cb: *const SikCodebook, path_: *const c_char) -> SikStatus {
    guard(|| {
        let cb = handle(cb)?;
        write_artifact(path(path_)?, CODEBOOK_FORMAT, "", cb)?;
        Ok(())
    })
}

/// Number of centroids, or 0 for a null handle.
///
/// # Safety
/// `cb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_k(cb: *const SikCodebook) -> usize {
    cb.as_ref().map_or(0, |h| h.inner.k())
}

/// Centroid length, or 0 for a null handle.
///
/// # Safety
/// `cb` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_p(cb: *const SikCodebook) -> usize {
    cb.as_ref().map_or(0, |h| h.inner.p())
}

/// Copies the `k × p` row-major centroids into `out`, which holds `len`
/// doubles.
///
/// # Safety
/// `cb` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_copy_centroids(cb: *const SikCodebook, out: *mut f64, len: usize) -> SikStatus {
    guard(|| {
        let cb = handle(cb)?;
        let need = cb.k() * cb.p();
        if len < need {
            return Err(Fail(SikStatus::InvalidArgument, format!("buffer holds {len}, need {need}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, v) in cb.centroids().iter().enumerate() {
            out.add(i).write(*v);
        }
        Ok(())
    })
}

/// Best centroid, shift and distance for one signal of length `l`.
///
/// # Safety
/// `cb` must be a live handle, `x` must point to `l` readable doubles and
/// the three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_assign(
    cb: *const SikCodebook,
    x: *const f64,
    l: usize,
    backend: SikBackend,
    centroid: *mut usize,
    shift: *mut usize,
    distance: *mut f64,
) -> SikStatus {
    guard(|| {
        let cb = handle(cb)?;
        let x = slice(x, l, "x")?;
        let a = Assigner::new(cb, l, backend.into())?.assign(x)?;
        write(centroid, a.centroid, "centroid")?;
        write(shift, a.shift, "shift")?;
        write(distance, a.distance, "distance")
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `cb` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sik_codebook_free(cb: *mut SikCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}
