//! C ABI over the exsis screening toolkit.
//!
//! # Safety
//!
//! Every exported function validates its pointer arguments and returns
//! [`ExsisStatus::NullPointer`] instead of dereferencing null. Non-null
//! pointers must be aligned and valid for the stated length for the whole
//! call. Panics never cross the boundary; they surface as
//! [`ExsisStatus::Panic`].
//!
//! On any status other than `EXSIS_STATUS_OK` a human-readable message is
//! stored per thread and can be read with [`exsis_last_error_message`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use exsis::bounds::{self, BoundInput};
use exsis::coherence::{welch_lower_bound, CoherenceReport};
use exsis::{io, model, screening, DesignMatrix, Error};
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExsisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed or degenerate data, e.g. a zero column.
    Data = 3,
    /// The requested bound's preconditions do not hold.
    Infeasible = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque design matrix with unit-norm columns.
pub struct ExsisDesign {
    inner: DesignMatrix,
}

/// Coherence summary of a design.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ExsisCoherence {
    pub mu: f64,
    pub nu: f64,
    pub welch: f64,
    pub argmax_i: usize,
    pub argmax_j: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> ExsisStatus {
    match err {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::EmptySupport
        | Error::NonFinite(_) => ExsisStatus::InvalidArgument,
        Error::Precondition(_) | Error::AdjustmentFailed { .. } => ExsisStatus::Infeasible,
        Error::Io(_) => ExsisStatus::Io,
        _ => ExsisStatus::Data,
    }
}

struct Failure(ExsisStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ExsisStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ExsisStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording the message of any failure or panic.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ExsisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            ExsisStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {msg}"));
            ExsisStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn design<'a>(handle: *const ExsisDesign) -> Result<&'a DesignMatrix, Failure> {
    handle.as_ref().map(|d| &d.inner).ok_or_else(|| null("design"))
}

fn boxed(inner: DesignMatrix) -> *mut ExsisDesign {
    Box::into_raw(Box::new(ExsisDesign { inner }))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next exsis call on the same thread.
#[no_mangle]
pub extern "C" fn exsis_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a design from `n * p` values and normalizes every column.
/// `row_major` selects the layout of `data`.
#[no_mangle]
pub unsafe extern "C" fn exsis_design_from_raw(
    data: *const f64,
    n: usize,
    p: usize,
    row_major: bool,
    out: *mut *mut ExsisDesign,
) -> ExsisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let len = n.checked_mul(p).ok_or_else(|| invalid("n * p overflows"))?;
        if len == 0 {
            return Err(invalid(format!("design must be non-empty, got {n} x {p}")));
        }
        let values = input(data, len, "data")?;
        let raw = if row_major {
            DMatrix::from_row_slice(n, p, values)
        } else {
            DMatrix::from_column_slice(n, p, values)
        };
        *out = boxed(model::normalize_columns(raw)?);
        Ok(())
    })
}

/// Loads a design from CSV or the binary matrix format, re-normalizing
/// columns that are not unit norm.
#[no_mangle]
pub unsafe extern "C" fn exsis_design_load(path: *const c_char, out: *mut *mut ExsisDesign) -> ExsisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not valid UTF-8"))?;
        *out = boxed(io::read_design(Path::new(path))?);
        Ok(())
    })
}

/// Releases a design. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn exsis_design_free(handle: *mut ExsisDesign) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn exsis_design_dims(handle: *const ExsisDesign, n: *mut usize, p: *mut usize) -> ExsisStatus {
    guard(|| {
        let x = design(handle)?;
        if n.is_null() || p.is_null() {
            return Err(null("dimension output"));
        }
        *n = x.n();
        *p = x.p();
        Ok(())
    })
}

/// `w = Xᵀy` into `w` of length `p`.
#[no_mangle]
pub unsafe extern "C" fn exsis_marginal_correlations(
    handle: *const ExsisDesign,
    y: *const f64,
    y_len: usize,
    w: *mut f64,
    w_len: usize,
) -> ExsisStatus {
    guard(|| {
        let x = design(handle)?;
        let y = input(y, y_len, "y")?;
        if w_len != x.p() {
            return Err(invalid(format!("w has length {w_len}, expected p = {}", x.p())));
        }
        let out = output(w, w_len, "w")?;
        out.copy_from_slice(&model::marginal_correlations(x, y)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn exsis_coherence_report(handle: *const ExsisDesign, out: *mut ExsisCoherence) -> ExsisStatus {
    guard(|| {
        let x = design(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let report = CoherenceReport::compute(x)?;
        *out = ExsisCoherence {
            mu: report.mu,
            nu: report.nu,
            welch: report.welch,
            argmax_i: report.argmax_pair.0,
            argmax_j: report.argmax_pair.1,
        };
        Ok(())
    })
}

/// Writes the `d` indices with the largest `|w_i|` in ascending order.
/// `threshold` may be null.
#[no_mangle]
pub unsafe extern "C" fn exsis_screen_top_d(
    w: *const f64,
    p: usize,
    d: usize,
    selected: *mut usize,
    threshold: *mut f64,
) -> ExsisStatus {
    guard(|| {
        let w = input(w, p, "w")?;
        let outcome = screening::screen_top_d(w, d)?;
        output(selected, d, "selected")?.copy_from_slice(&outcome.selected);
        if let Some(t) = threshold.as_mut() {
            *t = outcome.threshold_value;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn exsis_minimum_model_size(
    w: *const f64,
    p: usize,
    support: *const usize,
    k: usize,
    out: *mut usize,
) -> ExsisStatus {
    guard(|| {
        let w = input(w, p, "w")?;
        let support = input(support, k, "support")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = screening::minimum_model_size(w, support)?;
        Ok(())
    })
}

/// `√((p − n) / (n(p − 1)))`, zero when `p ≤ n`.
#[no_mangle]
pub extern "C" fn exsis_welch_bound(n: usize, p: usize) -> f64 {
    welch_lower_bound(n, p)
}

/// `⌈n / ln p⌉`.
#[no_mangle]
pub unsafe extern "C" fn exsis_d_n_over_logp(n: usize, p: usize, out: *mut usize) -> ExsisStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = bounds::d_simple_n_over_logp(n, p)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn exsis_d_sqrt_n(n: usize) -> usize {
    bounds::d_sqrt_n(n)
}

/// General-route screened size for a given `b`. Returns
/// `EXSIS_STATUS_INFEASIBLE` with the failed preconditions in the error
/// message when no size is certified.
#[no_mangle]
pub unsafe extern "C" fn exsis_d_general(
    n: usize,
    p: usize,
    k: usize,
    beta_min: f64,
    beta_l2: f64,
    sigma: f64,
    b: f64,
    out: *mut usize,
) -> ExsisStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut bound = BoundInput::new(n, p);
        bound.k = Some(k);
        bound.beta_min = Some(beta_min);
        bound.beta_l2 = beta_l2;
        bound.sigma = sigma;
        bound.b = Some(b);
        let result = bounds::d_general(&bound)?;
        match result.d_min {
            Some(d) => {
                *out = d;
                Ok(())
            }
            None => Err(Failure(ExsisStatus::Infeasible, result.deficits().join("; "))),
        }
    })
}
