//! C interface to `isa-core`.
//!
//! Every object crosses the boundary as an opaque pointer created by an
//! `isa_*_new`/`isa_*_parse` function and released by the matching
//! `isa_*_free`. Fallible calls return an [`IsaStatus`]; on failure the
//! message is kept per thread and read with [`isa_last_error_message`].
//! Strings returned to the caller are owned by the caller and released with
//! [`isa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use isa_core::problem::{subpaving_json, ProblemFile};
use isa_core::setinv::{solve, Subpaving};
use isa_core::{ism_of_expr, Error, Expr, Grid, IntervalBox, IsmVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    InvalidArgument = 5,
    /// The iteration budget ran out; the partial result is still returned.
    BudgetExceeded = 6,
    Io = 7,
    Panic = 8,
}

/// Parsed expression.
pub struct IsaExpr(Expr);

/// Interval superposition models of every output of an expression.
pub struct IsaModel(IsmVector);

/// Validated set-inversion problem.
pub struct IsaProblem(isa_core::setinv::GpeProblem);

/// Interior and boundary boxes of a solved problem.
pub struct IsaSubpaving(Subpaving);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IsaStatus {
    match e {
        Error::Parse { .. } | Error::UnknownIdentifier { .. } | Error::Arity { .. } | Error::Json(_) => IsaStatus::Parse,
        Error::DomainViolation { .. } | Error::EmptyOperand => IsaStatus::Domain,
        Error::BudgetExceeded { .. } => IsaStatus::BudgetExceeded,
        Error::Io(_) => IsaStatus::Io,
        _ => IsaStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> IsaStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Run `f`, converting panics into [`IsaStatus::Panic`].
fn guard(f: impl FnOnce() -> IsaStatus) -> IsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            IsaStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(format!("`{}` is null", stringify!($p)));
            return IsaStatus::NullPointer;
        })+
    };
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, IsaStatus> {
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not valid UTF-8".into());
        IsaStatus::InvalidUtf8
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

unsafe fn bounds(lo: *const f64, hi: *const f64, n: usize) -> Result<IntervalBox, Error> {
    let lo = std::slice::from_raw_parts(lo, n);
    let hi = std::slice::from_raw_parts(hi, n);
    IntervalBox::from_bounds(&lo.iter().copied().zip(hi.iter().copied()).collect::<Vec<_>>())
}

/// Message of the last failed call on this thread, or null. Free with
/// [`isa_string_free`].
#[no_mangle]
pub extern "C" fn isa_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a single-output expression over `x1, x2, ...`.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_parse(text: *const c_char, out: *mut *mut IsaExpr) -> IsaStatus {
    non_null!(text, out);
    guard(|| {
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Expr::parse(text) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(IsaExpr(e)));
                IsaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `e` must come from [`isa_expr_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_free(e: *mut IsaExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// # Safety
/// `e` must be a live expression handle.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_n_vars(e: *const IsaExpr) -> usize {
    e.as_ref().map_or(0, |e| e.0.n_vars())
}

/// Printed form of output 0. Free with [`isa_string_free`].
///
/// # Safety
/// `e` must be a live expression handle.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_to_string(e: *const IsaExpr) -> *mut c_char {
    e.as_ref().map_or(ptr::null_mut(), |e| into_c_string(e.0.output_text(0)))
}

/// Evaluate output 0 at the point `x[0..n]`.
///
/// # Safety
/// `x` must hold `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_eval(e: *const IsaExpr, x: *const f64, n: usize, out: *mut f64) -> IsaStatus {
    non_null!(e, x, out);
    guard(|| {
        let e = &(*e).0;
        if n != e.n_vars() {
            return fail(Error::DimensionMismatch {
                expected: e.n_vars(),
                found: n,
            });
        }
        match e.eval_real(std::slice::from_raw_parts(x, n)) {
            Ok(v) => {
                *out = v[0];
                IsaStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Natural interval extension of output 0 over the box `[lo, hi]`.
///
/// # Safety
/// `lo` and `hi` must hold `n` doubles; `out_lo` and `out_hi` be writable.
#[no_mangle]
pub unsafe extern "C" fn isa_expr_eval_interval(
    e: *const IsaExpr,
    lo: *const f64,
    hi: *const f64,
    n: usize,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> IsaStatus {
    non_null!(e, lo, hi, out_lo, out_hi);
    guard(|| {
        let r = bounds(lo, hi, n).and_then(|b| (*e).0.eval_interval(&b));
        match r {
            Ok(v) => {
                *out_lo = v[0].lo();
                *out_hi = v[0].hi();
                IsaStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Build the model of `e` on a grid of `resolution` cells per coordinate
/// over the box `[lo, hi]`.
///
/// # Safety
/// `lo` and `hi` must hold `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn isa_model_new(
    e: *const IsaExpr,
    lo: *const f64,
    hi: *const f64,
    n: usize,
    resolution: usize,
    out: *mut *mut IsaModel,
) -> IsaStatus {
    non_null!(e, lo, hi, out);
    guard(|| {
        let r = bounds(lo, hi, n)
            .and_then(|b| Grid::new(b, resolution))
            .and_then(|g| ism_of_expr(&(*e).0, &Arc::new(g)));
        match r {
            Ok(m) => {
                *out = Box::into_raw(Box::new(IsaModel(m)));
                IsaStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// # Safety
/// `m` must come from [`isa_model_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isa_model_free(m: *mut IsaModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Range enclosure of output 0 of the model.
///
/// # Safety
/// `m` must be a live model handle; `out_lo` and `out_hi` writable.
#[no_mangle]
pub unsafe extern "C" fn isa_model_range(m: *const IsaModel, out_lo: *mut f64, out_hi: *mut f64) -> IsaStatus {
    non_null!(m, out_lo, out_hi);
    guard(|| {
        let r = (&(*m).0)[0].range();
        *out_lo = r.lo();
        *out_hi = r.hi();
        IsaStatus::Ok
    })
}

/// Model value of output 0 at the point `x[0..n]`.
///
/// # Safety
/// `x` must hold `n` doubles; `out_lo` and `out_hi` be writable.
#[no_mangle]
pub unsafe extern "C" fn isa_model_eval(
    m: *const IsaModel,
    x: *const f64,
    n: usize,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> IsaStatus {
    non_null!(m, x, out_lo, out_hi);
    guard(|| match (&(*m).0)[0].eval(std::slice::from_raw_parts(x, n)) {
        Ok(v) => {
            *out_lo = v.lo();
            *out_hi = v.hi();
            IsaStatus::Ok
        }
        Err(err) => fail(err),
    })
}

/// Load and validate a problem from its JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isa_problem_from_json(json: *const c_char, out: *mut *mut IsaProblem) -> IsaStatus {
    non_null!(json, out);
    guard(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ProblemFile::from_json(text).and_then(|f| f.to_problem()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(IsaProblem(p)));
                IsaStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// # Safety
/// `p` must come from [`isa_problem_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isa_problem_free(p: *mut IsaProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solve the problem. On [`IsaStatus::BudgetExceeded`] `out` still receives
/// the partial subpaving.
///
/// # Safety
/// `p` must be a live problem handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isa_problem_solve(p: *const IsaProblem, out: *mut *mut IsaSubpaving) -> IsaStatus {
    non_null!(p, out);
    guard(|| {
        let (mut sp, status) = match solve(&(*p).0) {
            Ok(sp) => (sp, IsaStatus::Ok),
            Err(Error::BudgetExceeded { iterations, partial }) => {
                set_error(format!("iteration budget exhausted after {iterations} iterations"));
                (*partial, IsaStatus::BudgetExceeded)
            }
            Err(err) => return fail(err),
        };
        sp.canonicalize();
        *out = Box::into_raw(Box::new(IsaSubpaving(sp)));
        status
    })
}

/// # Safety
/// `s` must come from [`isa_problem_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_free(s: *mut IsaSubpaving) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live subpaving handle.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_interior_count(s: *const IsaSubpaving) -> usize {
    s.as_ref().map_or(0, |s| s.0.interior.len())
}

/// # Safety
/// `s` must be a live subpaving handle.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_boundary_count(s: *const IsaSubpaving) -> usize {
    s.as_ref().map_or(0, |s| s.0.boundary.len())
}

/// # Safety
/// `s` must be a live subpaving handle.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_iterations(s: *const IsaSubpaving) -> u64 {
    s.as_ref().map_or(0, |s| s.0.stats.iterations)
}

/// Copy box `index` into `lo[0..n]` and `hi[0..n]`. Boxes are numbered
/// interior first, then boundary.
///
/// # Safety
/// `lo` and `hi` must have room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_box(
    s: *const IsaSubpaving,
    index: usize,
    lo: *mut f64,
    hi: *mut f64,
    n: usize,
) -> IsaStatus {
    non_null!(s, lo, hi);
    guard(|| {
        let sp = &(*s).0;
        let total = sp.interior.len() + sp.boundary.len();
        let Some(b) = sp.interior.iter().chain(&sp.boundary).nth(index) else {
            return fail(Error::IndexOutOfRange { index, len: total });
        };
        if b.dim() != n {
            return fail(Error::DimensionMismatch {
                expected: b.dim(),
                found: n,
            });
        }
        for (k, c) in b.iter().enumerate() {
            *lo.add(k) = c.lo();
            *hi.add(k) = c.hi();
        }
        IsaStatus::Ok
    })
}

/// Subpaving as JSON. Free with [`isa_string_free`].
///
/// # Safety
/// `s` must be a live subpaving handle.
#[no_mangle]
pub unsafe extern "C" fn isa_subpaving_to_json(s: *const IsaSubpaving) -> *mut c_char {
    s.as_ref().map_or(ptr::null_mut(), |s| into_c_string(subpaving_json(&s.0)))
}
