//! C ABI over the solver. Objects are opaque handles created and released
//! through this interface; every fallible call returns an [`SlaprpStatus`] and
//! leaves a message for [`slaprp_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use slaprp::cli::SolutionFile;
use slaprp::model::{Instance, Problem};
use slaprp::search::{solve, SolveConfig, SolveResult, SolveStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaprpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, unknown option or bad option value.
    Parse = 3,
    /// The instance violates an invariant.
    InvalidInstance = 4,
    Io = 5,
    /// The solver failed (LP backend or internal error).
    Solve = 6,
    /// No plan is available.
    NoSolution = 7,
    /// A caller buffer is too small.
    BufferTooSmall = 8,
    Panic = 9,
}

/// Outcome of a finished solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaprpSolveStatus {
    Optimal = 0,
    /// A limit was reached with a plan in hand.
    Limit = 1,
    NoIncumbent = 2,
}

pub struct SlaprpInstance {
    problem: Problem,
}

pub struct SlaprpConfig {
    config: SolveConfig,
}

pub struct SlaprpResult {
    result: SolveResult,
    solution: Option<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Fallible<T> = Result<T, (SlaprpStatus, String)>;

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Fallible<()>) -> SlaprpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlaprpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlaprpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err((SlaprpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SlaprpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Fallible<&'a T> {
    p.as_ref().ok_or_else(|| (SlaprpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Fallible<&'a mut T> {
    p.as_mut().ok_or_else(|| (SlaprpStatus::NullPointer, "output pointer is null".to_string()))
}

fn problem_from(inst: Instance) -> Fallible<Box<SlaprpInstance>> {
    let problem = Problem::new(inst).map_err(|e| (SlaprpStatus::InvalidInstance, e.to_string()))?;
    Ok(Box::new(SlaprpInstance { problem }))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn slaprp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn slaprp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an instance from canonical JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn slaprp_instance_from_json(json: *const c_char, out: *mut *mut SlaprpInstance) -> SlaprpStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let inst = Instance::from_json(str_arg(json, "json")?).map_err(|e| (SlaprpStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(problem_from(inst)?);
        Ok(())
    })
}

/// Loads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn slaprp_instance_load(path: *const c_char, out: *mut *mut SlaprpInstance) -> SlaprpStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(Path::new(path)).map_err(|e| (SlaprpStatus::Io, format!("{path}: {e}")))?;
        let inst = Instance::from_json(&text).map_err(|e| (SlaprpStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(problem_from(inst)?);
        Ok(())
    })
}

/// Number of SKUs, orders and locations; any output pointer may be null.
///
/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn slaprp_instance_size(
    inst: *const SlaprpInstance,
    skus: *mut usize,
    orders: *mut usize,
    locations: *mut usize,
) -> SlaprpStatus {
    guard(|| {
        let p = &handle(inst, "instance")?.problem;
        for (dst, v) in [(skus, p.num_skus()), (orders, p.num_orders()), (locations, p.num_locations())] {
            if let Some(d) = dst.as_mut() {
                *d = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slaprp_instance_free(inst: *mut SlaprpInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Default solver options.
#[no_mangle]
pub extern "C" fn slaprp_config_new() -> *mut SlaprpConfig {
    Box::into_raw(Box::new(SlaprpConfig { config: SolveConfig::default() }))
}

/// Sets one option, using the same keys as the command-line config file
/// (`policy`, `branching`, `symmetry`, `time_limit`, ...).
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn slaprp_config_set(cfg: *mut SlaprpConfig, key: *const c_char, value: *const c_char) -> SlaprpStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or((SlaprpStatus::NullPointer, "config is null".to_string()))?;
        let (k, v) = (str_arg(key, "key")?, str_arg(value, "value")?);
        cfg.config.set(k, v).map_err(|e| (SlaprpStatus::Parse, e))
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slaprp_config_free(cfg: *mut SlaprpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Solves an instance. `Ok` means the search ran; query the outcome with
/// [`slaprp_result_status`]. A null `cfg` uses the defaults.
///
/// # Safety
/// `inst` must be a live handle, `cfg` null or a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slaprp_solve(
    inst: *const SlaprpInstance,
    cfg: *const SlaprpConfig,
    out: *mut *mut SlaprpResult,
) -> SlaprpStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let p = &handle(inst, "instance")?.problem;
        let config = cfg.as_ref().map_or_else(SolveConfig::default, |c| c.config.clone());
        let result = solve(p, &config).map_err(|e| (SlaprpStatus::Solve, e.to_string()))?;
        let solution = result.incumbent.as_ref().map(|inc| {
            let mut sol = SolutionFile::new(p, config.policy, inc);
            sol.stats = Some(result.stats.clone());
            sol.to_json()
        });
        *out = Box::into_raw(Box::new(SlaprpResult { result, solution }));
        Ok(())
    })
}

/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slaprp_result_status(res: *const SlaprpResult, out: *mut SlaprpSolveStatus) -> SlaprpStatus {
    guard(|| {
        let r = handle(res, "result")?;
        *out_ptr(out)? = match r.result.status {
            SolveStatus::Optimal => SlaprpSolveStatus::Optimal,
            SolveStatus::Limit => SlaprpSolveStatus::Limit,
            SolveStatus::NoIncumbent => SlaprpSolveStatus::NoIncumbent,
        };
        Ok(())
    })
}

/// Best objective, lower bound and processed node count. `objective` is only
/// written when a plan exists; any output pointer may be null.
///
/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn slaprp_result_bounds(
    res: *const SlaprpResult,
    objective: *mut i64,
    lower_bound: *mut i64,
    nodes: *mut usize,
) -> SlaprpStatus {
    guard(|| {
        let s = &handle(res, "result")?.result.stats;
        if let Some(lb) = lower_bound.as_mut() {
            *lb = s.lb;
        }
        if let Some(n) = nodes.as_mut() {
            *n = s.nodes;
        }
        match (s.ub, objective.as_mut()) {
            (None, Some(_)) => Err((SlaprpStatus::NoSolution, "no plan found".to_string())),
            (Some(u), Some(o)) => {
                *o = u;
                Ok(())
            }
            (_, None) => Ok(()),
        }
    })
}

/// Copies the location of every SKU (in instance order) into `buf`.
/// `len` is read as the buffer size and overwritten with the SKU count.
///
/// # Safety
/// `res` must be a live handle, `len` writable, `buf` valid for `*len` writes.
#[no_mangle]
pub unsafe extern "C" fn slaprp_result_assignment(res: *const SlaprpResult, buf: *mut usize, len: *mut usize) -> SlaprpStatus {
    guard(|| {
        let r = handle(res, "result")?;
        let len = out_ptr(len)?;
        let inc = r.result.incumbent.as_ref().ok_or((SlaprpStatus::NoSolution, "no plan found".to_string()))?;
        let n = inc.assignment.len();
        let cap = std::mem::replace(len, n);
        if cap < n {
            return Err((SlaprpStatus::BufferTooSmall, format!("need {n} entries, got {cap}")));
        }
        if n > 0 {
            if buf.is_null() {
                return Err((SlaprpStatus::NullPointer, "buffer is null".to_string()));
            }
            std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&inc.assignment);
        }
        Ok(())
    })
}

/// Solution file JSON (assignment, routes, costs, stats). The string is owned
/// by the caller and must be released with [`slaprp_string_free`].
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slaprp_result_solution_json(res: *const SlaprpResult, out: *mut *mut c_char) -> SlaprpStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let r = handle(res, "result")?;
        let text = r.solution.as_deref().ok_or((SlaprpStatus::NoSolution, "no plan found".to_string()))?;
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Name of a solve outcome, e.g. `optimal`; static storage.
#[no_mangle]
pub extern "C" fn slaprp_solve_status_name(s: SlaprpSolveStatus) -> *const c_char {
    match s {
        SlaprpSolveStatus::Optimal => c"optimal".as_ptr(),
        SlaprpSolveStatus::Limit => c"limit".as_ptr(),
        SlaprpSolveStatus::NoIncumbent => c"no_incumbent".as_ptr(),
    }
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slaprp_result_free(res: *mut SlaprpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slaprp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
