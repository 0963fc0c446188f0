//! C interface to the carleman solvers.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_solve` calls and
//! released by the matching `*_free`. Every fallible call returns a [`CarlemanStatus`];
//! on failure the message is available from [`carleman_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use carleman::cli::{exit_code, run_loaded, Command, EXIT_CONFIG, EXIT_SOLVER, EXIT_TOLERANCE};
use carleman::config::{Built, LoadedConfig};
use carleman::dbar::{solve_gamma, GammaField};
use carleman::error::Error;
use carleman::nls::{psi_extract, times, NlsSolver};
use num_complex::Complex64;

/// Result of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarlemanStatus {
    Ok = 0,
    /// A check missed its tolerance (only from [`carleman_run`]).
    Tolerance = 1,
    /// Invalid configuration or argument.
    Config = 2,
    /// The solver failed (singular system, overflow, ...).
    Solver = 3,
    /// A required pointer was null or a string was not UTF-8.
    InvalidPointer = 4,
    /// Internal panic; the handle involved should be freed and not reused.
    Panic = 5,
}

/// A complex number as two doubles.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CarlemanComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for CarlemanComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<CarlemanComplex> for Complex64 {
    fn from(z: CarlemanComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// A parsed scenario with its grid and field.
pub struct CarlemanScenario {
    loaded: LoadedConfig,
    built: Built,
}

/// A solved Γ.
pub struct CarlemanGamma {
    gamma: GammaField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> CarlemanStatus {
    match exit_code(e) {
        EXIT_CONFIG => CarlemanStatus::Config,
        _ => CarlemanStatus::Solver,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CarlemanStatus, String)>) -> CarlemanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CarlemanStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CarlemanStatus::Panic
        }
    }
}

fn core(e: Error) -> (CarlemanStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CarlemanStatus, String) {
    (CarlemanStatus::InvalidPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CarlemanStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (CarlemanStatus::InvalidPointer, format!("{what} is not UTF-8")))
}

unsafe fn times_arg(t: *const CarlemanComplex, n: usize) -> Result<Vec<Complex64>, (CarlemanStatus, String)> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if t.is_null() {
        return Err(null("times"));
    }
    Ok(std::slice::from_raw_parts(t, n).iter().map(|&z| z.into()).collect())
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn carleman_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn carleman_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn carleman_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON scenario (empty string for all defaults) and builds its grid and field.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn carleman_scenario_new(json: *const c_char, out: *mut *mut CarlemanScenario) -> CarlemanStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let loaded = LoadedConfig::from_json_str(text, &[]).map_err(core)?;
        let built = loaded.config.build().map_err(core)?;
        *out = Box::into_raw(Box::new(CarlemanScenario { loaded, built }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`carleman_scenario_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn carleman_scenario_free(s: *mut CarlemanScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of quadrature nodes, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn carleman_scenario_node_count(s: *const CarlemanScenario) -> usize {
    s.as_ref().map_or(0, |s| s.built.grid.len())
}

/// Copies the 64-character hex config hash and a NUL into `buf` (at least 65 bytes).
///
/// # Safety
/// `s` must be a live handle and `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn carleman_scenario_hash(
    s: *const CarlemanScenario,
    buf: *mut c_char,
    len: usize,
) -> CarlemanStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let h = s.loaded.hash.as_bytes();
        if len < h.len() + 1 {
            return Err((CarlemanStatus::Config, format!("buffer needs {} bytes", h.len() + 1)));
        }
        ptr::copy_nonoverlapping(h.as_ptr().cast::<c_char>(), buf, h.len());
        *buf.add(h.len()) = 0;
        Ok(())
    })
}

/// Solves Γ for the scenario's field dressed at `times` (n = 0 for the undeformed field).
///
/// # Safety
/// `s` must be a live handle, `times` readable for `n` entries, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn carleman_solve(
    s: *const CarlemanScenario,
    times: *const CarlemanComplex,
    n: usize,
    out: *mut *mut CarlemanGamma,
) -> CarlemanStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let t = times_arg(times, n)?;
        let gamma = if t.is_empty() {
            solve_gamma(&s.built.grid, &s.built.field)
        } else {
            s.built.deformation().and_then(|d| d.solve(&t))
        }
        .map_err(core)?;
        *out = Box::into_raw(Box::new(CarlemanGamma { gamma }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`carleman_solve`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn carleman_gamma_free(g: *mut CarlemanGamma) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Matrix dimension r of Γ, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn carleman_gamma_dim(g: *const CarlemanGamma) -> usize {
    g.as_ref().map_or(0, |g| g.gamma.dim())
}

unsafe fn write_matrix(m: &carleman::linalg::CMat, out: *mut CarlemanComplex) {
    let r = m.nrows();
    for i in 0..r {
        for j in 0..m.ncols() {
            *out.add(i * r + j) = m[(i, j)].into();
        }
    }
}

/// Γ(z), written row-major into `out` (r·r entries).
///
/// # Safety
/// `g` must be a live handle and `out` writable for r·r entries.
#[no_mangle]
pub unsafe extern "C" fn carleman_gamma_evaluate(
    g: *const CarlemanGamma,
    z: CarlemanComplex,
    out: *mut CarlemanComplex,
) -> CarlemanStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("gamma"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let z: Complex64 = z.into();
        if !z.is_finite() {
            return Err((CarlemanStatus::Config, format!("z = {z} is not finite")));
        }
        write_matrix(&g.gamma.evaluate(z), out);
        Ok(())
    })
}

/// Γ₁, the coefficient of 1/z at infinity, row-major into `out` (r·r entries).
///
/// # Safety
/// `g` must be a live handle and `out` writable for r·r entries.
#[no_mangle]
pub unsafe extern "C" fn carleman_gamma_residue(g: *const CarlemanGamma, out: *mut CarlemanComplex) -> CarlemanStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("gamma"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_matrix(&g.gamma.gamma1, out);
        Ok(())
    })
}

/// max over nodes of |det Γ − 1|, or NaN for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn carleman_gamma_unimodularity(g: *const CarlemanGamma) -> f64 {
    g.as_ref().map_or(f64::NAN, |g| g.gamma.unimodularity_residual())
}

/// log det₂(I − 𝒦) of the scenario's kernel pair dressed at `times`.
///
/// # Safety
/// `s` must be a live handle, `times` readable for `n` entries, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn carleman_log_det2(
    s: *const CarlemanScenario,
    times: *const CarlemanComplex,
    n: usize,
    out: *mut CarlemanComplex,
) -> CarlemanStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = times_arg(times, n)?;
        if s.built.pair.is_none() {
            return Err((CarlemanStatus::Config, "the scenario field is not given by a kernel pair".into()));
        }
        let v = s.built.deformation().and_then(|d| d.log_det2(&t)).map_err(core)?;
        *out = v.into();
        Ok(())
    })
}

/// ψ(x, t, t₃) for an `nls_beta` scenario.
///
/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn carleman_nls_psi(
    s: *const CarlemanScenario,
    x: f64,
    t: f64,
    t3: f64,
    out: *mut CarlemanComplex,
) -> CarlemanStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = s.built.nls.clone().ok_or_else(|| (CarlemanStatus::Config, "not an nls_beta scenario".to_string()))?;
        let solver = NlsSolver::on_grid(sc, &s.built.grid).map_err(core)?;
        let g = solver.solve(&times(x, t, Some(t3))).map_err(core)?;
        *out = psi_extract(&g).psi.into();
        Ok(())
    })
}

/// Runs a subcommand (e.g. "solve-dbar") on a JSON scenario and writes its report files.
///
/// Returns `Tolerance` when the run finished but a check failed.
///
/// # Safety
/// `command` and `json` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn carleman_run(command: *const c_char, json: *const c_char) -> CarlemanStatus {
    guard(|| {
        let name = str_arg(command, "command")?;
        let cmd =
            Command::from_name(name).ok_or_else(|| (CarlemanStatus::Config, format!("unknown command `{name}`")))?;
        let loaded = LoadedConfig::from_json_str(str_arg(json, "json")?, &[]).map_err(core)?;
        let out = run_loaded(cmd, &loaded);
        match out.code {
            EXIT_CONFIG => Err((CarlemanStatus::Config, out.message)),
            EXIT_SOLVER => Err((CarlemanStatus::Solver, out.message)),
            EXIT_TOLERANCE => Err((CarlemanStatus::Tolerance, out.message)),
            _ => Ok(()),
        }
    })
}
