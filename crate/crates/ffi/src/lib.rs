//! C interface to the trim solver.
//!
//! Objects cross the boundary as opaque pointers created by a `*_new` call and
//! released by the matching `*_free`. Every fallible call returns a status
//! code; on failure `cch_last_error_message` describes what went wrong on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cch_trim::airframe::Airframe;
use cch_trim::controls::{ControlId, MAX_SPEED};
use cch_trim::strategy::Strategist;
use cch_trim::trim::{StrategyKind, TrimSolution, Trimmer};
use cch_trim::{validate_config, HelicopterConfig, TrimError};

pub const CCH_OK: i32 = 0;
pub const CCH_ERR_NULL: i32 = 1;
pub const CCH_ERR_ARGUMENT: i32 = 2;
pub const CCH_ERR_CONFIG: i32 = 3;
pub const CCH_ERR_NO_CONVERGENCE: i32 = 4;
pub const CCH_ERR_MODEL: i32 = 5;
pub const CCH_ERR_IO: i32 = 6;
pub const CCH_ERR_PANIC: i32 = 7;

pub const CCH_STRATEGY_BL: i32 = 0;
pub const CCH_STRATEGY_STRIM: i32 = 1;
pub const CCH_STRATEGY_MPTRIM: i32 = 2;
pub const CCH_STRATEGY_HTRIM: i32 = 3;

/// Number of entries written by `cch_solution_controls`.
pub const CCH_CONTROL_COUNT: usize = 11;

/// A configured aircraft and solver.
pub struct CchTrimmer {
    inner: Trimmer,
}

/// One converged trim point.
pub struct CchSolution {
    inner: TrimSolution,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CchTrimSummary {
    /// m/s
    pub speed: f64,
    /// W
    pub power: f64,
    /// Upper plus lower rotor thrust, N.
    pub rotor_load: f64,
    /// N
    pub propeller_thrust: f64,
    pub lift_offset: f64,
    pub residual_norm: f64,
    pub iterations: u32,
    /// Nonzero when the lift-offset schedule could not be met.
    pub lift_offset_saturated: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CchSearchResult {
    /// deg
    pub delta_e: f64,
    /// W
    pub power: f64,
    /// %
    pub til: f64,
    /// Power saved against STrim at the same speed, %.
    pub reduction: f64,
    pub probes: u32,
    /// Nonzero when the optimum sits on the -15 deg end of the range.
    pub at_domain_edge: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &TrimError) -> i32 {
    match err {
        TrimError::MissingKey(_) | TrimError::BadValue { .. } | TrimError::Validation { .. } => CCH_ERR_CONFIG,
        TrimError::NonConvergence { .. } | TrimError::Rotor { .. } | TrimError::Inflow { .. } => CCH_ERR_NO_CONVERGENCE,
        TrimError::Sweep { source, .. } | TrimError::Search { source, .. } => status_of(source),
        TrimError::Usage(_) | TrimError::Domain(_) => CCH_ERR_ARGUMENT,
        TrimError::Io(_) => CCH_ERR_IO,
        TrimError::Model(_) | TrimError::Propeller(_) => CCH_ERR_MODEL,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CCH_OK,
        Ok(Err((code, message))) => {
            set_error(&message);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CCH_ERR_PANIC
        }
    }
}

fn trim_err(e: TrimError) -> (i32, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (i32, String) {
    (CCH_ERR_NULL, format!("`{what}` is null"))
}

fn strategy(code: i32) -> Result<StrategyKind, (i32, String)> {
    match code {
        CCH_STRATEGY_BL => Ok(StrategyKind::Baseline),
        CCH_STRATEGY_STRIM => Ok(StrategyKind::STrim),
        CCH_STRATEGY_MPTRIM => Ok(StrategyKind::MPTrim),
        CCH_STRATEGY_HTRIM => Ok(StrategyKind::HTrim),
        _ => Err((CCH_ERR_ARGUMENT, format!("unknown strategy code {code}"))),
    }
}

fn check_speed(speed: f64) -> Result<(), (i32, String)> {
    if (0.0..=MAX_SPEED).contains(&speed) {
        Ok(())
    } else {
        Err((CCH_ERR_ARGUMENT, format!("speed {speed} m/s outside [0, {MAX_SPEED}]")))
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (i32, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CCH_ERR_ARGUMENT, format!("`{what}` is not UTF-8")))
}

fn boxed(cfg: HelicopterConfig) -> *mut CchTrimmer {
    Box::into_raw(Box::new(CchTrimmer {
        inner: Trimmer::new(Airframe::new(cfg)),
    }))
}

/// Solver for the built-in aircraft.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cch_trimmer_new_default(out: *mut *mut CchTrimmer) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = boxed(HelicopterConfig::default_cch());
        Ok(())
    })
}

/// Solver for an aircraft given as TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cch_trimmer_new_from_toml(toml: *const c_char, out: *mut *mut CchTrimmer) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = validate_config(text(toml, "toml")?).map_err(trim_err)?;
        *out = boxed(cfg);
        Ok(())
    })
}

/// Solver for an aircraft read from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cch_trimmer_new_from_file(path: *const c_char, out: *mut *mut CchTrimmer) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = HelicopterConfig::from_file(text(path, "path")?).map_err(trim_err)?;
        *out = boxed(cfg);
        Ok(())
    })
}

/// # Safety
/// `trimmer` must come from a `cch_trimmer_new_*` call and not be used again.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cch_trimmer_free(trimmer: *mut CchTrimmer) {
    if !trimmer.is_null() {
        drop(Box::from_raw(trimmer));
    }
}

/// Trim one point from a cold start. `delta_e` is used by MPTrim and HTrim
/// only.
///
/// # Safety
/// `trimmer` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cch_trim(
    trimmer: *const CchTrimmer,
    speed: f64,
    strategy_code: i32,
    delta_e: f64,
    out: *mut *mut CchSolution,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = trimmer.as_ref().ok_or_else(|| null("trimmer"))?;
        let kind = strategy(strategy_code)?;
        check_speed(speed)?;
        if !delta_e.is_finite() {
            return Err((CCH_ERR_ARGUMENT, "delta_e must be finite".into()));
        }
        let sol = t.inner.trim(speed, kind, delta_e, None).map_err(trim_err)?;
        *out = Box::into_raw(Box::new(CchSolution { inner: sol }));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from `cch_trim` and not be used again. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cch_solution_free(solution: *mut CchSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cch_solution_summary(solution: *const CchSolution, out: *mut CchTrimSummary) -> i32 {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = CchTrimSummary {
            speed: s.speed(),
            power: s.power(),
            rotor_load: s.rotor_load(),
            propeller_thrust: s.propeller_thrust(),
            lift_offset: s.lift_offset,
            residual_norm: s.residual_norm,
            iterations: s.iterations as u32,
            lift_offset_saturated: u8::from(s.los_saturated),
        };
        Ok(())
    })
}

/// Writes the controls and attitudes in degrees, in the order
/// θ0, Δθ0, θ1c, Δθ1c, θ1s, Δθ1s, θprop, δe, δr, pitch, roll.
///
/// # Safety
/// `values` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cch_solution_controls(solution: *const CchSolution, values: *mut f64, len: usize) -> i32 {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.inner;
        if values.is_null() {
            return Err(null("values"));
        }
        if len < CCH_CONTROL_COUNT {
            return Err((CCH_ERR_ARGUMENT, format!("need room for {CCH_CONTROL_COUNT} values, got {len}")));
        }
        let out = std::slice::from_raw_parts_mut(values, CCH_CONTROL_COUNT);
        for (slot, id) in out.iter_mut().zip(ControlId::ALL) {
            *slot = s.controls.get(id);
        }
        Ok(())
    })
}

/// Elevator allocation at one speed: STrim reference, then the staged
/// descent with the given TIL ceiling (percent, `INFINITY` for none).
///
/// # Safety
/// `trimmer` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cch_elevator_search(
    trimmer: *const CchTrimmer,
    speed: f64,
    til_cap: f64,
    out: *mut CchSearchResult,
) -> i32 {
    guard(|| {
        let t = trimmer.as_ref().ok_or_else(|| null("trimmer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(til_cap > 0.0) {
            return Err((CCH_ERR_ARGUMENT, format!("TIL cap must be positive, got {til_cap}")));
        }
        check_speed(speed)?;
        let st = Strategist::new(&t.inner, &[speed]).map_err(trim_err)?;
        let kind = if til_cap.is_infinite() {
            StrategyKind::MPTrim
        } else {
            StrategyKind::HTrim
        };
        let (outcome, _) = st
            .search(speed, kind, til_cap)
            .map_err(|f| trim_err(f.into_trim_error(speed)))?;
        let reference = st.reference(speed).map(|r| r.power()).unwrap_or(f64::NAN);
        *out = CchSearchResult {
            delta_e: outcome.delta_e,
            power: outcome.power,
            til: outcome.til,
            reduction: cch_trim::strategy::reduction(outcome.power, reference),
            probes: outcome.probes as u32,
            at_domain_edge: u8::from(outcome.at_domain_edge),
        };
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cch_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cch_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
