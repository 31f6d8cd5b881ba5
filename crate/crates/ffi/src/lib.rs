//! C ABI for `foliation-lab`.
//!
//! Every fallible function returns an [`FlStatus`]; on failure the message is available
//! from [`fl_last_error_message`] on the same thread. Options, orbit sets and continuation
//! traces are opaque handles that the caller releases with the matching `*_free`.

use foliation_lab::continuation::{
    continue_orbit, find_escape_epsilon, ContinuationTrace, EpsPath, Terminal,
};
use foliation_lab::integrate::{poincare_iter, LiftOptions};
use foliation_lab::melnikov::{map_resonant_coefficient, pontryagin_integral, MelnikovEval};
use foliation_lab::orbits::{find_orbits, winding_count, OrbitRecord};
use foliation_lab::{Annulus, Complex64, Error, FoliationParams};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlComplex {
    pub re: f64,
    pub im: f64,
}

impl From<FlComplex> for Complex64 {
    fn from(z: FlComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for FlComplex {
    fn from(z: Complex64) -> Self {
        FlComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutsideChart = 3,
    BranchOverflow = 4,
    CriticalLeaf = 5,
    SingularDenominator = 6,
    LiftIncomplete = 7,
    ContourThroughZero = 8,
    NoConvergence = 9,
    EmptyResult = 10,
    IndexOutOfRange = 11,
    Internal = 12,
    Panic = 13,
}

/// How a continuation march ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlTerminal {
    ReachedTarget = 0,
    EscapeConfirmed = 1,
    StepUnderflow = 2,
    BranchCollision = 3,
    IntegrationFailure = 4,
}

/// Integrator settings. Create with [`fl_options_new`].
pub struct FlOptions {
    inner: LiftOptions,
}

/// Certified periodic orbits returned by [`fl_find_orbits`].
pub struct FlOrbitSet {
    orbits: Vec<OrbitRecord>,
}

/// A continuation trace returned by [`fl_continue`].
pub struct FlTrace {
    inner: ContinuationTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FlStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::DegenerateLeadingTerm => {
            FlStatus::InvalidArgument
        }
        Error::CriticalLeaf => FlStatus::CriticalLeaf,
        Error::SingularDenominator { .. } => FlStatus::SingularDenominator,
        Error::Lift { .. } => FlStatus::LiftIncomplete,
        Error::OutsideChart(_) => FlStatus::OutsideChart,
        Error::BranchOverflow { .. } => FlStatus::BranchOverflow,
        Error::ContourThroughZero { .. } => FlStatus::ContourThroughZero,
        Error::NoConvergence { .. } | Error::ConvergedToZero | Error::PeriodTooLow { .. } => {
            FlStatus::NoConvergence
        }
        Error::EmptyResult { .. } => FlStatus::EmptyResult,
        Error::Io(_) => FlStatus::Internal,
    }
}

/// Run `f`, recording the error message and turning panics into `FlStatus::Panic`.
fn guarded<F>(f: F) -> FlStatus
where
    F: FnOnce() -> Result<(), FlFailure>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    // Handles are only written after validation succeeds, so a panic leaves them intact.
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(FlFailure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(message);
            FlStatus::Panic
        }
    }
}

struct FlFailure(FlStatus, String);

impl From<Error> for FlFailure {
    fn from(e: Error) -> Self {
        FlFailure(status_of(&e), e.to_string())
    }
}

fn null_pointer(what: &str) -> FlFailure {
    FlFailure(FlStatus::NullPointer, format!("{what} is null"))
}

fn check_finite(z: FlComplex, what: &str) -> Result<Complex64, FlFailure> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z.into())
    } else {
        Err(FlFailure(
            FlStatus::InvalidArgument,
            format!("{what} must be finite"),
        ))
    }
}

fn params(a: FlComplex, eps: FlComplex) -> Result<FoliationParams, FlFailure> {
    Ok(FoliationParams::new(
        check_finite(a, "a")?,
        check_finite(eps, "eps")?,
    )?)
}

/// Options of `opts`, or the defaults when it is null.
unsafe fn options_or_default(opts: *const FlOptions) -> LiftOptions {
    opts.as_ref().map(|o| o.inner).unwrap_or_default()
}

/// Message of the last failed call on this thread, or null. The pointer stays valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default integrator options. Release with [`fl_options_free`].
#[no_mangle]
pub extern "C" fn fl_options_new() -> *mut FlOptions {
    Box::into_raw(Box::new(FlOptions {
        inner: LiftOptions::default(),
    }))
}

/// # Safety
/// `opts` must come from [`fl_options_new`] and not be freed already, or be null.
#[no_mangle]
pub unsafe extern "C" fn fl_options_free(opts: *mut FlOptions) {
    if !opts.is_null() {
        drop(Box::from_raw(opts));
    }
}

/// # Safety
/// `opts` must be a live handle from [`fl_options_new`].
#[no_mangle]
pub unsafe extern "C" fn fl_options_set_tolerances(
    opts: *mut FlOptions,
    rel_tol: f64,
    abs_tol: f64,
    max_steps: usize,
) -> FlStatus {
    let opts = opts.as_mut();
    guarded(move || {
        let opts = opts.ok_or_else(|| null_pointer("opts"))?;
        let candidate = LiftOptions {
            rel_tol,
            abs_tol,
            max_steps,
            ..opts.inner
        };
        candidate.validate()?;
        opts.inner = candidate;
        Ok(())
    })
}

/// Set the guard annulus `rho < |h| < r_outer` outside which lifts are abandoned.
///
/// # Safety
/// `opts` must be a live handle from [`fl_options_new`].
#[no_mangle]
pub unsafe extern "C" fn fl_options_set_guard(
    opts: *mut FlOptions,
    rho: f64,
    r_outer: f64,
) -> FlStatus {
    let opts = opts.as_mut();
    guarded(move || {
        let opts = opts.ok_or_else(|| null_pointer("opts"))?;
        opts.inner.guard = Annulus::new(rho, r_outer)?;
        Ok(())
    })
}

/// `P^k(u)` and its derivative. `opts` may be null for the defaults.
///
/// # Safety
/// `out_value` and `out_derivative` must be valid for writes; `opts` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_poincare(
    a: FlComplex,
    eps: FlComplex,
    u: FlComplex,
    k: usize,
    opts: *const FlOptions,
    out_value: *mut FlComplex,
    out_derivative: *mut FlComplex,
) -> FlStatus {
    let opts = options_or_default(opts);
    guarded(move || {
        if out_value.is_null() || out_derivative.is_null() {
            return Err(null_pointer("output"));
        }
        let p = params(a, eps)?;
        let v = poincare_iter(check_finite(u, "u")?, k, &p, &opts)?;
        *out_value = v.value.into();
        *out_derivative = v.derivative.into();
        Ok(())
    })
}

/// Resonant Melnikov integral by quadrature with `n_points` nodes, and its closed form.
///
/// # Safety
/// `out_quadrature` and `out_closed_form` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_melnikov(
    m: usize,
    u: FlComplex,
    n_points: usize,
    out_quadrature: *mut FlComplex,
    out_closed_form: *mut FlComplex,
) -> FlStatus {
    guarded(move || {
        if out_quadrature.is_null() || out_closed_form.is_null() {
            return Err(null_pointer("output"));
        }
        let e = MelnikovEval::evaluate(m, check_finite(u, "u")?, n_points)?;
        *out_quadrature = e.quadrature_value.into();
        *out_closed_form = e.closed_form_value.into();
        Ok(())
    })
}

/// Coefficient of `a u^(m+1)` in `P^m(u) - u` at `eps = i/m`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_map_resonant_coefficient(m: usize, out: *mut FlComplex) -> FlStatus {
    guarded(move || {
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        if m < 1 {
            return Err(FlFailure(
                FlStatus::InvalidArgument,
                "m must be at least 1".into(),
            ));
        }
        *out = map_resonant_coefficient(m).into();
        Ok(())
    })
}

/// Abelian integral of the perturbation over the real oval `H = h`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_pontryagin(
    a: FlComplex,
    h: f64,
    n_points: usize,
    out: *mut FlComplex,
) -> FlStatus {
    guarded(move || {
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let p = params(a, FlComplex { re: 0.0, im: 0.0 })?;
        *out = pontryagin_integral(h, &p, n_points)?.into();
        Ok(())
    })
}

/// Number of m-periodic points inside `|u - center| < radius`.
///
/// # Safety
/// `out_count` must be valid for writes; `opts` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_winding_count(
    a: FlComplex,
    eps: FlComplex,
    m: usize,
    center: FlComplex,
    radius: f64,
    n_samples: usize,
    opts: *const FlOptions,
    out_count: *mut i64,
) -> FlStatus {
    let opts = options_or_default(opts);
    guarded(move || {
        if out_count.is_null() {
            return Err(null_pointer("out_count"));
        }
        let p = params(a, eps)?;
        let c = check_finite(center, "center")?;
        *out_count = winding_count(c, radius, m, &p, n_samples, &opts)?;
        Ok(())
    })
}

/// Certified m-periodic orbits. On success `*out_set` receives a handle to release with
/// [`fl_orbit_set_free`]; on `FL_STATUS_EMPTY_RESULT` it is set to null.
///
/// # Safety
/// `out_set` must be valid for writes; `opts` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_find_orbits(
    a: FlComplex,
    eps: FlComplex,
    m: usize,
    opts: *const FlOptions,
    out_set: *mut *mut FlOrbitSet,
) -> FlStatus {
    let opts = options_or_default(opts);
    guarded(move || {
        if out_set.is_null() {
            return Err(null_pointer("out_set"));
        }
        *out_set = ptr::null_mut();
        let p = params(a, eps)?;
        let orbits = find_orbits(m, &p, &opts)?;
        *out_set = Box::into_raw(Box::new(FlOrbitSet { orbits }));
        Ok(())
    })
}

/// # Safety
/// `set` must come from [`fl_find_orbits`] and not be freed already, or be null.
#[no_mangle]
pub unsafe extern "C" fn fl_orbit_set_free(set: *mut FlOrbitSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of orbits in the set, 0 for null.
///
/// # Safety
/// `set` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_orbit_set_len(set: *const FlOrbitSet) -> usize {
    set.as_ref().map_or(0, |s| s.orbits.len())
}

unsafe fn orbit_at<'a>(set: *const FlOrbitSet, index: usize) -> Result<&'a OrbitRecord, FlFailure> {
    let set = set.as_ref().ok_or_else(|| null_pointer("set"))?;
    set.orbits.get(index).ok_or_else(|| {
        FlFailure(
            FlStatus::IndexOutOfRange,
            format!(
                "orbit index {index} out of range ({} orbits)",
                set.orbits.len()
            ),
        )
    })
}

/// Copy the points `u_1..u_m` of orbit `index` into `out_points` (capacity `capacity`);
/// `*out_len` receives `m` even when the buffer is too small.
///
/// # Safety
/// `set` must be live; `out_points` must hold `capacity` elements; `out_len` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_orbit_set_points(
    set: *const FlOrbitSet,
    index: usize,
    out_points: *mut FlComplex,
    capacity: usize,
    out_len: *mut usize,
) -> FlStatus {
    guarded(move || {
        let orbit = orbit_at(set, index)?;
        if out_len.is_null() {
            return Err(null_pointer("out_len"));
        }
        *out_len = orbit.points.len();
        if capacity < orbit.points.len() {
            return Err(FlFailure(
                FlStatus::InvalidArgument,
                format!(
                    "buffer holds {capacity} points, orbit has {}",
                    orbit.points.len()
                ),
            ));
        }
        if out_points.is_null() {
            return Err(null_pointer("out_points"));
        }
        for (i, &p) in orbit.points.iter().enumerate() {
            *out_points.add(i) = p.into();
        }
        Ok(())
    })
}

/// Residual `|P^m(u_1) - u_1|`, multiplier `d(P^m)/du` and separation of orbit `index`.
///
/// # Safety
/// `set` must be live; every output pointer must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_orbit_set_diagnostics(
    set: *const FlOrbitSet,
    index: usize,
    out_residual: *mut f64,
    out_multiplier: *mut FlComplex,
    out_separation: *mut f64,
) -> FlStatus {
    guarded(move || {
        let orbit = orbit_at(set, index)?;
        if out_residual.is_null() || out_multiplier.is_null() || out_separation.is_null() {
            return Err(null_pointer("output"));
        }
        *out_residual = orbit.residual;
        *out_multiplier = orbit.multiplier.into();
        *out_separation = orbit.separation;
        Ok(())
    })
}

/// Continue orbit `index` of `set` along the polyline `path` (starting at the orbit's
/// `eps`), judging escape against `rho < |h| < r_outer`. On success `*out_trace` receives a
/// handle to release with [`fl_trace_free`].
///
/// # Safety
/// `set` must be live; `path` must hold `n_vertices` elements; `out_trace` must be valid
/// for writes; `opts` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_continue(
    set: *const FlOrbitSet,
    index: usize,
    path: *const FlComplex,
    n_vertices: usize,
    rho: f64,
    r_outer: f64,
    opts: *const FlOptions,
    out_trace: *mut *mut FlTrace,
) -> FlStatus {
    let opts = options_or_default(opts);
    guarded(move || {
        if out_trace.is_null() {
            return Err(null_pointer("out_trace"));
        }
        *out_trace = ptr::null_mut();
        let orbit = orbit_at(set, index)?;
        if path.is_null() {
            return Err(null_pointer("path"));
        }
        let vertices = std::slice::from_raw_parts(path, n_vertices)
            .iter()
            .map(|&z| check_finite(z, "path vertex"))
            .collect::<Result<Vec<_>, _>>()?;
        let eps_path = EpsPath::with_default_steps(vertices)?;
        let annulus = Annulus::new(rho, r_outer)?;
        let inner = continue_orbit(orbit, &eps_path, &annulus, &opts)?;
        *out_trace = Box::into_raw(Box::new(FlTrace { inner }));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`fl_continue`] and not be freed already, or be null.
#[no_mangle]
pub unsafe extern "C" fn fl_trace_free(trace: *mut FlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of accepted samples, 0 for null.
///
/// # Safety
/// `trace` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_trace_len(trace: *const FlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// `eps`, base point `u_1` and loop containment in `A0` of sample `index`.
///
/// # Safety
/// `trace` must be live; every output pointer must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_trace_sample(
    trace: *const FlTrace,
    index: usize,
    out_eps: *mut FlComplex,
    out_base_point: *mut FlComplex,
    out_loop_in_a0: *mut bool,
) -> FlStatus {
    guarded(move || {
        let trace = trace.as_ref().ok_or_else(|| null_pointer("trace"))?;
        if out_eps.is_null() || out_base_point.is_null() || out_loop_in_a0.is_null() {
            return Err(null_pointer("output"));
        }
        let sample = trace.inner.samples.get(index).ok_or_else(|| {
            FlFailure(
                FlStatus::IndexOutOfRange,
                format!("sample index {index} out of range"),
            )
        })?;
        *out_eps = sample.eps.into();
        *out_base_point = sample.orbit.base_point().into();
        *out_loop_in_a0 = sample.escape.loop_in_a0;
        Ok(())
    })
}

/// How the march ended; `ReachedTarget` for null.
///
/// # Safety
/// `trace` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn fl_trace_terminal(trace: *const FlTrace) -> FlTerminal {
    match trace.as_ref().map(|t| t.inner.terminal) {
        None | Some(Terminal::ReachedTarget) => FlTerminal::ReachedTarget,
        Some(Terminal::EscapeConfirmedAt { .. }) => FlTerminal::EscapeConfirmed,
        Some(Terminal::StepUnderflow) => FlTerminal::StepUnderflow,
        Some(Terminal::BranchCollision) => FlTerminal::BranchCollision,
        Some(Terminal::IntegrationFailure) => FlTerminal::IntegrationFailure,
    }
}

/// The `eps` at which the loop leaves `A0` for good, or `FL_STATUS_EMPTY_RESULT`.
///
/// # Safety
/// `trace` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fl_trace_escape_eps(
    trace: *const FlTrace,
    out: *mut FlComplex,
) -> FlStatus {
    guarded(move || {
        let trace = trace.as_ref().ok_or_else(|| null_pointer("trace"))?;
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let eps = find_escape_epsilon(&trace.inner)
            .ok_or_else(|| FlFailure(FlStatus::EmptyResult, "the loop never leaves A0".into()))?;
        *out = eps.into();
        Ok(())
    })
}
