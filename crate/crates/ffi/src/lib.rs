//! C ABI over `pgrad-core`.
//!
//! Objects are opaque handles created by `pg_*_new`-style functions and
//! released with the matching `pg_*_free`. Every fallible call returns a
//! [`PgStatus`]; on failure `pg_last_error` describes the error for the
//! calling thread. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pgrad_core::action::action;
use pgrad_core::domain::{make_domain, DomainRef, Field};
use pgrad_core::io::{load_pgf, save_pgf};
use pgrad_core::potentials::{builtin, BuiltinParams, BuiltinPotential, Forcing, ForcingTerm, Trig};
use pgrad_core::solver::{minimize, Method, SolveOptions, SolveReport, StopReason};
use pgrad_core::verify::{residual_report, VerifyOptions};
use pgrad_core::{Error, Scheme};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    /// Null pointer, bad length, invalid UTF-8 or an out-of-range enum.
    InvalidArgument = 1,
    InvalidDomain = 2,
    InvalidField = 3,
    NonFinite = 4,
    DomainMismatch = 5,
    UnknownPotential = 6,
    InvalidParameter = 7,
    MissingBound = 8,
    InvalidOptions = 9,
    Parse = 10,
    Io = 11,
    /// An internal panic was caught.
    Internal = 12,
}

impl From<&Error> for PgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDomain(_) => PgStatus::InvalidDomain,
            Error::InvalidField(_) => PgStatus::InvalidField,
            Error::NonFinite { .. } => PgStatus::NonFinite,
            Error::DomainMismatch(_) => PgStatus::DomainMismatch,
            Error::NotHermitian { .. } => PgStatus::InvalidField,
            Error::UnknownPotential(_) => PgStatus::UnknownPotential,
            Error::InvalidParameter(_) => PgStatus::InvalidParameter,
            Error::MissingBound => PgStatus::MissingBound,
            Error::InvalidOptions(_) => PgStatus::InvalidOptions,
            Error::Parse { .. } | Error::Config { .. } => PgStatus::Parse,
            Error::Io(_) => PgStatus::Io,
        }
    }
}

/// Opaque periodic box and grid.
pub struct PgDomain(DomainRef);

/// Opaque discrete field.
pub struct PgField(Field);

/// Opaque builtin potential.
pub struct PgPotential(BuiltinPotential);

/// Opaque result of `pg_minimize`.
pub struct PgSolveReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("NUL removed"));
}

struct Failure(PgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PgStatus::from(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(PgStatus::InvalidArgument, msg.to_string())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard<F>(body: F) -> PgStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            PgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {msg}"));
            PgStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or an empty string.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// domain ---------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn pg_domain_new(
    p: usize,
    n: usize,
    periods: *const f64,
    grid_sizes: *const usize,
    out: *mut *mut PgDomain,
) -> PgStatus {
    guard(|| {
        let periods = slice(periods, p, "periods")?;
        let sizes = slice(grid_sizes, p, "grid_sizes")?;
        let d = make_domain(p, n, periods, sizes)?;
        write_out(out, Box::into_raw(Box::new(PgDomain(d))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_domain_free(domain: *mut PgDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Number of grid nodes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pg_domain_point_count(domain: *const PgDomain) -> usize {
    domain.as_ref().map_or(0, |d| d.0.point_count())
}

/// Codomain dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pg_domain_n(domain: *const PgDomain) -> usize {
    domain.as_ref().map_or(0, |d| d.0.n())
}

/// Box volume, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pg_domain_volume(domain: *const PgDomain) -> f64 {
    domain.as_ref().map_or(0.0, |d| d.0.volume())
}

// field ----------------------------------------------------------------------

/// Copies `len = point_count·n` values, grid-major with the component
/// innermost.
#[no_mangle]
pub unsafe extern "C" fn pg_field_from_values(
    domain: *const PgDomain,
    values: *const f64,
    len: usize,
    out: *mut *mut PgField,
) -> PgStatus {
    guard(|| {
        let d = deref(domain, "domain")?;
        let values = slice(values, len, "values")?;
        let f = Field::from_values(&d.0, values.to_vec())?;
        write_out(out, Box::into_raw(Box::new(PgField(f))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_field_zeros(domain: *const PgDomain, out: *mut *mut PgField) -> PgStatus {
    guard(|| {
        let d = deref(domain, "domain")?;
        write_out(out, Box::into_raw(Box::new(PgField(Field::zeros(&d.0)))))
    })
}

/// Reads a field file.
#[no_mangle]
pub unsafe extern "C" fn pg_field_load(path: *const c_char, out: *mut *mut PgField) -> PgStatus {
    guard(|| {
        let path = string(path, "path")?;
        let f = load_pgf(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(PgField(f))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_field_save(field: *const PgField, path: *const c_char) -> PgStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let path = string(path, "path")?;
        save_pgf(&f.0, Path::new(path))?;
        Ok(())
    })
}

/// Number of stored values, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pg_field_len(field: *const PgField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the values into `out`, which must hold exactly `pg_field_len`.
#[no_mangle]
pub unsafe extern "C" fn pg_field_copy_values(field: *const PgField, out: *mut f64, len: usize) -> PgStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let values = f.0.values();
        if len != values.len() {
            return Err(invalid(&format!("buffer holds {len} values, field has {}", values.len())));
        }
        if out.is_null() {
            return Err(invalid("output buffer is null"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, len);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_field_free(field: *mut PgField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

// potential ------------------------------------------------------------------

/// Trigonometric profile of a forcing term.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgTrig {
    Cos = 0,
    Sin = 1,
}

/// `amplitude·{cos,sin}(2π Σ_α modes[α]·tᵅ/Tᵅ)` added to `component`
/// (0-based). `modes` points at `p` integers.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PgForcingTerm {
    pub component: usize,
    pub shape: PgTrig,
    pub amplitude: f64,
    pub modes: *const i64,
}

/// Parameters of the builtin families. Unused entries are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PgBuiltinParams {
    pub kappa: f64,
    pub amplitude: f64,
    /// Constant gradient bound; only read when `has_claimed_bound`.
    pub claimed_bound: f64,
    pub has_claimed_bound: bool,
    pub forcing: *const PgForcingTerm,
    pub forcing_count: usize,
}

/// `kappa = 1`, `amplitude = 1`, no claimed bound, no forcing.
#[no_mangle]
pub extern "C" fn pg_builtin_params_default() -> PgBuiltinParams {
    PgBuiltinParams {
        kappa: 1.0,
        amplitude: 1.0,
        claimed_bound: 0.0,
        has_claimed_bound: false,
        forcing: ptr::null(),
        forcing_count: 0,
    }
}

/// Builds `zero`, `linear_forcing`, `quadratic`, `pseudo_huber` or `cosine`
/// for fields on `domain`. `params` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn pg_potential_builtin(
    name: *const c_char,
    domain: *const PgDomain,
    params: *const PgBuiltinParams,
    out: *mut *mut PgPotential,
) -> PgStatus {
    guard(|| {
        let name = string(name, "name")?;
        let d = &deref(domain, "domain")?.0;
        let raw = params.as_ref().copied().unwrap_or_else(|| pg_builtin_params_default());
        let mut bp = BuiltinParams::new(d.n());
        bp.kappa = raw.kappa;
        bp.amplitude = raw.amplitude;
        bp.claimed_bound = raw.has_claimed_bound.then_some(raw.claimed_bound);
        let terms = slice(raw.forcing, raw.forcing_count, "forcing")?;
        if !terms.is_empty() {
            let terms = terms
                .iter()
                .map(|t| {
                    Ok(ForcingTerm {
                        component: t.component,
                        shape: match t.shape {
                            PgTrig::Cos => Trig::Cos,
                            PgTrig::Sin => Trig::Sin,
                        },
                        amplitude: t.amplitude,
                        modes: slice(t.modes, d.p(), "forcing modes")?.to_vec(),
                    })
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            bp.forcing = Forcing::modes(d.periods(), terms)?;
        }
        let pot = builtin(name, bp)?;
        write_out(out, Box::into_raw(Box::new(PgPotential(pot))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_potential_free(potential: *mut PgPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

// action and solver ------------------------------------------------------------

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgScheme {
    Spectral = 0,
    Centered2 = 1,
}

impl From<PgScheme> for Scheme {
    fn from(s: PgScheme) -> Self {
        match s {
            PgScheme::Spectral => Scheme::Spectral,
            PgScheme::Centered2 => Scheme::Centered2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PgActionValue {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
}

#[no_mangle]
pub unsafe extern "C" fn pg_action(
    field: *const PgField,
    potential: *const PgPotential,
    scheme: PgScheme,
    out: *mut PgActionValue,
) -> PgStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let pot = deref(potential, "potential")?;
        let a = action(&f.0, &pot.0, scheme.into())?;
        write_out(
            out,
            PgActionValue {
                total: a.total,
                kinetic: a.kinetic,
                potential: a.potential,
            },
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgMethod {
    Lbfgs = 0,
    GradientDescent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgSolveOptions {
    pub method: PgMethod,
    pub max_iters: usize,
    /// Stop when `sup |G| ≤ grad_tol`; zero selects `1e-8·(1 + |φ(u₀)|)`.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub lbfgs_memory: usize,
    pub pin_mean: bool,
    pub scheme: PgScheme,
}

#[no_mangle]
pub extern "C" fn pg_solve_options_default() -> PgSolveOptions {
    let d = SolveOptions::default();
    PgSolveOptions {
        method: PgMethod::Lbfgs,
        max_iters: d.max_iters,
        grad_tol: 0.0,
        armijo_c: d.armijo_c,
        backtrack_factor: d.backtrack_factor,
        lbfgs_memory: d.lbfgs_memory,
        pin_mean: d.pin_mean,
        scheme: PgScheme::Spectral,
    }
}

impl From<&PgSolveOptions> for SolveOptions {
    fn from(o: &PgSolveOptions) -> Self {
        SolveOptions {
            method: match o.method {
                PgMethod::Lbfgs => Method::Lbfgs,
                PgMethod::GradientDescent => Method::GradientDescent,
            },
            max_iters: o.max_iters,
            grad_tol: (o.grad_tol != 0.0).then_some(o.grad_tol),
            armijo_c: o.armijo_c,
            backtrack_factor: o.backtrack_factor,
            lbfgs_memory: o.lbfgs_memory,
            pin_mean: o.pin_mean,
            scheme: o.scheme.into(),
        }
    }
}

/// Minimizes the action from `initial`. `options` may be null for the
/// defaults.
#[no_mangle]
pub unsafe extern "C" fn pg_minimize(
    initial: *const PgField,
    potential: *const PgPotential,
    options: *const PgSolveOptions,
    out: *mut *mut PgSolveReport,
) -> PgStatus {
    guard(|| {
        let u0 = deref(initial, "initial")?;
        let pot = deref(potential, "potential")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| pg_solve_options_default());
        let report = minimize(&u0.0, &pot.0, &SolveOptions::from(&opts))?;
        write_out(out, Box::into_raw(Box::new(PgSolveReport(report))))
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStopReason {
    Converged = 0,
    MaxIters = 1,
    NumericalFailure = 2,
    LineSearchFailure = 3,
}

/// Scalar summary of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgSolveSummary {
    pub converged: bool,
    pub stop_reason: PgStopReason,
    pub iterations: usize,
    /// Length of the recorded `φ` history.
    pub phi_count: usize,
    /// Last recorded `φ` (NaN if none).
    pub phi_final: f64,
    /// Last `sup |G|` (NaN if none).
    pub grad_sup_final: f64,
    pub grad_tol: f64,
}

#[no_mangle]
pub unsafe extern "C" fn pg_report_summary(report: *const PgSolveReport, out: *mut PgSolveSummary) -> PgStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        let summary = PgSolveSummary {
            converged: r.converged,
            stop_reason: match r.stop_reason {
                StopReason::Converged => PgStopReason::Converged,
                StopReason::MaxIters => PgStopReason::MaxIters,
                StopReason::NumericalFailure => PgStopReason::NumericalFailure,
                StopReason::LineSearchFailure => PgStopReason::LineSearchFailure,
            },
            iterations: r.iterations,
            phi_count: r.iterates_phi.len(),
            phi_final: r.iterates_phi.last().copied().unwrap_or(f64::NAN),
            grad_sup_final: r.grad_norms.last().copied().unwrap_or(f64::NAN),
            grad_tol: r.grad_tol,
        };
        write_out(out, summary)
    })
}

/// Copies the `φ` history; `len` must equal `phi_count`.
#[no_mangle]
pub unsafe extern "C" fn pg_report_copy_phi(report: *const PgSolveReport, out: *mut f64, len: usize) -> PgStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        if len != r.iterates_phi.len() {
            return Err(invalid(&format!(
                "buffer holds {len} values, history has {}",
                r.iterates_phi.len()
            )));
        }
        if len > 0 {
            if out.is_null() {
                return Err(invalid("output buffer is null"));
            }
            ptr::copy_nonoverlapping(r.iterates_phi.as_ptr(), out, len);
        }
        Ok(())
    })
}

/// A new field handle holding the final iterate.
#[no_mangle]
pub unsafe extern "C" fn pg_report_final_field(report: *const PgSolveReport, out: *mut *mut PgField) -> PgStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        write_out(out, Box::into_raw(Box::new(PgField(r.final_field.clone()))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_report_free(report: *mut PgSolveReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

// verification -----------------------------------------------------------------

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PgResidualReport {
    pub strong_l2: f64,
    pub strong_sup: f64,
    pub weak_max: f64,
    pub trace_mismatch: f64,
    pub passes: bool,
}

/// Residuals with the default tolerances and spectral derivatives.
#[no_mangle]
pub unsafe extern "C" fn pg_residual_report(
    field: *const PgField,
    potential: *const PgPotential,
    out: *mut PgResidualReport,
) -> PgStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let pot = deref(potential, "potential")?;
        let r = residual_report(&f.0, &pot.0, &VerifyOptions::default())?;
        write_out(
            out,
            PgResidualReport {
                strong_l2: r.strong_l2,
                strong_sup: r.strong_sup,
                weak_max: r.weak_max,
                trace_mismatch: r.trace_mismatch,
                passes: r.passes,
            },
        )
    })
}
