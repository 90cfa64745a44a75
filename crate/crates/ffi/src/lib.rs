//! C ABI for `gasket-core`.
//!
//! Objects are opaque handles returned through out-pointers and released
//! with the matching `gasket_*_free`. Every fallible call returns a
//! [`GasketStatus`]; on failure a message is available from
//! [`gasket_last_error_message`] on the same thread. Results are written
//! through out-pointers only on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gasket_core::io::{parse_fractal, parse_measure};
use gasket_core::solver::{solve_schrodinger_direct, solve_schrodinger_picard};
use gasket_core::verification::{
    equicontinuity_suite, hopf_suite, maximum_principle_suite, CheckReport, Verdict,
};
use gasket_core::{Address, DirichletProblem, Error, Model, RadonMeasure, Solution};

/// Stopping tolerance of Picard solves made through this interface.
pub const GASKET_PICARD_TOLERANCE: f64 = 1e-12;
/// Iteration cap of Picard solves made through this interface.
pub const GASKET_PICARD_MAX_ITERATIONS: usize = 100_000;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GasketStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidStructure = 3,
    LevelOutOfRange = 4,
    Resolution = 5,
    Singular = 6,
    NotContractive = 7,
    CertificationFailed = 8,
    Numerical = 9,
    BufferTooSmall = 10,
    Unsupported = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GasketMethod {
    Direct = 0,
    Picard = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GasketSuite {
    WeakMaximumPrinciple = 0,
    StrongMaximumPrinciple = 1,
    Hopf = 2,
    Equicontinuity = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GasketVerdict {
    Pass = 0,
    Fail = 1,
    Inconclusive = 2,
}

/// Counts and worst margin of a verification suite. `worst_margin` is NaN
/// when no instance was conclusive.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasketCheckSummary {
    pub verdict: GasketVerdict,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub worst_margin: f64,
    /// Instance attaining the worst margin; meaningful when `instances > 0`.
    pub witness_instance: usize,
}

/// A fractal with its harmonic structure and vertex sets up to a level.
pub struct GasketModel {
    inner: Model,
}

/// A signed Radon measure: atoms plus multiples of the self-similar measure
/// restricted to cells.
pub struct GasketMeasure {
    inner: RadonMeasure,
}

/// Values of a solution on `V_n` with its solve diagnostics.
pub struct GasketSolution {
    inner: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: GasketStatus,
    message: String,
}

impl Failure {
    fn new(status: GasketStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) | Error::LevelMismatch { .. } | Error::Json(_) | Error::Io(_) => {
                GasketStatus::InvalidArgument
            }
            Error::InvalidStructure(_) => GasketStatus::InvalidStructure,
            Error::Unsupported(_) => GasketStatus::Unsupported,
            Error::Resolution { .. } => GasketStatus::Resolution,
            Error::LevelOutOfRange { .. } => GasketStatus::LevelOutOfRange,
            Error::Singular(_) => GasketStatus::Singular,
            Error::NotContractive { .. } => GasketStatus::NotContractive,
            Error::CertificationFailed { .. } => GasketStatus::CertificationFailed,
            Error::Numerical(_) => GasketStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

// Runs `f`, converting errors and panics into a status and last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GasketStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GasketStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            GasketStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::new(GasketStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(GasketStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null and, by contract, a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::new(GasketStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(GasketStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null and, by contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn check_out<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(GasketStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

fn vertex_index(model: &Model, address: &str, level: usize) -> Result<usize, Failure> {
    let raw: Address = address.parse()?;
    let canonical = model.hierarchy().canonicalize(&raw.word, raw.label)?;
    Ok(model.hierarchy().require_index(&canonical, level)?)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gasket_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gasket_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The Sierpinski gasket with its standard harmonic structure.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_sierpinski(max_level: usize, out: *mut *mut GasketModel) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let model = Box::new(GasketModel {
            inner: Model::sierpinski(max_level),
        });
        unsafe { put(out, Box::into_raw(model), "out") }
    })
}

/// A model from fractal JSON text including its `harmonic` section.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_from_json(
    json: *const c_char,
    max_level: usize,
    out: *mut *mut GasketModel,
) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let spec = parse_fractal(unsafe { text(json, "json") }?)?;
        let (structure, harmonic) = spec.build()?;
        let model = Box::new(GasketModel {
            inner: Model::new(structure, harmonic, max_level)?,
        });
        unsafe { put(out, Box::into_raw(model), "out") }
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_free(model: *mut GasketModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Highest level the model was built for.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_max_level(model: *const GasketModel, out: *mut usize) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        unsafe { put(out, m.inner.max_level(), "out") }
    })
}

/// `|V_n|`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_vertex_count(
    model: *const GasketModel,
    level: usize,
    out: *mut usize,
) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        let count = m.inner.level(level)?.vertex_count();
        unsafe { put(out, count, "out") }
    })
}

/// Index in `V_n` of a vertex written `q<k>` or `w<word>:<label>`.
///
/// # Safety
/// `model` must be a live handle, `address` NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_model_vertex_index(
    model: *const GasketModel,
    address: *const c_char,
    level: usize,
    out: *mut usize,
) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        let index = vertex_index(&m.inner, unsafe { text(address, "address") }?, level)?;
        unsafe { put(out, index, "out") }
    })
}

/// Effective resistance `R(p, q)` computed at level `n`.
///
/// # Safety
/// `model` must be a live handle, `p` and `q` NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_effective_resistance(
    model: *const GasketModel,
    p: *const c_char,
    q: *const c_char,
    level: usize,
    out: *mut f64,
) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        let (p, q) = unsafe { (text(p, "p")?, text(q, "q")?) };
        let parse = |s: &str| -> Result<Address, Failure> { Ok(s.parse::<Address>()?) };
        let r = m.inner.effective_resistance(&parse(p)?, &parse(q)?, level)?;
        unsafe { put(out, r, "out") }
    })
}

/// A measure from JSON text `{"atoms": [...], "self_similar": [...]}`.
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_measure_from_json(json: *const c_char, out: *mut *mut GasketMeasure) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let measure = parse_measure(unsafe { text(json, "json") }?)?;
        unsafe { put(out, Box::into_raw(Box::new(GasketMeasure { inner: measure })), "out") }
    })
}

/// `coefficient · μ`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_measure_self_similar(coefficient: f64, out: *mut *mut GasketMeasure) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let measure = RadonMeasure::self_similar().scaled(coefficient);
        unsafe { put(out, Box::into_raw(Box::new(GasketMeasure { inner: measure })), "out") }
    })
}

/// Releases a measure; null is ignored.
///
/// # Safety
/// `measure` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gasket_measure_free(measure: *mut GasketMeasure) {
    if !measure.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(measure) });
    }
}

/// Total mass of a measure.
///
/// # Safety
/// `model` and `measure` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_measure_total_mass(
    model: *const GasketModel,
    measure: *const GasketMeasure,
    out: *mut f64,
) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        let mu = unsafe { borrow(measure, "measure") }?;
        mu.inner.validate(&m.inner)?;
        unsafe { put(out, mu.inner.total_mass(&m.inner), "out") }
    })
}

/// Solves `Δu − uν = σ` on `V_n` with `u = boundary` on `V_0`. `source` and
/// `potential` may be null for zero measures.
///
/// # Safety
/// `model` must be a live handle, `boundary` point to `boundary_len`
/// doubles, `source`/`potential` be null or live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solve(
    model: *const GasketModel,
    level: usize,
    boundary: *const f64,
    boundary_len: usize,
    source: *const GasketMeasure,
    potential: *const GasketMeasure,
    method: GasketMethod,
    out: *mut *mut GasketSolution,
) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = &unsafe { borrow(model, "model") }?.inner;
        if boundary.is_null() && boundary_len > 0 {
            return Err(Failure::new(GasketStatus::NullPointer, "boundary is null"));
        }
        let g = if boundary_len == 0 {
            Vec::new()
        } else {
            // SAFETY: non-null and, by contract, `boundary_len` readable doubles.
            unsafe { std::slice::from_raw_parts(boundary, boundary_len) }.to_vec()
        };
        let mut problem = DirichletProblem::on_boundary(m, level, g)?;
        if let Some(s) = unsafe { source.as_ref() } {
            problem = problem.with_source(s.inner.clone());
        }
        if let Some(p) = unsafe { potential.as_ref() } {
            problem = problem.with_potential(p.inner.clone());
        }
        let solution = match method {
            GasketMethod::Direct => solve_schrodinger_direct(m, &problem)?,
            GasketMethod::Picard => {
                solve_schrodinger_picard(m, &problem, GASKET_PICARD_TOLERANCE, GASKET_PICARD_MAX_ITERATIONS)?
            }
        };
        unsafe { put(out, Box::into_raw(Box::new(GasketSolution { inner: solution })), "out") }
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_free(solution: *mut GasketSolution) {
    if !solution.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Number of values, `|V_n|`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_len(solution: *const GasketSolution, out: *mut usize) -> GasketStatus {
    guard(|| {
        let s = unsafe { borrow(solution, "solution") }?;
        unsafe { put(out, s.inner.values().len(), "out") }
    })
}

/// Copies the values in vertex order into `buffer`, which must hold
/// `gasket_solution_len` doubles; otherwise `BufferTooSmall`.
///
/// # Safety
/// `solution` must be a live handle and `buffer` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_values(
    solution: *const GasketSolution,
    buffer: *mut f64,
    capacity: usize,
) -> GasketStatus {
    guard(|| {
        let s = unsafe { borrow(solution, "solution") }?;
        let values = s.inner.values();
        if capacity < values.len() {
            return Err(Failure::new(
                GasketStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {} needed", values.len()),
            ));
        }
        check_out(buffer, "buffer")?;
        // SAFETY: `buffer` is non-null with room for `capacity >= values.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len()) };
        Ok(())
    })
}

/// Value at a vertex written `q<k>` or `w<word>:<label>`.
///
/// # Safety
/// `model` and `solution` must be live handles, `address` NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_value_at(
    model: *const GasketModel,
    solution: *const GasketSolution,
    address: *const c_char,
    out: *mut f64,
) -> GasketStatus {
    guard(|| {
        let m = unsafe { borrow(model, "model") }?;
        let s = unsafe { borrow(solution, "solution") }?;
        let index = vertex_index(&m.inner, unsafe { text(address, "address") }?, s.inner.level())?;
        unsafe { put(out, s.inner.values()[index], "out") }
    })
}

/// Largest interior residual of the solved system.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_residual(solution: *const GasketSolution, out: *mut f64) -> GasketStatus {
    guard(|| {
        let s = unsafe { borrow(solution, "solution") }?;
        unsafe { put(out, s.inner.residual, "out") }
    })
}

/// Picard iterations and contraction factor; `0` and NaN for direct solves.
///
/// # Safety
/// `solution` must be a live handle; `iterations` and `kappa` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_solution_picard_info(
    solution: *const GasketSolution,
    iterations: *mut usize,
    kappa: *mut f64,
) -> GasketStatus {
    guard(|| {
        let s = unsafe { borrow(solution, "solution") }?;
        check_out(kappa, "kappa")?;
        unsafe { put(iterations, s.inner.iterations.unwrap_or(0), "iterations") }?;
        unsafe { put(kappa, s.inner.contraction_factor.unwrap_or(f64::NAN), "kappa") }
    })
}

fn summarize(report: &CheckReport) -> GasketCheckSummary {
    GasketCheckSummary {
        verdict: match report.verdict {
            Verdict::Pass => GasketVerdict::Pass,
            Verdict::Fail => GasketVerdict::Fail,
            Verdict::Inconclusive => GasketVerdict::Inconclusive,
        },
        instances: report.instances,
        passed: report.passed,
        failed: report.failed,
        inconclusive: report.inconclusive,
        worst_margin: report.margin.unwrap_or(f64::NAN),
        witness_instance: report.witness.as_ref().map_or(0, |w| w.instance),
    }
}

/// Runs a randomized suite of `count` instances at level `n`. A failing
/// suite still returns `Ok`; inspect `out->verdict`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gasket_verify(
    model: *const GasketModel,
    suite: GasketSuite,
    level: usize,
    count: usize,
    seed: u64,
    out: *mut GasketCheckSummary,
) -> GasketStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = &unsafe { borrow(model, "model") }?.inner;
        let report = match suite {
            GasketSuite::WeakMaximumPrinciple => maximum_principle_suite(m, level, count, seed, None)?.0,
            GasketSuite::StrongMaximumPrinciple => maximum_principle_suite(m, level, count, seed, None)?.1,
            GasketSuite::Hopf => hopf_suite(m, level, count, seed, None)?,
            GasketSuite::Equicontinuity => equicontinuity_suite(m, level, count, 500, seed, None)?,
        };
        unsafe { put(out, summarize(&report), "out") }
    })
}
