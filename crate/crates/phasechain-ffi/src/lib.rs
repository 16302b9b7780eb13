//! C ABI over the distributed-delay solver.
//!
//! Conventions:
//! - Problems are opaque [`pc_problem`] handles created by
//!   [`pc_problem_parse`] and released by [`pc_problem_free`].
//! - Every fallible call returns a [`pc_status`]; on failure a
//!   human-readable message is available from [`pc_last_error`] until the
//!   next call on the same thread.
//! - Complex vectors cross the boundary as separate re/im arrays, row-major
//!   over (time, component).
//!
//! The header `include/phasechain.h` is generated by cbindgen at build time.
#![allow(non_camel_case_types)]

use ndarray::Array1;
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use phasechain::error::Error;
use phasechain::lct::{augment, initial_augmented};
use phasechain::problem::{parse_spec, Method, ProblemSpec};
use phasechain::reference::{solve_dde_direct, solve_ode_direct, Trajectory};
use phasechain::schrodingerizer::{complexity_estimate, solve_schrodingerized, SolveParams};
use phasechain::stability::semistability_of_matrix;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum pc_status {
    /// Success.
    PC_OK = 0,
    /// Malformed or invalid problem specification.
    PC_ERR_SPEC = 1,
    /// Stability gate refused the operator.
    PC_ERR_STABILITY = 2,
    /// Numerical failure during solving.
    PC_ERR_NUMERICAL = 3,
    /// A required pointer argument was null.
    PC_ERR_NULL = 4,
    /// Input text was not valid UTF-8.
    PC_ERR_UTF8 = 5,
    /// A callee panicked; state may be inconsistent.
    PC_ERR_PANIC = 6,
}

/// Opaque problem handle.
pub struct pc_problem {
    spec: ProblemSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
    static VERSION: CString =
        CString::new(env!("CARGO_PKG_VERSION")).expect("version has no NUL");
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> pc_status {
    match err {
        Error::StabilityGate(_) => pc_status::PC_ERR_STABILITY,
        Error::Spec(_)
        | Error::InvalidPhaseType(_)
        | Error::DimensionMismatch(_)
        | Error::Domain(_)
        | Error::NoMemoryTerms
        | Error::Io(_) => pc_status::PC_ERR_SPEC,
        _ => pc_status::PC_ERR_NUMERICAL,
    }
}

fn guard<F: FnOnce() -> pc_status>(f: F) -> pc_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            pc_status::PC_ERR_PANIC
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    VERSION.with(|v| v.as_ptr())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse a TOML problem document into a new handle. On success `*out` owns
/// the problem and must be released with [`pc_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn pc_problem_parse(
    toml_text: *const c_char,
    out: *mut *mut pc_problem,
) -> pc_status {
    guard(|| {
        if toml_text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return pc_status::PC_ERR_NULL;
        }
        let text = match unsafe { CStr::from_ptr(toml_text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("problem text is not valid UTF-8");
                return pc_status::PC_ERR_UTF8;
            }
        };
        match parse_spec(text) {
            Ok(spec) => {
                unsafe { *out = Box::into_raw(Box::new(pc_problem { spec })) };
                pc_status::PC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                unsafe { *out = ptr::null_mut() };
                status_of(&e)
            }
        }
    })
}

/// Release a handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_free(problem: *mut pc_problem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Physical system dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pc_problem_dim(problem: *const pc_problem) -> usize {
    if problem.is_null() {
        return 0;
    }
    unsafe { &*problem }.spec.system.dim()
}

/// Semi-stability analysis of the augmented operator. `semi_stable` receives
/// 1 or 0; `max_real_part` the spectral abscissa; `h1_max_eig` the largest
/// eigenvalue of the Hermitian part. Output pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn pc_stability(
    problem: *const pc_problem,
    semi_stable: *mut i32,
    max_real_part: *mut f64,
    h1_max_eig: *mut f64,
) -> pc_status {
    guard(|| {
        if problem.is_null() {
            set_error("null problem handle");
            return pc_status::PC_ERR_NULL;
        }
        let spec = &unsafe { &*problem }.spec;
        let dense = match augment(&spec.system) {
            Ok(aug) => aug.cbar.to_dense(),
            Err(Error::NoMemoryTerms) => spec.system.a().to_dense(),
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        match semistability_of_matrix(&dense.view()) {
            Ok(report) => {
                if !semi_stable.is_null() {
                    unsafe { *semi_stable = report.semi_stable as i32 };
                }
                if !max_real_part.is_null() {
                    unsafe { *max_real_part = report.max_real_part };
                }
                if !h1_max_eig.is_null() {
                    unsafe { *h1_max_eig = report.h1_max_eig };
                }
                pc_status::PC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

fn run_solve(spec: &ProblemSpec, times: &[f64]) -> Result<Trajectory, Error> {
    let x0 = spec
        .x0
        .as_ref()
        .ok_or_else(|| Error::Spec("spec has no initial state (run.x0 / run.rho0_re)".into()))?;
    match spec.run.method {
        Method::DdeDirect => {
            let t_end = times.last().copied().unwrap_or(0.0);
            let h = spec.run.step.unwrap_or(t_end.max(f64::MIN_POSITIVE) / 1000.0);
            let full = solve_dde_direct(&spec.system, x0, t_end, h)?;
            let states: Vec<Array1<C64>> =
                times.iter().map(|&t| full.state_at(t).clone()).collect();
            Trajectory::new(times.to_vec(), states, &full.solver_id)
        }
        Method::LctOde => {
            let aug = augment(&spec.system)?;
            let y0 = initial_augmented(&x0.view(), &aug.layout)?;
            let full = solve_ode_direct(&aug, &y0, times)?;
            let states = full
                .states
                .iter()
                .map(|y| phasechain::lct::extract_x(&y.view(), &aug.layout))
                .collect::<Result<Vec<_>, _>>()?;
            Trajectory::new(times.to_vec(), states, &full.solver_id)
        }
        Method::Schrodingerize => {
            let params = SolveParams {
                eps_grid: spec.run.eps_grid,
                n_p: spec.run.n_p,
                allow_shift: spec.run.allow_shift,
                recovery: None,
            };
            solve_schrodingerized(&spec.system, &x0.view(), times, &params)
        }
    }
}

/// Integrate the problem with the spec's method and initial state at
/// `n_times` strictly increasing times. `out_re`/`out_im` must each hold
/// `n_times * pc_problem_dim(problem)` doubles and are filled row-major over
/// (time, component).
#[no_mangle]
pub unsafe extern "C" fn pc_solve(
    problem: *const pc_problem,
    times: *const f64,
    n_times: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> pc_status {
    guard(|| {
        if problem.is_null() || times.is_null() || out_re.is_null() || out_im.is_null() {
            set_error("null pointer argument");
            return pc_status::PC_ERR_NULL;
        }
        if n_times == 0 {
            set_error("n_times must be positive");
            return pc_status::PC_ERR_SPEC;
        }
        let spec = &unsafe { &*problem }.spec;
        let times = unsafe { std::slice::from_raw_parts(times, n_times) };
        match run_solve(spec, times) {
            Ok(traj) => {
                let dim = spec.system.dim();
                for (k, state) in traj.states.iter().enumerate() {
                    for (i, z) in state.iter().enumerate() {
                        unsafe {
                            *out_re.add(k * dim + i) = z.re;
                            *out_im.add(k * dim + i) = z.im;
                        }
                    }
                }
                pc_status::PC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Quantum-resource estimate for evolving to time `t` at tolerance `eps`
/// with the given norm ratio and precision bits. Output pointers may be null
/// to skip individual fields.
#[no_mangle]
pub unsafe extern "C" fn pc_complexity(
    problem: *const pc_problem,
    t: f64,
    eps: f64,
    norm_ratio: f64,
    precision_bits: u32,
    queries: *mut f64,
    gate_multiplier: *mut f64,
    success_probability: *mut f64,
) -> pc_status {
    guard(|| {
        if problem.is_null() {
            set_error("null problem handle");
            return pc_status::PC_ERR_NULL;
        }
        let spec = &unsafe { &*problem }.spec;
        let result = augment(&spec.system).and_then(|aug| {
            complexity_estimate(&spec.system, &aug, t, eps, norm_ratio, precision_bits)
        });
        match result {
            Ok(report) => {
                if !queries.is_null() {
                    unsafe { *queries = report.query_complexity };
                }
                if !gate_multiplier.is_null() {
                    unsafe { *gate_multiplier = report.gate_multiplier };
                }
                if !success_probability.is_null() {
                    unsafe { *success_probability = report.success_probability };
                }
                pc_status::PC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
