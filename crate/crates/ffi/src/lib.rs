//! C ABI over the `twss` solver.
//!
//! Solvers and solutions are opaque heap handles. Every entry point returns a
//! [`TwssStatus`]; on failure the message is kept per thread and can be read
//! with [`twss_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twss::cli::config::RunConfig;
use twss::solver::{Factorization, IncidentWave, Outputs, ScatteringSolution};
use twss::{Point, C64};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwssStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    ConfigError = 3,
    FactorizationError = 4,
    SolveError = 5,
    IllPosed = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Complex number with the layout of C99 `double _Complex`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwssComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for TwssComplex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// A factorized scatterer, reusable for any number of incident waves.
pub struct TwssSolver {
    factorization: Factorization,
}

/// Result of one solve.
pub struct TwssSolution {
    solution: ScatteringSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Fail(TwssStatus, String);

impl Fail {
    fn null(what: &str) -> Self {
        Fail(TwssStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Fail(TwssStatus::InvalidArgument, msg.into())
    }

    fn core(default: TwssStatus, e: twss::Error) -> Self {
        let status = match e {
            twss::Error::IllPosed { .. } => TwssStatus::IllPosed,
            _ => default,
        };
        Fail(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> TwssStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            TwssStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TwssStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::null(what))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

fn points(xs: &[f64], ys: &[f64]) -> Vec<Point> {
    xs.iter().zip(ys).map(|(&x, &y)| Point::new(x, y)).collect()
}

/// Parse a TOML run configuration (the format read by the `twss` binary) and
/// factorize the scatterer it describes. Only the `wave`, `medium`, `tree`,
/// `leaf` and `projector` sections matter here.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twss_solver_new(config_toml: *const c_char, out: *mut *mut TwssSolver) -> TwssStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::null("out"));
        }
        *out = ptr::null_mut();
        if config_toml.is_null() {
            return Err(Fail::null("config_toml"));
        }
        let text = CStr::from_ptr(config_toml).to_str().map_err(|_| Fail::arg("config is not valid UTF-8"))?;
        let cfg = RunConfig::parse(text).map_err(|e| Fail(TwssStatus::ConfigError, e.to_string()))?;
        let medium = cfg.medium.medium().map_err(|e| Fail(TwssStatus::ConfigError, e.to_string()))?;
        let ctx = cfg.context().map_err(|e| Fail(TwssStatus::ConfigError, e.to_string()))?;
        let factorization =
            Factorization::new(ctx, medium, cfg.solver()).map_err(|e| Fail::core(TwssStatus::FactorizationError, e))?;
        *out = Box::into_raw(Box::new(TwssSolver { factorization }));
        Ok(())
    })
}

/// Release a solver. Null is ignored.
///
/// # Safety
/// `solver` must come from [`twss_solver_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn twss_solver_free(solver: *mut TwssSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Number of nodes on the outer boundary, the length of every trace.
///
/// # Safety
/// `solver` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn twss_solver_boundary_len(solver: *const TwssSolver, out: *mut usize) -> TwssStatus {
    guard(|| {
        let s = borrow(solver, "solver")?;
        *out.as_mut().ok_or_else(|| Fail::null("out"))? = s.factorization.boundary().len();
        Ok(())
    })
}

/// Dimension of the solution space at the root.
///
/// # Safety
/// `solver` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn twss_solver_root_rank(solver: *const TwssSolver, out: *mut usize) -> TwssStatus {
    guard(|| {
        let s = borrow(solver, "solver")?;
        *out.as_mut().ok_or_else(|| Fail::null("out"))? = s.factorization.root_trace().rank();
        Ok(())
    })
}

/// Boundary nodes and outward normals, each array of length `len`.
///
/// # Safety
/// Buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn twss_solver_boundary_nodes(
    solver: *const TwssSolver,
    x: *mut f64,
    y: *mut f64,
    nx: *mut f64,
    ny: *mut f64,
    len: usize,
) -> TwssStatus {
    guard(|| {
        let b = borrow(solver, "solver")?.factorization.boundary().clone();
        if len < b.len() {
            return Err(Fail(TwssStatus::BufferTooSmall, format!("need {} entries, got {len}", b.len())));
        }
        let n = b.len();
        let (x, y) = (slice_mut(x, n, "x")?, slice_mut(y, n, "y")?);
        let (nx, ny) = (slice_mut(nx, n, "nx")?, slice_mut(ny, n, "ny")?);
        for i in 0..n {
            x[i] = b.nodes[i].x;
            y[i] = b.nodes[i].y;
            nx[i] = b.normals[i].x;
            ny[i] = b.normals[i].y;
        }
        Ok(())
    })
}

unsafe fn solve_with(solver: *const TwssSolver, wave: IncidentWave, out: *mut *mut TwssSolution) -> TwssStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::null("out"));
        }
        *out = ptr::null_mut();
        let s = borrow(solver, "solver")?;
        let solution =
            s.factorization.solve(&wave, &Outputs::default()).map_err(|e| Fail::core(TwssStatus::SolveError, e))?;
        *out = Box::into_raw(Box::new(TwssSolution { solution }));
        Ok(())
    })
}

/// Scatter the plane wave `amplitude · exp(ik (cos θ, sin θ)·x)`.
///
/// # Safety
/// `solver` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twss_solve_plane(
    solver: *const TwssSolver,
    direction: f64,
    amplitude: TwssComplex,
    out: *mut *mut TwssSolution,
) -> TwssStatus {
    if !direction.is_finite() {
        set_error("direction must be finite");
        return TwssStatus::InvalidArgument;
    }
    solve_with(solver, IncidentWave::plane(direction, C64::new(amplitude.re, amplitude.im)), out)
}

/// Scatter the field of a point source at `(sx, sy)` outside the scatterer.
///
/// # Safety
/// `solver` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twss_solve_monopole(
    solver: *const TwssSolver,
    sx: f64,
    sy: f64,
    amplitude: TwssComplex,
    out: *mut *mut TwssSolution,
) -> TwssStatus {
    if !(sx.is_finite() && sy.is_finite()) {
        set_error("source must be finite");
        return TwssStatus::InvalidArgument;
    }
    solve_with(solver, IncidentWave::monopole(Point::new(sx, sy), C64::new(amplitude.re, amplitude.im)), out)
}

/// Release a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from a solve call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn twss_solution_free(solution: *mut TwssSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Relative residual of the incident-data fit.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn twss_solution_residual(solution: *const TwssSolution, out: *mut f64) -> TwssStatus {
    guard(|| {
        let s = borrow(solution, "solution")?;
        *out.as_mut().ok_or_else(|| Fail::null("out"))? = s.solution.diagnostics.residual;
        Ok(())
    })
}

/// Copy the scattered Dirichlet and outward Neumann traces. Either buffer may
/// be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn twss_solution_scattered_trace(
    solution: *const TwssSolution,
    dirichlet: *mut TwssComplex,
    neumann: *mut TwssComplex,
    len: usize,
) -> TwssStatus {
    guard(|| {
        let t = &borrow(solution, "solution")?.solution.scattered_trace;
        let n = t.dirichlet.len();
        if len < n {
            return Err(Fail(TwssStatus::BufferTooSmall, format!("need {n} entries, got {len}")));
        }
        for (buf, src) in [(dirichlet, &t.dirichlet), (neumann, &t.neumann)] {
            if !buf.is_null() {
                for (o, v) in slice_mut(buf, n, "trace")?.iter_mut().zip(src) {
                    *o = (*v).into();
                }
            }
        }
        Ok(())
    })
}

/// Scattered field at `n` points outside the scatterer support.
///
/// # Safety
/// `solver` must be the handle that produced `solution`; arrays hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn twss_solution_eval_exterior(
    solver: *const TwssSolver,
    solution: *const TwssSolution,
    xs: *const f64,
    ys: *const f64,
    n: usize,
    out: *mut TwssComplex,
) -> TwssStatus {
    guard(|| {
        let f = &borrow(solver, "solver")?.factorization;
        let s = &borrow(solution, "solution")?.solution;
        let pts = points(slice(xs, n, "xs")?, slice(ys, n, "ys")?);
        let out = slice_mut(out, n, "out")?;
        check_pairing(f, s)?;
        let domain = f.domain();
        if let Some(p) = pts.iter().find(|p| domain.contains(**p)) {
            return Err(Fail::arg(format!("point ({}, {}) lies inside the scatterer support", p.x, p.y)));
        }
        let vals = twss::solver::evaluate_scattered_exterior(&f.ctx, f.boundary(), &s.scattered_trace, &pts)
            .map_err(|e| Fail::core(TwssStatus::SolveError, e))?;
        for (o, v) in out.iter_mut().zip(vals) {
            *o = v.into();
        }
        Ok(())
    })
}

/// Total field at `n` points inside the scatterer support.
///
/// # Safety
/// `solver` must be the handle that produced `solution`; arrays hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn twss_solution_eval_interior(
    solver: *const TwssSolver,
    solution: *const TwssSolution,
    xs: *const f64,
    ys: *const f64,
    n: usize,
    out: *mut TwssComplex,
) -> TwssStatus {
    guard(|| {
        let f = &borrow(solver, "solver")?.factorization;
        let s = &borrow(solution, "solution")?.solution;
        let pts = points(slice(xs, n, "xs")?, slice(ys, n, "ys")?);
        let out = slice_mut(out, n, "out")?;
        check_pairing(f, s)?;
        let vals = f.interior_field(&s.gamma, &pts).map_err(|e| match e {
            twss::Error::TargetOutsideLeaf { .. } => Fail::arg(e.to_string()),
            e => Fail::core(TwssStatus::SolveError, e),
        })?;
        for (o, v) in out.iter_mut().zip(vals) {
            *o = v.into();
        }
        Ok(())
    })
}

fn check_pairing(f: &Factorization, s: &ScatteringSolution) -> Result<(), Fail> {
    if s.gamma.len() != f.root_trace().rank() || s.scattered_trace.dirichlet.len() != f.boundary().len() {
        return Err(Fail::arg("solution does not belong to this solver"));
    }
    Ok(())
}

/// Copy the message of the last failed call on this thread into `buf`,
/// truncated and NUL-terminated. Returns the full message length without the
/// terminator, so a zero-length call sizes the buffer.
///
/// # Safety
/// `buf` must hold `len` bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn twss_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn twss_status_string(status: TwssStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TwssStatus::Ok => c"ok",
        TwssStatus::InvalidArgument => c"invalid argument",
        TwssStatus::NullPointer => c"null pointer",
        TwssStatus::ConfigError => c"configuration error",
        TwssStatus::FactorizationError => c"factorization failed",
        TwssStatus::SolveError => c"solve failed",
        TwssStatus::IllPosed => c"incident data not representable",
        TwssStatus::BufferTooSmall => c"buffer too small",
        TwssStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn twss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
