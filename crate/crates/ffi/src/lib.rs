//! C ABI over the `gzk` toolkit.
//!
//! Every function returns a [`GzkStatus`]; results come back through out
//! pointers. Grids and fields are opaque heap handles released with the
//! matching `_free` function. On failure the thread-local message read by
//! [`gzk_last_error_message`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gzk::audit::gradient_oscillation;
use gzk::blowup::{build_u0, profile_spectrum, BlowupSpec, ProfileSpec};
use gzk::experiment::{run, ExperimentConfig, Outcome};
use gzk::multiplier::apply_propagator;
use gzk::norms::{lebesgue_norm, sobolev_norm, SobolevSpec};
use gzk::solver::{integrate, invariants, SolverConfig};
use gzk::{forward_transform, inverse_transform, make_grid, Error, Grid3, RealField};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GzkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    SizeMismatch = 4,
    GridMismatch = 5,
    SolverFailure = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Verdict of a completed experiment.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GzkOutcome {
    Pass = 0,
    Fail = 1,
}

/// Opaque periodic grid.
pub struct GzkGrid(Grid3);

/// Opaque real field on a grid.
pub struct GzkField(RealField);

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GzkSolverConfig {
    pub k: u32,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub cfl_constant: f64,
    /// Zero evolves only the dispersive part.
    pub nonlinear: u8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GzkInvariants {
    pub mass: f64,
    pub mean: f64,
    pub hamiltonian: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> GzkStatus {
    match err {
        Error::InvalidGrid(_) => GzkStatus::InvalidGrid,
        Error::SizeMismatch { .. } => GzkStatus::SizeMismatch,
        Error::GridMismatch => GzkStatus::GridMismatch,
        Error::Cfl { .. } | Error::SolverAbort { .. } => GzkStatus::SolverFailure,
        Error::Config { .. } => GzkStatus::Config,
        Error::Io(_) => GzkStatus::Io,
        _ => GzkStatus::InvalidArgument,
    }
}

/// Runs `body`, recording errors and converting panics.
fn guard(body: impl FnOnce() -> Result<(), GzkFail>) -> GzkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GzkStatus::Ok
        }
        Ok(Err(GzkFail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            GzkStatus::Panic
        }
    }
}

struct GzkFail(GzkStatus, String);

impl From<Error> for GzkFail {
    fn from(e: Error) -> Self {
        GzkFail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> GzkFail {
    GzkFail(GzkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, GzkFail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), GzkFail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_field(out: *mut *mut GzkField, f: RealField) -> Result<(), GzkFail> {
    put(out, Box::into_raw(Box::new(GzkField(f))), "out")
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gzk_last_error_message(buf: *mut c_char, len: usize) -> usize {
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

/// Creates an `n³` grid on the box `[-L/2, L/2)³`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_grid_new(n_axis: usize, box_len: f64, out: *mut *mut GzkGrid) -> GzkStatus {
    guard(|| {
        let g = make_grid(n_axis, box_len)?;
        put(out, Box::into_raw(Box::new(GzkGrid(g))), "out")
    })
}

/// # Safety
/// `grid` must be null or a handle from [`gzk_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gzk_grid_free(grid: *mut GzkGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of samples `n³`.
///
/// # Safety
/// `grid` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_grid_len(grid: *const GzkGrid, out: *mut usize) -> GzkStatus {
    guard(|| put(out, deref(grid, "grid")?.0.len(), "out"))
}

/// Builds a field from `len = n³` row-major samples `[x][y1][y2]`.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_field_from_samples(
    grid: *const GzkGrid,
    samples: *const f64,
    len: usize,
    out: *mut *mut GzkField,
) -> GzkStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        put_field(out, RealField::new(g, data)?)
    })
}

/// Copies the samples of `field` into `buf`, which must hold `len = n³` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gzk_field_samples(field: *const GzkField, buf: *mut f64, len: usize) -> GzkStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != f.samples().len() {
            return Err(Error::SizeMismatch {
                expected: f.samples().len(),
                got: len,
            }
            .into());
        }
        ptr::copy_nonoverlapping(f.samples().as_ptr(), buf, len);
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn gzk_field_free(field: *mut GzkField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// The profile `e^{-b|x|}` from its lattice spectrum.
///
/// # Safety
/// `grid` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_profile(grid: *const GzkGrid, b: f64, out: *mut *mut GzkField) -> GzkStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        put_field(out, inverse_transform(&profile_spectrum(ProfileSpec::new(b)?, g)))
    })
}

/// Truncated blow-up datum with the default coefficients.
///
/// # Safety
/// `grid` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_blowup_datum(
    grid: *const GzkGrid,
    j_max: u32,
    k_max: u32,
    b: f64,
    out: *mut *mut GzkField,
) -> GzkStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let spec = BlowupSpec {
            j_max,
            k_max,
            profile: ProfileSpec::new(b)?,
            ..BlowupSpec::default()
        };
        put_field(out, build_u0(&spec, g)?.field)
    })
}

/// Free evolution `W(t)f`.
///
/// # Safety
/// `field` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_propagate(field: *const GzkField, t: f64, out: *mut *mut GzkField) -> GzkStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if !t.is_finite() {
            return Err(GzkFail(GzkStatus::InvalidArgument, "t must be finite".into()));
        }
        put_field(out, inverse_transform(&apply_propagator(&forward_transform(f), t)))
    })
}

/// `‖f‖_{L^p}` for `p ≥ 1` (infinity allowed).
///
/// # Safety
/// `field` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_lebesgue_norm(field: *const GzkField, p: f64, out: *mut f64) -> GzkStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if !(p >= 1.0) {
            return Err(GzkFail(GzkStatus::InvalidArgument, format!("p = {p} is below 1")));
        }
        put(out, lebesgue_norm(f, p), "out")
    })
}

/// `‖J^s f‖₂`.
///
/// # Safety
/// `field` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_sobolev_norm(field: *const GzkField, s: f64, out: *mut f64) -> GzkStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if !s.is_finite() {
            return Err(GzkFail(GzkStatus::InvalidArgument, "s must be finite".into()));
        }
        put(out, sobolev_norm(f, SobolevSpec::h(s)), "out")
    })
}

/// Largest jump of a partial derivative across the origin at scale `delta`.
///
/// # Safety
/// `field` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_gradient_oscillation(field: *const GzkField, delta: f64, out: *mut f64) -> GzkStatus {
    guard(|| put(out, gradient_oscillation(&deref(field, "field")?.0, delta)?, "out"))
}

/// Mass, mean and Hamiltonian for the nonlinearity degree `k`.
///
/// # Safety
/// `field` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_invariants(field: *const GzkField, k: u32, out: *mut GzkInvariants) -> GzkStatus {
    guard(|| {
        let inv = invariants(&deref(field, "field")?.0, k);
        put(
            out,
            GzkInvariants {
                mass: inv.mass,
                mean: inv.mean,
                hamiltonian: inv.hamiltonian,
            },
            "out",
        )
    })
}

/// Evolves `u0` to `cfg.t_end` and returns the final state.
///
/// # Safety
/// `u0` and `cfg` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_integrate(
    u0: *const GzkField,
    cfg: *const GzkSolverConfig,
    out: *mut *mut GzkField,
) -> GzkStatus {
    guard(|| {
        let u0 = &deref(u0, "u0")?.0;
        let c = deref(cfg, "cfg")?;
        let base = SolverConfig {
            k: c.k,
            dt: c.dt,
            t_end: c.t_end,
            dealias_fraction: c.dealias_fraction,
            cfl_constant: c.cfl_constant,
            nonlinear: c.nonlinear != 0,
            snapshot_stride: 1,
        };
        base.validate()?;
        let solver = SolverConfig {
            snapshot_stride: base.steps(),
            ..base
        };
        let traj = integrate(u0, &solver)?;
        let last = traj.snapshots.into_iter().last().ok_or(Error::EmptyTrajectory)?;
        put_field(out, last)
    })
}

/// Runs the experiment config at `config_path`. `output_root` may be null.
///
/// # Safety
/// Strings must be NUL-terminated UTF-8; `outcome` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gzk_run_experiment(
    config_path: *const c_char,
    output_root: *const c_char,
    outcome: *mut GzkOutcome,
) -> GzkStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(null("config_path"));
        }
        let utf8 = |p: *const c_char| {
            CStr::from_ptr(p)
                .to_str()
                .map_err(|_| GzkFail(GzkStatus::InvalidArgument, "path is not UTF-8".into()))
        };
        let path = utf8(config_path)?;
        let root = if output_root.is_null() { None } else { Some(Path::new(utf8(output_root)?)) };
        let cfg = ExperimentConfig::from_path(Path::new(path))?;
        let summary = run(&cfg, root)?;
        let o = match summary.outcome {
            Outcome::Pass => GzkOutcome::Pass,
            Outcome::Fail => GzkOutcome::Fail,
        };
        put(outcome, o, "outcome")
    })
}
