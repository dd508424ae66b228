//! C interface to `richards-core`.
//!
//! Objects are opaque heap handles created by `*_new*` and released by the
//! matching `*_free`. Every fallible call returns a [`RichardsStatus`]; the
//! message of the most recent failure on the calling thread is available from
//! [`richards_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use richards_core::driver::{parse_config, SimState, Simulation};
use richards_core::{Error, Hydraulics, RetentionModel, RhoGConvention, SoilParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RichardsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed or inconsistent input (configuration, parameters, geometry).
    InvalidArgument = 2,
    /// A value outside the domain of a function.
    Domain = 3,
    NonConvergence = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Soil hydraulics: retention curve, relative permeability and Kirchhoff transform.
pub struct RichardsHydraulics {
    inner: Hydraulics,
}

/// A configured simulation together with its current state.
pub struct RichardsSimulation {
    sim: Simulation,
    state: SimState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RichardsStatus {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Geometry(_) | Error::Dimension { .. } => {
            RichardsStatus::InvalidArgument
        }
        Error::DegenerateSaturation(_) | Error::Domain(_) | Error::BelowMinimalPressure { .. } | Error::NotCoercive(_) => {
            RichardsStatus::Domain
        }
        Error::NonConvergence { .. } => RichardsStatus::NonConvergence,
        Error::Io { .. } => RichardsStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RichardsStatus>) -> RichardsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RichardsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            RichardsStatus::Panic
        }
    }
}

fn fail(e: Error) -> RichardsStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, RichardsStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        RichardsStatus::NullPointer
    })
}

unsafe fn get_mut<'a, T>(p: *mut T) -> Result<&'a mut T, RichardsStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null pointer");
        RichardsStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), RichardsStatus> {
    *get_mut(out)? = value;
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, RichardsStatus> {
    if s.is_null() {
        set_error("null string");
        return Err(RichardsStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        RichardsStatus::InvalidArgument
    })
}

/// Message of the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn richards_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn richards_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn convention(paper_normalized: bool) -> RhoGConvention {
    if paper_normalized {
        RhoGConvention::PaperNormalized
    } else {
        RhoGConvention::Physical
    }
}

fn soil(model: RetentionModel, k: f64, mu: f64, n: f64, s_m: f64, s_max: f64, paper_normalized: bool) -> SoilParams {
    SoilParams {
        model,
        k,
        mu,
        n,
        s_min: s_m,
        s_max,
        rho_g_convention: convention(paper_normalized),
        ..SoilParams::sand()
    }
}

unsafe fn new_hydraulics(params: SoilParams, out: *mut *mut RichardsHydraulics) -> RichardsStatus {
    guard(|| {
        let out = get_mut(out)?;
        *out = ptr::null_mut();
        let inner = Hydraulics::new(params).map_err(fail)?;
        *out = Box::into_raw(Box::new(RichardsHydraulics { inner }));
        Ok(())
    })
}

/// Brooks–Corey soil. `p_b < 0` [Pa]; `paper_normalized != 0` selects `ρg = g`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn richards_hydraulics_new_brooks_corey(
    k: f64,
    mu: f64,
    n: f64,
    s_m: f64,
    s_max: f64,
    p_b: f64,
    lambda: f64,
    paper_normalized: i32,
    out: *mut *mut RichardsHydraulics,
) -> RichardsStatus {
    let model = RetentionModel::BrooksCorey { p_b, lambda };
    new_hydraulics(soil(model, k, mu, n, s_m, s_max, paper_normalized != 0), out)
}

/// van Genuchten soil with `alpha` in 1/Pa and `l > 1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn richards_hydraulics_new_van_genuchten(
    k: f64,
    mu: f64,
    n: f64,
    s_m: f64,
    s_max: f64,
    alpha: f64,
    l: f64,
    paper_normalized: i32,
    out: *mut *mut RichardsHydraulics,
) -> RichardsStatus {
    let model = RetentionModel::VanGenuchten { alpha, l };
    new_hydraulics(soil(model, k, mu, n, s_m, s_max, paper_normalized != 0), out)
}

/// # Safety
/// `h` must come from a constructor of this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn richards_hydraulics_free(h: *mut RichardsHydraulics) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Saturation at capillary pressure `p` [Pa].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_saturation(h: *const RichardsHydraulics, p: f64, out: *mut f64) -> RichardsStatus {
    guard(|| write(out, get(h)?.inner.saturation_from_pressure(p)))
}

/// Relative permeability at saturation `s`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_rel_perm(h: *const RichardsHydraulics, s: f64, out: *mut f64) -> RichardsStatus {
    guard(|| write(out, get(h)?.inner.rel_perm(s)))
}

/// Generalized pressure `u` [m²/s] of capillary pressure `p` [Pa].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_kirchhoff(h: *const RichardsHydraulics, p: f64, out: *mut f64) -> RichardsStatus {
    guard(|| write(out, get(h)?.inner.kirchhoff(p)))
}

/// Capillary pressure [Pa] of generalized pressure `u`; fails at or below the minimal value.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_inv_kirchhoff(h: *const RichardsHydraulics, u: f64, out: *mut f64) -> RichardsStatus {
    guard(|| {
        let p = get(h)?.inner.inv_kirchhoff(u).map_err(fail)?;
        write(out, p)
    })
}

/// Minimal generalized pressure; `-INFINITY` when unbounded.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_u_min(h: *const RichardsHydraulics, out: *mut f64) -> RichardsStatus {
    guard(|| write(out, get(h)?.inner.u_min()))
}

unsafe fn new_simulation(text: &str, origin: &Path, base: &Path, out: *mut *mut RichardsSimulation) -> RichardsStatus {
    guard(|| {
        let out = get_mut(out)?;
        *out = ptr::null_mut();
        let cfg = parse_config(text, origin, base).map_err(fail)?;
        let sim = Simulation::new(cfg).map_err(fail)?;
        let state = sim.init_state().map_err(fail)?;
        *out = Box::into_raw(Box::new(RichardsSimulation { sim, state }));
        Ok(())
    })
}

/// Simulation from a JSON configuration file, positioned at `t = 0`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_new_from_file(
    path: *const c_char,
    out: *mut *mut RichardsSimulation,
) -> RichardsStatus {
    let path = match c_str(path) {
        Ok(p) => Path::new(p),
        Err(s) => return s,
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(Error::Io { path: path.to_path_buf(), source: e }),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    new_simulation(&text, path, base, out)
}

/// Simulation from JSON configuration text; relative file references resolve
/// against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_new_from_json(
    json: *const c_char,
    out: *mut *mut RichardsSimulation,
) -> RichardsStatus {
    match c_str(json) {
        Ok(text) => new_simulation(text, Path::new("<json>"), Path::new("."), out),
        Err(s) => s,
    }
}

/// # Safety
/// `sim` must come from a constructor of this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_free(sim: *mut RichardsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by one time step. On failure the state is left unchanged.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_step(sim: *mut RichardsSimulation) -> RichardsStatus {
    guard(|| {
        let s = get_mut(sim)?;
        let (next, _) = s.sim.time_step(&s.state).map_err(fail)?;
        s.state = next;
        Ok(())
    })
}

/// Number of time steps of the configured run, `⌈T/τ⌉`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_num_steps(sim: *const RichardsSimulation, out: *mut usize) -> RichardsStatus {
    guard(|| write(out, get(sim)?.sim.cfg.num_steps()))
}

/// Current step index and time [s].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_time(
    sim: *const RichardsSimulation,
    step: *mut usize,
    t: *mut f64,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        write(step, s.state.n)?;
        write(t, s.state.t)
    })
}

/// Number of mesh vertices and of surface cells.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_sizes(
    sim: *const RichardsSimulation,
    num_vertices: *mut usize,
    num_surface_cells: *mut usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        write(num_vertices, s.sim.mesh().num_vertices())?;
        write(num_surface_cells, s.sim.trace().len())
    })
}

unsafe fn copy_out(values: impl ExactSizeIterator<Item = f64>, buf: *mut f64, len: usize) -> Result<(), RichardsStatus> {
    if values.len() > len {
        set_error(format!("buffer holds {len} values, {} needed", values.len()));
        return Err(RichardsStatus::BufferTooSmall);
    }
    if buf.is_null() {
        set_error("null buffer");
        return Err(RichardsStatus::NullPointer);
    }
    for (i, v) in values.enumerate() {
        *buf.add(i) = v;
    }
    Ok(())
}

/// Vertex coordinates as interleaved `(x, z)` pairs; `len` counts doubles.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_vertices(
    sim: *const RichardsSimulation,
    buf: *mut f64,
    len: usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        let coords: Vec<f64> = s.sim.mesh().vertices.iter().flat_map(|v| [v[0], v[1]]).collect();
        copy_out(coords.into_iter(), buf, len)
    })
}

/// Generalized pressure at every vertex [m²/s].
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_generalized_pressure(
    sim: *const RichardsSimulation,
    buf: *mut f64,
    len: usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        copy_out(s.state.u.values.iter().copied(), buf, len)
    })
}

/// Capillary pressure at every vertex [Pa].
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_pressure(
    sim: *const RichardsSimulation,
    buf: *mut f64,
    len: usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        let hyd = &s.sim.hyd;
        copy_out(s.state.u.values.iter().map(|&u| hyd.state_at(u).pressure), buf, len)
    })
}

/// Saturation at every vertex.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_saturation(
    sim: *const RichardsSimulation,
    buf: *mut f64,
    len: usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        let hyd = &s.sim.hyd;
        copy_out(s.state.u.values.iter().map(|&u| hyd.state_at(u).saturation), buf, len)
    })
}

/// Surface water height on every surface cell [m], ordered by increasing x.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_surface_height(
    sim: *const RichardsSimulation,
    buf: *mut f64,
    len: usize,
) -> RichardsStatus {
    guard(|| {
        let s = get(sim)?;
        copy_out(s.state.w.values.iter().copied(), buf, len)
    })
}

/// Runs the whole configured simulation from `t = 0`, writing outputs to
/// `out_dir` (or nowhere if null). Leaves the handle at the final state.
///
/// # Safety
/// `sim` must be a valid handle; `out_dir` null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn richards_simulation_run(sim: *mut RichardsSimulation, out_dir: *const c_char) -> RichardsStatus {
    guard(|| {
        let s = get_mut(sim)?;
        let dir = if out_dir.is_null() { None } else { Some(Path::new(c_str(out_dir)?)) };
        let mut last = None;
        s.sim
            .run_with(dir, |state, _| last = Some(state.clone()))
            .map_err(fail)?;
        if let Some(state) = last {
            s.state = state;
        }
        Ok(())
    })
}
