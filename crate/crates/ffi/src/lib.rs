//! C interface to `hyperreg`.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns an [`HrStatus`]; on failure the
//! message is available from [`hr_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperreg::gain::{self, DesignOptions, GainCertificate, WeightSearch};
use hyperreg::heat::{self, HeatProblem};
use hyperreg::model::DisturbanceScenario;
use hyperreg::scenarios::{self, SaintVenantParams};
use hyperreg::sim::{self, InitialState, SimConfig, Trajectory};
use hyperreg::{forwarding, Error, HyperbolicSystem};
use hyperreg::nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrStatus {
    Ok = 0,
    InvalidInput = 1,
    Assumption = 2,
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

pub struct HrSystem(HyperbolicSystem);
pub struct HrCertificate(GainCertificate);
pub struct HrTrajectory(Trajectory);

/// Scalars of a gain certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrScalars {
    pub mu: f64,
    pub c: f64,
    pub ki_star: f64,
    pub ki: f64,
    pub p_max: f64,
    pub p: f64,
    pub mu_e: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrHeatGain {
    pub ki_norm: f64,
    pub cainv_norm: f64,
    pub ki_star: f64,
    pub ki_star_sharp: f64,
    /// Row-major `C A⁻¹ B`.
    pub cainvb: [f64; 9],
    /// Row-major `Ki`.
    pub ki_matrix: [f64; 9],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrForwardingCheck {
    pub ki_star: f64,
    pub ki: f64,
    pub mu_e: f64,
    pub dissipation_max: f64,
    pub pe_min_eigenvalue: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HrStatus {
    match e.exit_code() {
        1 => HrStatus::InvalidInput,
        2 => HrStatus::Assumption,
        _ => HrStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HrStatus>) -> HrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            HrStatus::Panic
        }
    }
}

fn fail(e: Error) -> HrStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> HrStatus {
    set_error(format!("null pointer: {what}"));
    HrStatus::NullPointer
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), HrStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], HrStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn hr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a system description in JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_system_from_json(json: *const c_char, out: *mut *mut HrSystem) -> HrStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| fail(Error::InvalidInput(e.to_string())))?;
        let (system, _) = HyperbolicSystem::from_json_str(text).map_err(fail)?;
        emit(out, HrSystem(system))
    })
}

/// Scalar transport `φ_t + φ_s = 0` with `φ(0) = u`, `y = φ(1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_system_transport(out: *mut *mut HrSystem) -> HrStatus {
    guard(|| emit(out, HrSystem(scenarios::transport())))
}

/// Linearized Saint-Venant channel with speeds `c`, `-d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_system_saint_venant(
    c: f64,
    d: f64,
    k0: f64,
    k1: f64,
    b0: f64,
    b1: f64,
    out: *mut *mut HrSystem,
) -> HrStatus {
    guard(|| {
        let system = scenarios::saint_venant(&SaintVenantParams { c, d, k0, k1, b0, b1 });
        if let Some(v) = system.validate().first() {
            return Err(fail(Error::InvalidInput(v.to_string())));
        }
        emit(out, HrSystem(system))
    })
}

/// # Safety
/// `system` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hr_system_free(system: *mut HrSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// # Safety
/// `system` must be a valid handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hr_system_dims(system: *const HrSystem, n: *mut usize, ell: *mut usize, m: *mut usize) -> HrStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        for (p, v) in [(n, s.0.n), (ell, s.0.ell), (m, s.0.m)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Runs the full design. `mu <= 0` searches the default rate grid; otherwise the rate is fixed.
///
/// # Safety
/// `system` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_design(system: *const HrSystem, mu: f64, out: *mut *mut HrCertificate) -> HrStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| null("system"))?;
        let options = DesignOptions {
            search: if mu > 0.0 { WeightSearch::fixed_rate(mu) } else { WeightSearch::default() },
            ..Default::default()
        };
        let cert = gain::design_with(&s.0, &options).map_err(fail)?;
        emit(out, HrCertificate(cert))
    })
}

/// # Safety
/// `cert` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hr_certificate_free(cert: *mut HrCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// # Safety
/// `cert` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_certificate_scalars(cert: *const HrCertificate, out: *mut HrScalars) -> HrStatus {
    guard(|| {
        let c = &cert.as_ref().ok_or_else(|| null("cert"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = HrScalars { mu: c.mu(), c: c.c(), ki_star: c.ki_star, ki: c.ki, p_max: c.p_max, p: c.p, mu_e: c.mu_e };
        Ok(())
    })
}

/// Copies `Ki` row-major into `buf`, which must hold `m * m` values.
///
/// # Safety
/// `cert` must be a valid handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_certificate_ki_matrix(cert: *const HrCertificate, buf: *mut f64, len: usize) -> HrStatus {
    guard(|| {
        let k = &cert.as_ref().ok_or_else(|| null("cert"))?.0.ki_matrix;
        if len != k.len() {
            return Err(fail(Error::InvalidInput(format!("buffer holds {len} values, Ki has {}", k.len()))));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                out[i * k.ncols() + j] = k[(i, j)];
            }
        }
        Ok(())
    })
}

/// Serializes the certificate; release the string with [`hr_string_free`].
///
/// # Safety
/// `cert` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_certificate_to_json(cert: *const HrCertificate, out: *mut *mut c_char) -> HrStatus {
    guard(|| {
        let c = &cert.as_ref().ok_or_else(|| null("cert"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c.to_json().map_err(fail)?;
        *out = CString::new(text).map_err(|e| fail(Error::Numerical(e.to_string())))?.into_raw();
        Ok(())
    })
}

/// Closed-loop run from zero data toward `y_ref` (length `m`).
///
/// # Safety
/// Handles must be valid; `y_ref` must point to `m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_simulate(
    system: *const HrSystem,
    cert: *const HrCertificate,
    y_ref: *const f64,
    m: usize,
    horizon: f64,
    cells: usize,
    cfl: f64,
    out: *mut *mut HrTrajectory,
) -> HrStatus {
    guard(|| {
        let s = &system.as_ref().ok_or_else(|| null("system"))?.0;
        let c = &cert.as_ref().ok_or_else(|| null("cert"))?.0;
        let y_ref = slice(y_ref, m, "y_ref")?;
        let scenario = DisturbanceScenario::reference(y_ref.to_vec());
        let config = SimConfig { horizon, cells, cfl, ..Default::default() };
        let traj = sim::simulate(s, c, &scenario, &InitialState::zero(s, cells), &config).map_err(fail)?;
        emit(out, HrTrajectory(traj))
    })
}

/// # Safety
/// `traj` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn hr_trajectory_free(traj: *mut HrTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded frames, or 0 for a null handle.
///
/// # Safety
/// `traj` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn hr_trajectory_len(traj: *const HrTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.times.len())
}

/// Time, `Ve` and output `y` (length `m`) of one frame.
///
/// # Safety
/// `traj` must be a valid handle; `y` must point to `m` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_trajectory_frame(
    traj: *const HrTrajectory,
    frame: usize,
    t: *mut f64,
    ve: *mut f64,
    y: *mut f64,
    m: usize,
) -> HrStatus {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(|| null("traj"))?.0;
        if frame >= tr.times.len() {
            return Err(fail(Error::InvalidInput(format!("frame {frame} out of range"))));
        }
        if m != tr.y[frame].len() {
            return Err(fail(Error::InvalidInput(format!("output has {} entries, buffer {m}", tr.y[frame].len()))));
        }
        if !t.is_null() {
            *t = tr.times[frame];
        }
        if !ve.is_null() {
            *ve = tr.ve[frame];
        }
        if m > 0 {
            if y.is_null() {
                return Err(null("y"));
            }
            std::slice::from_raw_parts_mut(y, m).copy_from_slice(&tr.y[frame]);
        }
        Ok(())
    })
}

/// Gain of the heated bar on `intervals` grid intervals (a multiple of 20).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_heat_gain(intervals: usize, out: *mut HrHeatGain) -> HrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let problem = HeatProblem::new(intervals).map_err(fail)?;
        let g = heat::heat_gain(&problem).map_err(fail)?;
        let mut r = HrHeatGain {
            ki_norm: g.ki_norm,
            cainv_norm: g.cainv_norm,
            ki_star: g.ki_star,
            ki_star_sharp: g.ki_star_sharp,
            ..Default::default()
        };
        for i in 0..3 {
            for j in 0..3 {
                r.cainvb[3 * i + j] = g.cainvb[(i, j)];
                r.ki_matrix[3 * i + j] = g.ki_matrix[(i, j)];
            }
        }
        *out = r;
        Ok(())
    })
}

/// Forwarding design for row-major `A` (`n×n`), `B` (`n×m`), `C` (`m×n`), checked at `fraction · ki*`.
///
/// # Safety
/// Matrix pointers must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hr_forwarding_check(
    a: *const f64,
    b: *const f64,
    c: *const f64,
    n: usize,
    m: usize,
    fraction: f64,
    out: *mut HrForwardingCheck,
) -> HrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if n == 0 || m == 0 {
            return Err(fail(Error::InvalidInput("dimensions must be positive".into())));
        }
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "A")?);
        let b = DMatrix::from_row_slice(n, m, slice(b, n * m, "B")?);
        let c = DMatrix::from_row_slice(m, n, slice(c, m * n, "C")?);
        let lyap = forwarding::lyapunov_p(&a).map_err(fail)?;
        let design = forwarding::forwarding_design(&a, &b, &c, &lyap.p, lyap.mu).map_err(fail)?;
        let ki = fraction * design.ki_star;
        let rep = forwarding::verify_dissipation(&design, &a, &b, &c, ki).map_err(fail)?;
        *out = HrForwardingCheck {
            ki_star: design.ki_star,
            ki,
            mu_e: rep.operating.mu_e,
            dissipation_max: rep.dissipation_max,
            pe_min_eigenvalue: rep.pe_min_eigenvalue,
            pass: rep.pass,
        };
        Ok(())
    })
}
