//! C interface to `dicke-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_compute` and released
//! with the matching `*_free`. Every call returns a [`DickeStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`dicke_last_error`]. Panics never cross the boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dicke_core::analytic::theta3;
use dicke_core::classical::{hcl, lyapunov_benettin, BenettinOptions, PoincareSurface};
use dicke_core::coherent::{coherent_vector, phase_to_labels, PhasePoint};
use dicke_core::dynamics::{decompose, survival_probability, SpOptions};
use dicke_core::model::{
    build_basis, build_hamiltonian, ground_state_energy_classical, ModelParams,
};
use dicke_core::spectrum::{diagonalize, diagonalize_window, EigenSystem, EnergyWindow};
use dicke_core::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DickeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Eigensolver, integration or truncation failure.
    Numerical = 3,
    /// The initial condition is not on the requested energy shell.
    OffShell = 4,
    /// Output buffer too small; the required length is reported.
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

/// Model parameters (ω, ω₀, γ, J).
pub struct DickeModel {
    params: ModelParams,
}

/// Eigenvalues of one truncation, with eigenvectors inside the window.
pub struct DickeEigen {
    system: EigenSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DickeStatus {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::Pole(_)
        | Error::TimeGridNotIncreasing { .. }
        | Error::GridMismatch(_) => DickeStatus::InvalidArgument,
        Error::OffShell(_) => DickeStatus::OffShell,
        Error::Io { .. } | Error::CorruptCache { .. } | Error::Json(_) => DickeStatus::Io,
        _ => DickeStatus::Numerical,
    }
}

/// Run `f` behind the panic guard and translate errors.
fn guard(f: impl FnOnce() -> Result<(), (DickeStatus, String)>) -> DickeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DickeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            DickeStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (DickeStatus, String)>;
}

impl<T> IntoFfi<T> for dicke_core::Result<T> {
    fn ffi(self) -> Result<T, (DickeStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (DickeStatus, String)> {
    p.as_ref()
        .ok_or_else(|| (DickeStatus::NullPointer, format!("{name} is null")))
}

fn out<T>(p: *mut T, name: &str) -> Result<*mut T, (DickeStatus, String)> {
    if p.is_null() {
        Err((DickeStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(p)
    }
}

/// Copy of the last error message on this thread into `buf`. Returns the
/// full message length in bytes (without the terminator); 0 when there is
/// none. The copy is truncated and always nul-terminated when `len > 0`.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dicke_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dicke_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `model` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn dicke_model_new(
    omega: f64,
    omega0: f64,
    gamma: f64,
    j: f64,
    model: *mut *mut DickeModel,
) -> DickeStatus {
    guard(|| {
        let model = out(model, "model")?;
        let params = ModelParams::new(omega, omega0, gamma, j).ffi()?;
        *model = Box::into_raw(Box::new(DickeModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`dicke_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dicke_model_free(model: *mut DickeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// γ_cr = √(ωω₀)/2.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_critical_coupling(
    model: *const DickeModel,
    value: *mut f64,
) -> DickeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        *out(value, "value")? = m.params.critical_coupling();
        Ok(())
    })
}

/// Minimum of the classical energy surface.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_classical_ground_energy(
    model: *const DickeModel,
    value: *mut f64,
) -> DickeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        *out(value, "value")? = ground_state_energy_classical(&m.params).energy;
        Ok(())
    })
}

/// Classical energy at (q, p, jz, φ).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_classical_energy(
    model: *const DickeModel,
    q: f64,
    p: f64,
    jz: f64,
    phi: f64,
    value: *mut f64,
) -> DickeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let value = out(value, "value")?;
        let pt = PhasePoint::new(q, p, jz, phi);
        if !(pt.jz.abs() <= m.params.j()) || !q.is_finite() || !p.is_finite() || !phi.is_finite() {
            return Err((
                DickeStatus::InvalidArgument,
                "phase point outside |jz| <= J".into(),
            ));
        }
        *value = hcl(&pt, &m.params);
        Ok(())
    })
}

/// Diagonalize the positive-parity block truncated at `n_max` photons.
/// With `windowed != 0` all eigenvalues are computed and eigenvectors are
/// kept for `e_lo_over_j <= E/J <= e_hi_over_j`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_eigen_compute(
    model: *const DickeModel,
    n_max: u32,
    windowed: i32,
    e_lo_over_j: f64,
    e_hi_over_j: f64,
    eigen: *mut *mut DickeEigen,
) -> DickeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let eigen = out(eigen, "eigen")?;
        let basis = build_basis(&m.params, n_max as i64).ffi()?;
        let h = build_hamiltonian(&m.params, &basis).ffi()?;
        let system = if windowed != 0 {
            let w = EnergyWindow::scaled(e_lo_over_j, e_hi_over_j, &m.params).ffi()?;
            diagonalize_window(&h, w).ffi()?
        } else {
            diagonalize(&h).ffi()?
        };
        *eigen = Box::into_raw(Box::new(DickeEigen { system }));
        Ok(())
    })
}

/// # Safety
/// `eigen` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dicke_eigen_free(eigen: *mut DickeEigen) {
    if !eigen.is_null() {
        drop(Box::from_raw(eigen));
    }
}

/// Basis dimension and number of eigenvalues (equal), plus the number of
/// stored eigenvectors.
///
/// # Safety
/// Pointers must be valid; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn dicke_eigen_size(
    eigen: *const DickeEigen,
    dim: *mut usize,
    num_vectors: *mut usize,
) -> DickeStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        if let Some(d) = dim.as_mut() {
            *d = e.system.dim();
        }
        if let Some(n) = num_vectors.as_mut() {
            *n = e.system.num_vectors();
        }
        Ok(())
    })
}

/// Copy all eigenvalues (ascending) into `buf`. `written` receives the
/// number required; `BufferTooSmall` leaves `buf` untouched.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dicke_eigen_energies(
    eigen: *const DickeEigen,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> DickeStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let all = e.system.all_energies();
        if let Some(w) = written.as_mut() {
            *w = all.len();
        }
        if len < all.len() {
            return Err((
                DickeStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", all.len()),
            ));
        }
        ptr::copy_nonoverlapping(all.as_ptr(), out(buf, "buf")?, all.len());
        Ok(())
    })
}

/// Survival probability of the coherent state centred at (φ, jz/J) on the
/// surface p = 0, q = q₊ at energy `e_over_j`·J. `times` must be strictly
/// increasing. `pr` (may be null) receives the participation ratio.
///
/// # Safety
/// `times` and `sp` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn dicke_survival_probability(
    eigen: *const DickeEigen,
    e_over_j: f64,
    phi: f64,
    jz_tilde: f64,
    times: *const f64,
    n: usize,
    sp: *mut f64,
    pr: *mut f64,
) -> DickeStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        if n > 0 && (times.is_null() || sp.is_null()) {
            return Err((DickeStatus::NullPointer, "times or sp is null".into()));
        }
        let params = *e.system.params();
        let point = PoincareSurface::scaled(params, e_over_j)
            .point(phi, jz_tilde)
            .ok_or_else(|| {
                (
                    DickeStatus::OffShell,
                    format!("no surface point at E/J = {e_over_j}"),
                )
            })?;
        let cp = phase_to_labels(&point, &params).ffi()?;
        let cv = coherent_vector(&cp, &params, e.system.basis()).ffi()?;
        let d = decompose(&cv, &e.system).ffi()?;
        let t = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(times, n)
        };
        let series = survival_probability(&d, t, &SpOptions::default()).ffi()?;
        if n > 0 {
            ptr::copy_nonoverlapping(series.sp.as_ptr(), sp, n);
        }
        if let Some(pr) = pr.as_mut() {
            *pr = d.pr;
        }
        Ok(())
    })
}

/// Maximal Lyapunov exponent (two-trajectory renormalization) of the
/// orbit through (φ, jz/J) on the surface at `e_over_j`·J.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_lyapunov(
    model: *const DickeModel,
    e_over_j: f64,
    phi: f64,
    jz_tilde: f64,
    t_total: f64,
    lambda: *mut f64,
) -> DickeStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let lambda = out(lambda, "lambda")?;
        if !(t_total > 0.0) {
            return Err((
                DickeStatus::InvalidArgument,
                "t_total must be positive".into(),
            ));
        }
        let point = PoincareSurface::scaled(m.params, e_over_j)
            .point(phi, jz_tilde)
            .ok_or_else(|| {
                (
                    DickeStatus::OffShell,
                    format!("no surface point at E/J = {e_over_j}"),
                )
            })?;
        let opts = BenettinOptions {
            t_total,
            ..Default::default()
        };
        *lambda = lyapunov_benettin(&point, &m.params, &opts).ffi()?.lambda;
        Ok(())
    })
}

/// Jacobi theta function Θ₃(x, y) = 1 + 2 Σ y^(p²) cos(2px), 0 ≤ y < 1.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dicke_theta3(x: f64, y: f64, value: *mut f64) -> DickeStatus {
    guard(|| {
        let value = out(value, "value")?;
        *value = theta3(x, y).ffi()?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handles_round_trip() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(dicke_model_new(1.0, 1.0, 1.0, 4.0, &mut m), DickeStatus::Ok);
            let mut g = 0.0;
            assert_eq!(dicke_critical_coupling(m, &mut g), DickeStatus::Ok);
            assert_eq!(g, 0.5);
            let mut e = ptr::null_mut();
            assert_eq!(
                dicke_eigen_compute(m, 20, 0, 0.0, 0.0, &mut e),
                DickeStatus::Ok
            );
            let mut dim = 0;
            dicke_eigen_size(e, &mut dim, ptr::null_mut());
            let mut need = 0;
            assert_eq!(
                dicke_eigen_energies(e, ptr::null_mut(), 0, &mut need),
                DickeStatus::BufferTooSmall
            );
            assert_eq!(need, dim);
            dicke_eigen_free(e);
            dicke_model_free(m);
        }
    }

    #[test]
    fn errors_set_a_message() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(
                dicke_model_new(1.0, 1.0, 1.0, 2.25, &mut m),
                DickeStatus::InvalidArgument
            );
            assert!(m.is_null());
            let mut buf = [0 as c_char; 256];
            assert!(dicke_last_error(buf.as_mut_ptr(), buf.len()) > 0);
            assert_eq!(
                dicke_critical_coupling(ptr::null(), ptr::null_mut()),
                DickeStatus::NullPointer
            );
            let mut v = 0.0;
            assert_eq!(dicke_theta3(0.0, 1.5, &mut v), DickeStatus::InvalidArgument);
        }
    }
}
