//! C ABI over the schedule synthesis and propagation core.
//!
//! Conventions: every fallible call returns an [`StaStatus`] and writes
//! results through out-pointers; schedules are opaque handles created by
//! [`sta_schedule_create`] and released by [`sta_schedule_free`]. The
//! header `include/sta_thermalizer.h` is regenerated on every build.

use std::panic::{catch_unwind, AssertUnwindSafe};

use sta_thermalizer::dynamics::{integrate_consistency, DEFAULT_ODE_STEPS};
use sta_thermalizer::gaussian::{spectral_decompose, thermal_coeffs, von_neumann_entropy};
use sta_thermalizer::protocol::Controls;
use sta_thermalizer::{ControlSchedule, Error, GaussianCoeffs, ProtocolSpec, ThermalEndpoint};

/// Result codes; mirrors the CLI exit codes for the fallible classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaStatus {
    /// Success.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Parameters outside the mathematical domain or a violated precondition.
    Domain = 2,
    /// The computation failed numerically.
    Numerical = 3,
}

impl From<&Error> for StaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::Precondition(_) => StaStatus::Domain,
            Error::Numerical(_) => StaStatus::Numerical,
            Error::Io(_) => StaStatus::Numerical,
        }
    }
}

/// Opaque synthesized control schedule.
pub struct StaSchedule {
    inner: ControlSchedule,
}

/// Control values sampled at one time of a schedule.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StaControlSample {
    /// Squared trap frequency (may be negative during trap inversion).
    pub omega_sq: f64,
    /// Dephasing strength.
    pub gamma: f64,
    /// Kernel coefficient A.
    pub a: f64,
    /// Kernel coefficient C.
    pub c: f64,
    /// Effective frequency; the exact trajectory carries B = omega_eff / 2.
    pub omega_eff: f64,
    /// Scaling factor relative to the initial normalization.
    pub eta: f64,
}

/// Endpoint of a propagation run: final kernel coefficients and the
/// worst-coefficient deviation from the target thermal state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StaFinalState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub deviation: f64,
}

// The wrapped operations are pure over shared references, so a panic
// cannot leave a handle in a torn state.
fn guarded(f: impl FnOnce() -> StaStatus) -> StaStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(StaStatus::Numerical)
}

/// Synthesize a control schedule between two thermal states.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
/// On success it receives an owned handle that must be released with
/// [`sta_schedule_free`]; on failure it is set to null.
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_create(
    omega0: f64,
    beta0: f64,
    omegaf: f64,
    betaf: f64,
    tf: f64,
    n_steps: usize,
    out: *mut *mut StaSchedule,
) -> StaStatus {
    if out.is_null() {
        return StaStatus::NullPointer;
    }
    unsafe { *out = std::ptr::null_mut() };
    guarded(|| {
        let build = || -> Result<ControlSchedule, Error> {
            let spec = ProtocolSpec::new(
                ThermalEndpoint::new(omega0, beta0)?,
                ThermalEndpoint::new(omegaf, betaf)?,
                tf,
                n_steps,
            )?;
            ControlSchedule::synthesize(spec)
        };
        match build() {
            Ok(inner) => {
                let handle = Box::into_raw(Box::new(StaSchedule { inner }));
                unsafe { *out = handle };
                StaStatus::Ok
            }
            Err(e) => StaStatus::from(&e),
        }
    })
}

/// Release a schedule handle. Null is accepted and ignored.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by
/// [`sta_schedule_create`] that has not yet been freed.
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_free(handle: *mut StaSchedule) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Protocol duration of a schedule; NaN for a null handle.
///
/// # Safety
/// `handle` must be null or a live schedule handle.
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_duration(handle: *const StaSchedule) -> f64 {
    match unsafe { handle.as_ref() } {
        Some(s) => s.inner.duration(),
        None => f64::NAN,
    }
}

/// Whether the schedule needs `gamma_t < 0` somewhere (1), or is
/// realizable by the stochastic schemes (0); -1 for a null handle.
///
/// # Safety
/// `handle` must be null or a live schedule handle.
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_non_markovian(handle: *const StaSchedule) -> i32 {
    match unsafe { handle.as_ref() } {
        Some(s) => s.inner.non_markovian as i32,
        None => -1,
    }
}

/// Sample the control fields of a schedule at time `t` in `[0, tf]`.
///
/// # Safety
/// `handle` must be a live schedule handle; `out` must point to
/// writable storage for one [`StaControlSample`].
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_sample(
    handle: *const StaSchedule,
    t: f64,
    out: *mut StaControlSample,
) -> StaStatus {
    let Some(sched) = (unsafe { handle.as_ref() }) else {
        return StaStatus::NullPointer;
    };
    if out.is_null() {
        return StaStatus::NullPointer;
    }
    guarded(|| {
        let sample = || -> Result<StaControlSample, Error> {
            let p = sched.inner.interpolate(t)?;
            Ok(StaControlSample {
                omega_sq: sta_thermalizer::protocol::control_frequency(&p)?,
                gamma: sta_thermalizer::protocol::control_dephasing(&p)?,
                a: p.a,
                c: p.c,
                omega_eff: sta_thermalizer::protocol::effective_omega(&p)?,
                eta: sched.inner.eta(t)?,
            })
        };
        match sample() {
            Ok(s) => {
                unsafe { *out = s };
                StaStatus::Ok
            }
            Err(e) => StaStatus::from(&e),
        }
    })
}

/// Location and signed value of the extremal dephasing strength.
/// `degenerate` receives 1 when the dephasing vanishes identically.
///
/// # Safety
/// `handle` must be a live schedule handle; `t_max`, `gamma_max`, and
/// `degenerate` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_gamma_max(
    handle: *const StaSchedule,
    t_max: *mut f64,
    gamma_max: *mut f64,
    degenerate: *mut i32,
) -> StaStatus {
    let Some(sched) = (unsafe { handle.as_ref() }) else {
        return StaStatus::NullPointer;
    };
    if t_max.is_null() || gamma_max.is_null() || degenerate.is_null() {
        return StaStatus::NullPointer;
    }
    guarded(|| match sched.inner.gamma_max() {
        Ok((t, g, flag)) => {
            unsafe {
                *t_max = t;
                *gamma_max = g;
                *degenerate = flag as i32;
            }
            StaStatus::Ok
        }
        Err(e) => StaStatus::from(&e),
    })
}

/// Integrate the consistency dynamics along the schedule from its
/// initial thermal state and report the final coefficients together
/// with the worst-coefficient deviation from the target.
/// `n_steps == 0` selects the default resolution.
///
/// # Safety
/// `handle` must be a live schedule handle; `out` must point to
/// writable storage for one [`StaFinalState`].
#[no_mangle]
pub unsafe extern "C" fn sta_schedule_propagate(
    handle: *const StaSchedule,
    n_steps: usize,
    out: *mut StaFinalState,
) -> StaStatus {
    let Some(sched) = (unsafe { handle.as_ref() }) else {
        return StaStatus::NullPointer;
    };
    if out.is_null() {
        return StaStatus::NullPointer;
    }
    guarded(|| {
        let run = || -> Result<StaFinalState, Error> {
            let steps = if n_steps == 0 { DEFAULT_ODE_STEPS } else { n_steps };
            let init = thermal_coeffs(&sched.inner.spec.start)?;
            let traj = integrate_consistency(&sched.inner, init, steps)?;
            let target = thermal_coeffs(&sched.inner.spec.end)?;
            let last = traj.coeffs.last().expect("non-empty trajectory");
            Ok(StaFinalState {
                a: last.a,
                b: last.b,
                c: last.c,
                deviation: (last.a - target.a)
                    .abs()
                    .max((last.b - target.b).abs())
                    .max((last.c - target.c).abs()),
            })
        };
        match run() {
            Ok(s) => {
                unsafe { *out = s };
                StaStatus::Ok
            }
            Err(e) => StaStatus::from(&e),
        }
    })
}

/// Kernel coefficients of the thermal state at `(omega, beta)`.
///
/// # Safety
/// `a`, `b`, and `c` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn sta_thermal_coeffs(
    omega: f64,
    beta: f64,
    a: *mut f64,
    b: *mut f64,
    c: *mut f64,
) -> StaStatus {
    if a.is_null() || b.is_null() || c.is_null() {
        return StaStatus::NullPointer;
    }
    guarded(|| {
        let run = || -> Result<GaussianCoeffs, Error> {
            thermal_coeffs(&ThermalEndpoint::new(omega, beta)?)
        };
        match run() {
            Ok(coeffs) => {
                unsafe {
                    *a = coeffs.a;
                    *b = coeffs.b;
                    *c = coeffs.c;
                }
                StaStatus::Ok
            }
            Err(e) => StaStatus::from(&e),
        }
    })
}

/// Von Neumann entropy of the Gaussian state with kernel coefficients
/// `(a, b, c)`.
///
/// # Safety
/// `entropy` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sta_state_entropy(
    a: f64,
    b: f64,
    c: f64,
    entropy: *mut f64,
) -> StaStatus {
    if entropy.is_null() {
        return StaStatus::NullPointer;
    }
    guarded(|| {
        let run = || -> Result<f64, Error> {
            let coeffs = GaussianCoeffs::new(a, b, c)?;
            von_neumann_entropy(spectral_decompose(&coeffs)?.u)
        };
        match run() {
            Ok(s) => {
                unsafe { *entropy = s };
                StaStatus::Ok
            }
            Err(e) => StaStatus::from(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lifecycle_through_the_abi() {
        let mut handle: *mut StaSchedule = std::ptr::null_mut();
        let status = unsafe { sta_schedule_create(1.0, 1.0, 0.25, 2.0, 6.0, 100, &mut handle) };
        assert_eq!(status, StaStatus::Ok);
        assert!(!handle.is_null());

        assert_eq!(unsafe { sta_schedule_duration(handle) }, 6.0);
        assert_eq!(unsafe { sta_schedule_non_markovian(handle) }, 0);

        let mut sample = StaControlSample::default();
        assert_eq!(
            unsafe { sta_schedule_sample(handle, 0.0, &mut sample) },
            StaStatus::Ok
        );
        assert!((sample.omega_sq - 1.0).abs() < 1e-9);
        assert_eq!(sample.gamma, 0.0);
        assert_eq!(sample.eta, 1.0);
        assert_eq!(
            unsafe { sta_schedule_sample(handle, 7.0, &mut sample) },
            StaStatus::Domain,
            "outside the protocol window"
        );

        let (mut t_max, mut g_max, mut degenerate) = (0.0, 0.0, 0);
        assert_eq!(
            unsafe { sta_schedule_gamma_max(handle, &mut t_max, &mut g_max, &mut degenerate) },
            StaStatus::Ok
        );
        assert!(g_max > 0.0 && degenerate == 0);
        assert!(t_max > 0.0 && t_max < 6.0);

        let mut fin = StaFinalState::default();
        assert_eq!(
            unsafe { sta_schedule_propagate(handle, 0, &mut fin) },
            StaStatus::Ok
        );
        assert!(fin.deviation < 1e-6, "deviation {}", fin.deviation);

        unsafe { sta_schedule_free(handle) };
        unsafe { sta_schedule_free(std::ptr::null_mut()) };
    }

    #[test]
    fn error_paths_map_to_codes() {
        let mut handle: *mut StaSchedule = std::ptr::null_mut();
        assert_eq!(
            unsafe { sta_schedule_create(-1.0, 1.0, 3.0, 2.0, 6.0, 100, &mut handle) },
            StaStatus::Domain
        );
        assert!(handle.is_null());
        assert_eq!(
            unsafe { sta_schedule_create(1.0, 1.0, 3.0, 2.0, 6.0, 100, std::ptr::null_mut()) },
            StaStatus::NullPointer
        );
        assert!(unsafe { sta_schedule_duration(std::ptr::null()) }.is_nan());
        assert_eq!(unsafe { sta_schedule_non_markovian(std::ptr::null()) }, -1);

        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        assert_eq!(
            unsafe { sta_thermal_coeffs(1.0, 1.0, &mut a, &mut b, &mut c) },
            StaStatus::Ok
        );
        assert!((a - 0.6565176427496656).abs() < 1e-15);
        assert_eq!(
            unsafe { sta_thermal_coeffs(1.0, -0.5, &mut a, &mut b, &mut c) },
            StaStatus::Domain
        );

        let mut s = 0.0;
        assert_eq!(unsafe { sta_state_entropy(a, b, c, &mut s) }, StaStatus::Ok);
        assert!((s - 1.0406518522564083).abs() < 1e-12);
        // pure state: degenerate spectrum is a domain error
        assert_eq!(
            unsafe { sta_state_entropy(0.5, 0.0, 0.0, &mut s) },
            StaStatus::Domain
        );
    }
}
