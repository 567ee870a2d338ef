//! Deterministic propagation of the open-system dynamics.
//!
//! Two independent routes are provided and cross-checked against each
//! other:
//!
//! * the Gaussian consistency ODEs for the kernel coefficients,
//!
//!   ```text
//!   Bdot = 2 (A^2 - B^2 - C^2) - omega_t^2 / 2
//!   Adot = gamma_t - 4 A B
//!   Cdot = -gamma_t - 4 B C
//!   ```
//!
//! * a covariance-matrix oracle evolving the second moments directly,
//!
//!   ```text
//!   d<x^2>/dt   = 2 <xp>
//!   d<xp>/dt    = <p^2> - omega_t^2 <x^2>
//!   d<p^2>/dt   = -2 omega_t^2 <xp> + 2 gamma_t
//!   ```
//!
//! where the dephasing double commutator feeds only `<p^2>`, at rate
//! `2 gamma_t` in natural units.
//!
//! Both use the same fixed-step classical fourth-order integrator, with
//! control values evaluated analytically at substep times.

use crate::error::{Error, Result};
use crate::gaussian::GaussianCoeffs;
use crate::gaussian::Moments;
use crate::protocol::Controls;

/// Default number of fixed steps for deterministic integration.
pub const DEFAULT_ODE_STEPS: usize = 4000;

/// Solution curve of the consistency equations on a uniform grid.
#[derive(Debug, Clone)]
pub struct CoeffTrajectory {
    pub times: Vec<f64>,
    pub coeffs: Vec<GaussianCoeffs>,
    pub dt: f64,
    /// Classical Runge-Kutta order of the stepper.
    pub method_order: usize,
}

/// Second-moment trajectory from the covariance oracle.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub moments: Vec<Moments>,
    pub dt: f64,
    pub method_order: usize,
}

fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(t + 0.5 * dt, &y2);
    for i in 0..N {
        y2[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &y2);
    for i in 0..N {
        y2[i] = y[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &y2);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate the consistency equations from `init` under `controls`.
pub fn integrate_consistency(
    controls: &dyn Controls,
    init: GaussianCoeffs,
    n_steps: usize,
) -> Result<CoeffTrajectory> {
    if n_steps < 2 {
        return Err(Error::Precondition(format!("n_steps must be >= 2, got {n_steps}")));
    }
    let t_f = controls.duration();
    let dt = t_f / n_steps as f64;
    let rhs = |t: f64, y: &[f64; 3]| -> [f64; 3] {
        let [a, b, c] = *y;
        let gamma = controls.gamma(t);
        let omega_sq = controls.omega_sq(t);
        [
            gamma - 4.0 * a * b,
            2.0 * (a * a - b * b - c * c) - 0.5 * omega_sq,
            -gamma - 4.0 * b * c,
        ]
    };
    let mut y = [init.a, init.b, init.c];
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut coeffs = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    coeffs.push(init);
    for i in 0..n_steps {
        let t = i as f64 * dt;
        y = rk4_step(&rhs, t, &y, dt);
        let t_next = if i + 1 == n_steps { t_f } else { (i + 1) as f64 * dt };
        if !(y[0].is_finite() && y[1].is_finite() && y[2].is_finite()) {
            return Err(Error::Numerical(format!(
                "consistency integration produced non-finite coefficients at t = {t_next}"
            )));
        }
        if y[0] + y[2] <= 0.0 {
            return Err(Error::Numerical(format!(
                "consistency integration blew up at t = {t_next}: A + C = {}",
                y[0] + y[2]
            )));
        }
        coeffs.push(GaussianCoeffs::new(y[0], y[1], y[2]).map_err(|e| {
            Error::Numerical(format!("invalid state at t = {t_next}: {e}"))
        })?);
        times.push(t_next);
    }
    Ok(CoeffTrajectory { times, coeffs, dt, method_order: 4 })
}

/// Integrate the covariance oracle from `init` under `controls`.
pub fn integrate_covariance_oracle(
    controls: &dyn Controls,
    init: Moments,
    n_steps: usize,
) -> Result<MomentTrajectory> {
    if n_steps < 2 {
        return Err(Error::Precondition(format!("n_steps must be >= 2, got {n_steps}")));
    }
    let t_f = controls.duration();
    let dt = t_f / n_steps as f64;
    let rhs = |t: f64, y: &[f64; 3]| -> [f64; 3] {
        let [xx, xp, pp] = *y;
        let omega_sq = controls.omega_sq(t);
        let gamma = controls.gamma(t);
        [2.0 * xp, pp - omega_sq * xx, -2.0 * omega_sq * xp + 2.0 * gamma]
    };
    let mut y = [init.xx, init.xp, init.pp];
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut moments = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    moments.push(init);
    for i in 0..n_steps {
        let t = i as f64 * dt;
        y = rk4_step(&rhs, t, &y, dt);
        let t_next = if i + 1 == n_steps { t_f } else { (i + 1) as f64 * dt };
        let m = Moments { xx: y[0], xp: y[1], pp: y[2] };
        if !(m.xx.is_finite() && m.xp.is_finite() && m.pp.is_finite()) {
            return Err(Error::Numerical(format!(
                "covariance oracle produced non-finite moments at t = {t_next}"
            )));
        }
        // A failed uncertainty bound signals a sign error upstream.
        if m.xx * m.pp - m.xp * m.xp < 0.25 - 1e-10 {
            return Err(Error::Numerical(format!(
                "covariance oracle violated the uncertainty bound at t = {t_next}: \
                 xx pp - xp^2 = {}",
                m.xx * m.pp - m.xp * m.xp
            )));
        }
        moments.push(m);
        times.push(t_next);
    }
    Ok(MomentTrajectory { times, moments, dt, method_order: 4 })
}
