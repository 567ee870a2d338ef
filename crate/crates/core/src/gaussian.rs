//! Gaussian density matrices of a harmonic oscillator and their
//! coefficient, thermal, spectral, and second-moment representations.
//!
//! Everything is in natural units (`hbar = m = 1`), so frequencies,
//! inverse temperatures, and the kernel coefficients are all
//! dimensionless. The density matrix in coordinate space is
//!
//! ```text
//! rho(x, x') = N exp(-A (x^2 + x'^2) + i B (x^2 - x'^2) - 2 C x x'),
//! N = sqrt(2 (A + C) / pi),
//! ```
//!
//! closed under the dephasing dynamics implemented in [`crate::dynamics`].

use crate::error::{Error, Result};

/// Hyperbolic argument above which thermal coefficients degenerate
/// numerically (`1/sinh` underflows toward a pure state).
const MAX_BETA_OMEGA: f64 = 700.0;

/// Slack allowed on `-A/C >= 1` before an input is reported as a pure
/// (degenerate-spectrum) state instead of being fed to `acosh`.
const SPECTRUM_GAP: f64 = 1e-14;

/// An equilibrium state of the oscillator: trap frequency and inverse
/// temperature. These parameterize protocol boundary states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalEndpoint {
    pub omega: f64,
    pub beta: f64,
}

impl ThermalEndpoint {
    pub fn new(omega: f64, beta: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { omega, beta })
    }

    /// Spectral Boltzmann weight `u = exp(-beta omega)` of this state.
    pub fn boltzmann_u(&self) -> f64 {
        (-self.beta * self.omega).exp()
    }
}

/// The kernel coefficients `(A, B, C)` of a Gaussian density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GaussianCoeffs {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite Gaussian coefficients (A={a}, B={b}, C={c})"
            )));
        }
        if a + c <= 0.0 {
            return Err(Error::Domain(format!(
                "A + C = {} must be positive for a normalizable state",
                a + c
            )));
        }
        if a <= c.abs() {
            return Err(Error::Domain(format!(
                "A = {a} must exceed |C| = {} for a positive-definite spectrum",
                c.abs()
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Normalization factor `N = sqrt(2 (A + C) / pi)`.
    pub fn norm(&self) -> f64 {
        (2.0 * (self.a + self.c) / std::f64::consts::PI).sqrt()
    }
}

/// Instantaneous diagonalization data of a Gaussian state: the
/// eigenbasis length scale `k`, Boltzmann weight `u`, level spacing
/// `eps_tilde`, effective frequency `omega_tilde`, and the phase
/// curvature `B` carried through unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub k: f64,
    pub u: f64,
    pub eps_tilde: f64,
    pub omega_tilde: f64,
    pub b: f64,
}

impl SpectralData {
    pub fn new(k: f64, u: f64, b: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Domain(format!("k must be positive, got {k}")));
        }
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
        }
        let eps_tilde = -u.ln();
        Ok(Self { k, u, eps_tilde, omega_tilde: k * k, b })
    }
}

/// Symmetrized second moments `<x^2>`, `<p^2>`, `<{x,p}>/2` of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub xx: f64,
    pub pp: f64,
    pub xp: f64,
}

/// Kernel coefficients of the thermal state with the endpoint's
/// frequency and temperature:
/// `A = (omega/2) coth(beta omega)`, `B = 0`, `C = -omega / (2 sinh(beta omega))`.
pub fn thermal_coeffs(endpoint: &ThermalEndpoint) -> Result<GaussianCoeffs> {
    let arg = endpoint.beta * endpoint.omega;
    if arg > MAX_BETA_OMEGA {
        return Err(Error::Domain(format!(
            "beta * omega = {arg} exceeds {MAX_BETA_OMEGA}; the off-diagonal coefficient \
             underflows and the state is numerically pure"
        )));
    }
    let a = 0.5 * endpoint.omega / arg.tanh();
    let c = -endpoint.omega / (2.0 * arg.sinh());
    GaussianCoeffs::new(a, 0.0, c)
}

/// Diagonalize a Gaussian state: recover `(k, u, eps_tilde, omega_tilde)`
/// from `(A, C)` via `k^2 = 2 sqrt(A^2 - C^2)` and
/// `eps_tilde = acosh(-A/C)`; `B` passes through.
pub fn spectral_decompose(coeffs: &GaussianCoeffs) -> Result<SpectralData> {
    if coeffs.c >= 0.0 {
        return Err(Error::Domain(format!(
            "C = {} must be negative: a nonnegative C means a pure or unphysical spectrum",
            coeffs.c
        )));
    }
    let ratio = -coeffs.a / coeffs.c;
    if ratio < 1.0 + SPECTRUM_GAP {
        return Err(Error::Domain(format!(
            "-A/C = {ratio} is too close to 1: spectrum degenerate (pure state)"
        )));
    }
    let eps_tilde = ratio.acosh();
    let u = (-eps_tilde).exp();
    let omega_tilde = 2.0 * (coeffs.a * coeffs.a - coeffs.c * coeffs.c).sqrt();
    let k = omega_tilde.sqrt();
    Ok(SpectralData { k, u, eps_tilde, omega_tilde, b: coeffs.b })
}

/// Exact inverse of [`spectral_decompose`]:
/// `A = (k^2/2) coth(eps)`, `C = -k^2 / (2 sinh(eps))`, written in `u`
/// to stay finite as `u -> 0`.
pub fn coeffs_from_spectral(s: &SpectralData) -> Result<GaussianCoeffs> {
    let k2 = s.k * s.k;
    let den = 1.0 - s.u * s.u;
    let a = k2 * (1.0 + s.u * s.u) / (2.0 * den);
    let c = -k2 * s.u / den;
    GaussianCoeffs::new(a, s.b, c)
}

/// Von Neumann entropy (nats) of the geometric spectrum `p_n = u^n (1-u)`:
/// `S = -(u ln u)/(1-u) - ln(1-u)`.
pub fn von_neumann_entropy(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    // Analytic limit: u ln u -> 0 as u -> 0.
    if u < 1e-15 {
        return Ok(0.0);
    }
    Ok(-(u * u.ln()) / (1.0 - u) - (1.0 - u).ln())
}

/// Mean phonon number `<n> = u / (1 - u)` of the geometric spectrum.
pub fn mean_phonon(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    Ok(u / (1.0 - u))
}

/// Second moments of the Gaussian state.
///
/// Closed forms obtained by differentiating the kernel at `x = x'`:
/// `<x^2> = 1/(4(A+C))`, `<{x,p}>/2 = B/(2(A+C))`,
/// `<p^2> = A - C + B^2/(A+C)`.
pub fn covariance_moments(coeffs: &GaussianCoeffs) -> Moments {
    let s = coeffs.a + coeffs.c;
    Moments {
        xx: 1.0 / (4.0 * s),
        pp: coeffs.a - coeffs.c + coeffs.b * coeffs.b / s,
        xp: coeffs.b / (2.0 * s),
    }
}

/// Purity `Tr(rho^2) = (1 - u) / (1 + u)` of the geometric spectrum.
pub fn purity_from_u(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    Ok((1.0 - u) / (1.0 + u))
}
