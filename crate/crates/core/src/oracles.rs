//! Independent numerical oracles used by the self-check battery and the
//! verification tests. Nothing here shares code with the production
//! paths it validates: overlaps are integrated by quadrature instead of
//! the finite sum, and the relative entropy is reconstructed from a
//! dense-grid matrix discretization instead of the overlap table.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::diagnostics::hermite_eval;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianCoeffs, Moments};

/// Complex coordinate kernel of a Gaussian state.
fn kernel(coeffs: &GaussianCoeffs, x: f64, xp: f64) -> Complex64 {
    let re = -coeffs.a * (x * x + xp * xp) - 2.0 * coeffs.c * x * xp;
    let im = coeffs.b * (x * x - xp * xp);
    coeffs.norm() * Complex64::new(re, im).exp()
}

/// Second moments by trapezoid quadrature of the kernel: `<x^2>` from
/// the diagonal, `<p^2>` and `<{x,p}>/2` from five-point finite
/// differences of the kernel in its first argument on the diagonal.
/// Validates the closed forms in [`crate::gaussian::covariance_moments`].
pub fn moments_by_quadrature(coeffs: &GaussianCoeffs) -> Moments {
    let sigma = (1.0 / (4.0 * (coeffs.a + coeffs.c))).sqrt();
    let l = 12.0 * sigma;
    let n = 4001_usize;
    let dx = 2.0 * l / (n - 1) as f64;
    let h = 1e-3 * sigma;
    let (mut xx, mut pp, mut xp) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let x = -l + i as f64 * dx;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        xx += w * x * x * kernel(coeffs, x, x).re;
        let fp2 = kernel(coeffs, x + 2.0 * h, x);
        let fp1 = kernel(coeffs, x + h, x);
        let f0 = kernel(coeffs, x, x);
        let fm1 = kernel(coeffs, x - h, x);
        let fm2 = kernel(coeffs, x - 2.0 * h, x);
        let d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
        pp += w * (-d2.re);
        let d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        xp += w * x * d1.im;
    }
    Moments { xx: xx * dx, pp: pp * dx, xp: xp * dx }
}

/// `Tr(rho^2)` by two-dimensional trapezoid quadrature of `|rho|^2`.
pub fn purity_by_quadrature(coeffs: &GaussianCoeffs) -> f64 {
    let sigma = (1.0 / (4.0 * (coeffs.a + coeffs.c))).sqrt();
    let width = (1.0 / (coeffs.a - coeffs.c)).sqrt();
    let l = 10.0 * sigma.max(width);
    let n = 1201_usize;
    let dx = 2.0 * l / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = -l + i as f64 * dx;
        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        for j in 0..n {
            let xpt = -l + j as f64 * dx;
            let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += wi * wj * kernel(coeffs, x, xpt).norm_sqr();
        }
    }
    acc * dx * dx
}

/// `I_{n,m}(b)` by composite Simpson quadrature of
/// `exp(-b x^2) H_n(x) H_m(x)` on a symmetric interval. Supports
/// moderate degrees (`n, m <= 40`); the integrand is entire and decays
/// like `exp(-Re(b) x^2)`.
pub fn overlap_by_quadrature(n: usize, m: usize, b: Complex64) -> Result<Complex64> {
    if !b.re.is_finite() || b.re <= 0.0 {
        return Err(Error::Domain(format!("Re(b) = {} must be positive", b.re)));
    }
    if n > 40 || m > 40 {
        return Err(Error::Precondition("quadrature oracle supports degrees <= 40".into()));
    }
    // half-width where the Gaussian tail is ~1e-60 even against H_40
    let l = (80.0 / b.re).sqrt().max(9.0 / b.re.sqrt()).min(60.0);
    let steps = 40_000usize; // even
    let h = 2.0 * l / steps as f64;
    let f = |x: f64| -> Complex64 {
        let hn = hermite_eval(n, x).unwrap();
        let hm = hermite_eval(m, x).unwrap();
        (Complex64::new(-b.re, -b.im) * x * x).exp() * (hn * hm)
    };
    let mut acc = f(-l) + f(l);
    for i in 1..steps {
        let x = -l + i as f64 * h;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(x);
    }
    Ok(acc * (h / 3.0))
}

/// Closed form of the relative entropy for a quadratic-phase rotation of
/// a geometric spectrum. Conjugating the number operator with
/// `exp(i bbar x^2)` shifts `p` by `2 bbar x`, so the mean occupation of
/// level `n` grows by `bbar^2 (2n + 1)`; row unitarity then collapses
/// the double sum to
/// `S = -ln(u) bbar^2 (2 nbar + 1)`, `nbar = u / (1 - u)`.
pub fn relative_entropy_closed_form(u: f64, bbar: f64) -> Result<f64> {
    if u.is_nan() || u <= 0.0 || u >= 1.0 {
        return Err(Error::Domain(format!("u must lie in (0, 1), got {u}")));
    }
    let nbar = u / (1.0 - u);
    Ok(-u.ln() * bbar * bbar * (2.0 * nbar + 1.0))
}

/// Dense-grid matrix oracle for the relative entropy, scale-free in the
/// length variable (`bbar = B / k^2`).
///
/// The thermal kernel `sigma` is discretized on a uniform grid and
/// diagonalized; the rotated state is `rho = D sigma D^dagger` with the
/// exact diagonal phase `D = diag(exp(i bbar x_j^2))`, so both matrices
/// share their spectrum and
/// `S = sum_k s_k ln s_k - sum_k q_k ln s_k`, `q_k = v_k^dagger rho v_k`.
///
/// Levels below the eigensolver noise floor are handled analytically:
/// the geometric law fixes `ln s_k` linearly in `k`, and the occupation
/// sum rule `sum_k k q_k = Tr(rho n)` is evaluated from grid moments of
/// the kernel, closing the tail of the cross term exactly.
pub fn relative_entropy_grid(u: f64, bbar: f64) -> Result<f64> {
    if u.is_nan() || u <= 0.0 || u >= 1.0 {
        return Err(Error::Domain(format!("u must lie in (0, 1), got {u}")));
    }
    let eps = -u.ln();
    let a = 0.5 / eps.tanh();
    let c = -0.5 / eps.sinh();
    let norm = (2.0 * (a + c) / std::f64::consts::PI).sqrt();

    // grid sized to cover the occupied levels and resolve the phase
    let n_star = ((1e-13 * (1.0 - u)).ln() / u.ln()).ceil().max(10.0);
    let l = (2.0 * n_star + 1.0).sqrt() + 7.0;
    let slope = 2.0 * bbar.abs() * l + (2.0 * n_star + 1.0).sqrt() + 6.0;
    let n_grid = (((2.0 * l * slope / std::f64::consts::PI) * 2.5) as usize).max(401) | 1;
    if n_grid > 4001 {
        return Err(Error::Precondition(format!(
            "grid oracle would need {n_grid} points for u = {u}, bbar = {bbar}"
        )));
    }
    let dx = 2.0 * l / (n_grid - 1) as f64;
    let xs: Vec<f64> = (0..n_grid).map(|i| -l + i as f64 * dx).collect();

    let mut sigma = DMatrix::<f64>::zeros(n_grid, n_grid);
    for i in 0..n_grid {
        for j in 0..=i {
            let v = norm
                * (-a * (xs[i] * xs[i] + xs[j] * xs[j]) - 2.0 * c * xs[i] * xs[j]).exp()
                * dx;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }

    let eigen = sigma.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n_grid).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[j].partial_cmp(&eigen.eigenvalues[i]).unwrap());

    let floor = 5e-12;
    let mut s_rho = 0.0;
    let mut s_cross_kept = 0.0;
    let mut q_mass = 0.0;
    let mut q_first_moment = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        let s_k = eigen.eigenvalues[idx];
        if s_k <= floor {
            break;
        }
        s_rho += s_k * s_k.ln();
        // q_k = v^T D sigma D^dagger v = |sigma . Re(D^dag v)|-type
        // quadratic forms; sigma is real symmetric.
        let v = eigen.eigenvectors.column(idx);
        let mut re = DVector::<f64>::zeros(n_grid);
        let mut im = DVector::<f64>::zeros(n_grid);
        for i in 0..n_grid {
            let phi = bbar * xs[i] * xs[i];
            re[i] = phi.cos() * v[i];
            im[i] = -phi.sin() * v[i];
        }
        let q_k = (&sigma * &re).dot(&re) + (&sigma * &im).dot(&im);
        s_cross_kept += q_k * s_k.ln();
        q_mass += q_k;
        q_first_moment += rank as f64 * q_k;
    }

    // occupation sum rule from grid moments of the rotated kernel:
    // Tr(rho n) = (Tr(rho x^2) + Tr(rho p^2)) / 2 - 1/2
    let mut tr_x2 = 0.0;
    for i in 0..n_grid {
        tr_x2 += xs[i] * xs[i] * sigma[(i, i)];
    }
    let kernel = |x: f64, y: f64| -> Complex64 {
        let mag = norm * (-a * (x * x + y * y) - 2.0 * c * x * y).exp();
        let phi = bbar * (x * x - y * y);
        Complex64::from_polar(mag, phi)
    };
    let h = 1e-3;
    let mut tr_p2 = 0.0;
    for &x in &xs {
        let d2 = (-kernel(x + 2.0 * h, x) + 16.0 * kernel(x + h, x)
            - 30.0 * kernel(x, x)
            + 16.0 * kernel(x - h, x)
            - kernel(x - 2.0 * h, x))
            / (12.0 * h * h);
        tr_p2 -= d2.re * dx;
    }
    let n_expectation = 0.5 * (tr_x2 + tr_p2) - 0.5;

    let ln_u = u.ln();
    let ln_1mu = (1.0 - u).ln();
    let s_cross_tail = ln_u * (n_expectation - q_first_moment) + ln_1mu * (1.0 - q_mass);
    Ok(s_rho - (s_cross_kept + s_cross_tail))
}
