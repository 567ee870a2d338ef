//! Spectral overlap integrals, relative entropy, and Hermite/Mehler
//! self-checks.
//!
//! The central object is the overlap between number states of the same
//! length scale, one of them carrying a quadratic phase `exp(i Bbar x^2)`:
//!
//! ```text
//! <m|n> = I_{n,m}(b) / sqrt(2^(n+m) n! m! pi),   b = 1 + i Bbar,
//! I_{n,m}(b) = integral exp(-b x^2) H_n(x) H_m(x) dx.
//! ```
//!
//! `I_{n,m}` vanishes for odd `m - n` by parity and is evaluated by a
//! finite sum over `min(n, m) + 1` terms. The sum alternates in phase
//! and cancels deeply for strong phase curvature, so past a computable
//! depth budget the term recurrence is accumulated in double-double
//! arithmetic with a common log-scale prefactor split off.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};

/// Highest Hermite degree the plain recurrence is allowed; beyond this a
/// scaled evaluation would be required.
pub const MAX_HERMITE_DEGREE: usize = 400;

const LN_FACT_SIZE: usize = 20_001;

/// `ln(k!)` for integer `k`, from a Kahan-compensated running table with
/// a Stirling fallback above the table range.
fn ln_factorial(k: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_SIZE);
        t.push(0.0);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 1..LN_FACT_SIZE {
            let y = (i as f64).ln() - comp;
            let next = sum + y;
            comp = (next - sum) - y;
            sum = next;
            t.push(sum);
        }
        t
    });
    if k < LN_FACT_SIZE {
        table[k]
    } else {
        let x = k as f64;
        x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x * x)
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence
/// `H_{n+1} = 2 x H_n - 2 n H_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::Precondition(format!(
            "H_{n} exceeds the supported degree {MAX_HERMITE_DEGREE}; use a scaled evaluation"
        )));
    }
    let mut prev = 1.0f64;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    if !cur.is_finite() {
        return Err(Error::Numerical(format!(
            "H_{n}({x}) overflowed; a scaled evaluation is required"
        )));
    }
    Ok(cur)
}

/// Upper bound, in nats, on the growth of the reduced-sum terms of the
/// overlap recurrence: the terms gain at most `(n - l) * 2|z| / (l + 1)`
/// per order, so the peak-to-first ratio is bounded by the binomial
/// bump `sum_l max(0, ln((n - l) zeta / (l + 1)))` with `zeta = 2|z|`,
/// evaluated in closed form. This is the cancellation depth the
/// accumulator must absorb.
fn depth_bound_nats(n: usize, zeta: f64) -> f64 {
    if n == 0 || zeta <= 0.0 {
        return 0.0;
    }
    // largest l with (n - l) zeta >= l + 1
    let l_max = (((n as f64) * zeta - 1.0) / (1.0 + zeta)).floor();
    if l_max < 0.0 {
        return 0.0;
    }
    let l = (l_max as usize + 1).min(n);
    l as f64 * zeta.ln() + ln_factorial(n) - ln_factorial(n - l) - ln_factorial(l)
}

/// Depth (nats) the plain f64 accumulator tolerates while keeping the
/// squared weights accurate enough for spectral sums.
const F64_DEPTH_NATS: f64 = 20.0;
/// Depth beyond which even double-double accumulation is unreliable.
pub(crate) const DD_DEPTH_NATS: f64 = 45.0;

/// `z = (1 - b) / b` in double-double precision for exact-f64 `b`.
fn z_parameter(b: Complex64) -> Cdd {
    let num = Cdd { re: Dd::from_f64(1.0).sub(Dd::from_f64(b.re)), im: Dd::from_f64(-b.im) };
    let d2 = Dd::from_f64(b.re)
        .mul(Dd::from_f64(b.re))
        .add(Dd::from_f64(b.im).mul(Dd::from_f64(b.im)));
    Cdd {
        re: num.re.mul(Dd::from_f64(b.re)).add(num.im.mul(Dd::from_f64(b.im))).div(d2),
        im: num.im.mul(Dd::from_f64(b.re)).sub(num.re.mul(Dd::from_f64(b.im))).div(d2),
    }
}

/// Core evaluation shared by the normalized and unnormalized overlaps:
/// returns `(log_magnitude, phase, reduced_sum)` such that
/// `I_{n,m}(b) = exp(log_magnitude) * exp(i phase) * reduced_sum`
/// before any normalization. Requires `n <= m`, even `m - n`.
fn overlap_parts(n: usize, m: usize, b: Complex64) -> (f64, f64, Complex64) {
    debug_assert!(n <= m && (m - n).is_multiple_of(2));
    let p = (m - n) / 2;
    let z_dd = z_parameter(b);
    let z = z_dd.to_complex();
    if z.norm_sqr() == 0.0 && p > 0 {
        return (0.0, 0.0, Complex64::new(0.0, 0.0));
    }
    // Reduced alternating sum with term ratio q_l * z. Plain f64 is
    // kept while the cancellation depth is shallow; past that the
    // accumulation runs in double-double, which preserves ~16 spare
    // digits. Strongly rotating phases (2|z| near or above 1) always
    // take the double-double path: the phase cancellation there runs
    // deeper than the magnitude bound alone suggests.
    let zeta = 2.0 * z.norm();
    let sum = if zeta < 0.95 && depth_bound_nats(n, zeta) <= F64_DEPTH_NATS {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        let mut peak = 1.0f64;
        let mut faded = 0usize;
        for l in 0..n {
            let (lf, pf) = (l as f64, p as f64);
            let nume =
                (n - l) as f64 * (2.0 * pf + 2.0 * lf + 1.0) * (2.0 * pf + 2.0 * lf + 2.0);
            let deno = 2.0 * (lf + 1.0) * (2.0 * pf + lf + 1.0) * (pf + lf + 1.0);
            term *= z * (nume / deno);
            sum += term;
            // once past the peak the terms decay geometrically; stop
            // when they can no longer move the double-precision sum
            let mag = term.norm_sqr();
            if mag > peak {
                peak = mag;
                faded = 0;
            } else if mag < peak * 1e-44 {
                faded += 1;
                if faded >= 2 {
                    break;
                }
            }
        }
        sum
    } else {
        let mut term = Cdd::ONE;
        let mut sum = term;
        for l in 0..n {
            let (lf, pf) = (l as f64, p as f64);
            let nume =
                (n - l) as f64 * (2.0 * pf + 2.0 * lf + 1.0) * (2.0 * pf + 2.0 * lf + 2.0);
            let deno = 2.0 * (lf + 1.0) * (2.0 * pf + lf + 1.0) * (pf + lf + 1.0);
            let q = Dd::from_f64(nume).div(Dd::from_f64(deno));
            term = term.mul(z_dd.scale(q));
            sum = sum.add(term);
        }
        sum.to_complex()
    };
    // Common prefactor 2^n (m)!/p! z^p sqrt(pi/b) in log magnitude/phase.
    let mut log_mag = n as f64 * std::f64::consts::LN_2 + ln_factorial(m) - ln_factorial(p)
        + 0.5 * (std::f64::consts::PI.ln() - b.norm().ln());
    let mut phase = -0.5 * b.arg();
    if p > 0 {
        log_mag += p as f64 * z.norm().ln();
        phase += p as f64 * z.arg();
    }
    (log_mag, phase, sum)
}

fn check_overlap_domain(b: Complex64) -> Result<()> {
    if !b.re.is_finite() || b.re <= 0.0 {
        return Err(Error::Domain(format!(
            "Re(b) = {} must be positive for the overlap integral to converge",
            b.re
        )));
    }
    Ok(())
}

/// The unnormalized overlap integral `I_{n,m}(b)`; exactly zero for odd
/// `m - n`, symmetric in its indices.
pub fn overlap_integral(n: usize, m: usize, b: Complex64) -> Result<Complex64> {
    check_overlap_domain(b)?;
    if (m as i64 - n as i64) % 2 != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (n, m) = if n <= m { (n, m) } else { (m, n) };
    let (log_mag, phase, sum) = overlap_parts(n, m, b);
    let value = sum * Complex64::from_polar(log_mag.exp(), phase);
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "I_({n},{m}) overflowed (log magnitude {log_mag:.1}); use the normalized overlap"
        )));
    }
    Ok(value)
}

/// Normalized overlap `<m|n>` between eigenfunctions carrying phase
/// curvature `b_curv` at common length scale `k`; equals
/// `I_{n,m}(1 + i b_curv / k^2) / sqrt(2^(n+m) n! m! pi)`.
pub fn eigen_overlap(n: usize, m: usize, b_curv: f64, k: f64) -> Result<Complex64> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    Ok(eigen_overlap_scaled(n, m, b_curv / (k * k)))
}

/// Normalized overlap in the scale-free variable `bbar = B / k^2`.
pub fn eigen_overlap_scaled(n: usize, m: usize, bbar: f64) -> Complex64 {
    if (m as i64 - n as i64) % 2 != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (n, m) = if n <= m { (n, m) } else { (m, n) };
    let b = Complex64::new(1.0, bbar);
    let (log_mag, phase, sum) = overlap_parts(n, m, b);
    let log_norm = 0.5
        * ((n + m) as f64 * std::f64::consts::LN_2
            + ln_factorial(n)
            + ln_factorial(m)
            + std::f64::consts::PI.ln());
    sum * Complex64::from_polar((log_mag - log_norm).exp(), phase)
}

/// Cross-check path: the same integral through the terminating Gauss
/// hypergeometric series
/// `I = 2^n sqrt(pi/b) z^p (2p+n)!/p! 2F1(1/2 + p, -n; 1 + 2p; 2 - 2/b)`.
pub fn overlap_integral_2f1(n: usize, m: usize, b: Complex64) -> Result<Complex64> {
    check_overlap_domain(b)?;
    if (m as i64 - n as i64) % 2 != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (n, m) = if n <= m { (n, m) } else { (m, n) };
    let p = (m - n) / 2;
    let z = z_parameter(b).to_complex();
    // w = 2 - 2/b, in double-double from the exact components of b
    let d2 = Dd::from_f64(b.re)
        .mul(Dd::from_f64(b.re))
        .add(Dd::from_f64(b.im).mul(Dd::from_f64(b.im)));
    let w = Cdd {
        re: Dd::from_f64(2.0).sub(Dd::from_f64(2.0).mul(Dd::from_f64(b.re)).div(d2)),
        im: Dd::from_f64(2.0).mul(Dd::from_f64(b.im)).div(d2),
    };
    // terminating series (second parameter -n), accumulated like the
    // production sum so the comparison probes the formula, not roundoff
    let mut term = Cdd::ONE;
    let mut f21 = term;
    for j in 0..n {
        let jf = j as f64;
        let nume = (0.5 + p as f64 + jf) * (jf - n as f64);
        let deno = (1.0 + 2.0 * p as f64 + jf) * (jf + 1.0);
        let ratio = Dd::from_f64(nume).div(Dd::from_f64(deno));
        term = term.mul(w.scale(ratio));
        f21 = f21.add(term);
    }
    let mut log_mag =
        n as f64 * std::f64::consts::LN_2 + ln_factorial(m) - ln_factorial(p)
            + 0.5 * (std::f64::consts::PI.ln() - b.norm().ln());
    let mut phase = -0.5 * b.arg();
    if p > 0 {
        log_mag += p as f64 * z.norm().ln();
        phase += p as f64 * z.arg();
    }
    let value = f21.to_complex() * Complex64::from_polar(log_mag.exp(), phase);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("2F1 route overflowed for ({n}, {m})")));
    }
    Ok(value)
}

/// One row of overlaps `<m|n>` over `m`, expanded outward from the
/// diagonal `m = n` in both directions until the row mass reaches
/// `1 - row_tol` or the weights have decayed past recovery (the tails
/// fall off geometrically, so a run of negligible weights ends a
/// direction even when accumulated roundoff keeps the mass just shy of
/// the tolerance). Entries come back sorted by `m`; the second return
/// is the unitarity defect `|1 - sum_m |<m|n>|^2|`.
fn scan_row(n: usize, bbar: f64, row_tol: f64, max_m: usize) -> (Vec<(usize, Complex64)>, f64) {
    let mut entries = vec![(n, eigen_overlap_scaled(n, n, bbar))];
    let mut mass = entries[0].1.norm_sqr();
    // downward toward m = parity floor
    let mut tiny_run = 0usize;
    let mut m = n as i64 - 2;
    while m >= 0 {
        let v = eigen_overlap_scaled(n, m as usize, bbar);
        let w = v.norm_sqr();
        mass += w;
        entries.push((m as usize, v));
        if w < 1e-16 {
            tiny_run += 1;
            if tiny_run >= 3 {
                break;
            }
        } else {
            tiny_run = 0;
        }
        m -= 2;
    }
    // upward, where the row tail is unbounded
    tiny_run = 0;
    let mut m = n + 2;
    loop {
        let v = eigen_overlap_scaled(n, m, bbar);
        let w = v.norm_sqr();
        mass += w;
        entries.push((m, v));
        if m > n + 4 {
            if w < 1e-16 {
                tiny_run += 1;
            } else {
                tiny_run = 0;
            }
            if mass > 1.0 - row_tol || tiny_run >= 3 {
                break;
            }
        }
        if m >= max_m {
            break;
        }
        m += 2;
    }
    entries.sort_unstable_by_key(|(m, _)| *m);
    (entries, (1.0 - mass).abs())
}

/// Squared weights of one row, via [`scan_row`].
fn row_weights(n: usize, bbar: f64, row_tol: f64, max_m: usize) -> (Vec<(usize, f64)>, f64) {
    let (entries, defect) = scan_row(n, bbar, row_tol, max_m);
    (entries.into_iter().map(|(m, v)| (m, v.norm_sqr())).collect(), defect)
}

/// Table of eigenfunction overlaps for all `n <= n_max` at fixed phase
/// curvature, with per-row unitarity defects.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub n_max: usize,
    pub b: Complex64,
    rows: Vec<Vec<(usize, Complex64)>>,
    defects: Vec<f64>,
}

impl OverlapTable {
    /// Build rows `n = 0..=n_max` for curvature `bbar = B / k^2`.
    pub fn build(bbar: f64, n_max: usize, row_tol: f64) -> Result<Self> {
        let mut rows = Vec::with_capacity(n_max + 1);
        let mut defects = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let (row, defect) = scan_row(n, bbar, row_tol, n + 8000);
            defects.push(defect);
            rows.push(row);
        }
        Ok(Self { n_max, b: Complex64::new(1.0, bbar), rows, defects })
    }

    pub fn get(&self, n: usize, m: usize) -> Option<Complex64> {
        self.rows.get(n)?.iter().find(|(mm, _)| *mm == m).map(|(_, v)| *v)
    }

    pub fn row(&self, n: usize) -> &[(usize, Complex64)] {
        &self.rows[n]
    }

    /// `|1 - sum_m |<m|n>|^2|` for row `n`.
    pub fn row_defect(&self, n: usize) -> f64 {
        self.defects[n]
    }
}

/// Relative entropy between the evolving state and the instantaneous
/// thermal state sharing its spectrum, with a truncation-error estimate.
#[derive(Debug, Clone, Copy)]
pub struct RelativeEntropy {
    pub value: f64,
    pub truncation: f64,
}

/// `S(rho || sigma)` for spectral weight `u`, phase curvature `B`, and
/// length scale `k`, summing states up to `n_max`.
///
/// The trace form is the double sum
/// `sum_n p_n ln p_n - sum_{n,m} p_n ln p_m |<m|n>|^2` with
/// `p_j = u^j (1 - u)` and `ln p_m` always expanded analytically as
/// `m ln u + ln(1 - u)`.
pub fn relative_entropy(u: f64, b_curv: f64, k: f64, n_max: usize) -> Result<RelativeEntropy> {
    if u.is_nan() || u <= 0.0 || u >= 1.0 {
        return Err(Error::Domain(format!("u must lie in (0, 1), got {u}")));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let tail = u.powi(n_max as i32 + 1);
    if tail > 1e-10 {
        return Err(Error::Precondition(format!(
            "n_max = {n_max} keeps only 1 - {tail:.2e} of the spectral weight; need tail <= 1e-10"
        )));
    }
    let bbar = b_curv / (k * k);
    let ln_u = u.ln();
    let ln_1mu = (1.0 - u).ln();
    // First trace: sum_n p_n ln p_n has the closed form of the negative
    // entropy of the geometric spectrum.
    let s1 = (u * ln_u) / (1.0 - u) + ln_1mu;
    let z_norm = bbar.abs() / (1.0 + bbar * bbar).sqrt();
    let mut s2 = 0.0;
    let mut truncation = 0.0;
    let mut p_n = 1.0 - u;
    for n in 0..=n_max {
        if p_n < 1e-16 {
            // remaining spectral mass, bounded by its slowest row
            let rest = u.powi(n as i32);
            truncation += rest * (ln_u.abs() * (n as f64 + 2.0 * bbar.abs() + 10.0) + ln_1mu.abs());
            break;
        }
        // rows whose reduced sums cancel beyond the double-double budget
        // cannot be evaluated reliably in any fixed precision here
        if depth_bound_nats(n, 2.0 * z_norm) > DD_DEPTH_NATS {
            let rest = u.powi(n as i32);
            if rest > 1e-8 {
                return Err(Error::Precondition(format!(
                    "state too hot for the overlap-sum path: {rest:.2e} of the spectral \
                     weight sits in rows past n = {n}, where the finite sum cancels beyond \
                     the {DD_DEPTH_NATS:.0}-nat evaluation budget at |B|/k^2 = {bbar:.3}"
                )));
            }
            truncation += rest * (ln_u.abs() * (n as f64 + 2.0 * bbar.abs() + 10.0) + ln_1mu.abs());
            break;
        }
        let (weights, defect) = row_weights(n, bbar, 1e-12, n + 8000);
        let mut row_sum = 0.0;
        let mut last_m = n;
        for &(m, w) in &weights {
            row_sum += w * (m as f64 * ln_u + ln_1mu);
            last_m = m;
        }
        s2 += p_n * row_sum;
        truncation += p_n * defect * (last_m as f64 * ln_u.abs() + ln_1mu.abs());
        p_n *= u;
    }
    Ok(RelativeEntropy { value: s1 - s2, truncation })
}

/// Partial Mehler resummation against its closed form:
/// `sum_n u^n / (2^n n!) H_n(x) H_n(y)` versus
/// `(1-u^2)^(-1/2) exp(2uxy/(1-u^2)) exp(-u^2(x^2+y^2)/(1-u^2))`.
/// Returns `(partial_sum, closed_form, abs_err)`.
pub fn mehler_check(u: f64, x: f64, y: f64, n_terms: usize) -> Result<(f64, f64, f64)> {
    if u.is_nan() || u.abs() >= 1.0 {
        return Err(Error::Domain(format!("|u| must be < 1, got {u}")));
    }
    let mut hx_prev = 1.0;
    let mut hy_prev = 1.0;
    let mut hx = 2.0 * x;
    let mut hy = 2.0 * y;
    let mut coef = 1.0;
    let mut sum = coef * hx_prev * hy_prev;
    for n in 1..=n_terms {
        coef *= u / (2.0 * n as f64);
        sum += coef * hx * hy;
        let hx_next = 2.0 * x * hx - 2.0 * n as f64 * hx_prev;
        let hy_next = 2.0 * y * hy - 2.0 * n as f64 * hy_prev;
        hx_prev = hx;
        hy_prev = hy;
        hx = hx_next;
        hy = hy_next;
    }
    let om = 1.0 - u * u;
    let closed = (1.0 / om.sqrt())
        * ((2.0 * u * x * y) / om).exp()
        * (-(u * u) * (x * x + y * y) / om).exp();
    Ok((sum, closed, (sum - closed).abs()))
}
