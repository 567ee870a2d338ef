//! Stochastic trajectory unravelings of the dephasing dynamics.
//!
//! Two schemes reproduce the same ensemble state:
//!
//! * **Noise driving**: each realization evolves unitarily under the
//!   Hamiltonian plus a white-noise linear force `sqrt(2 gamma_t) xi_t x`.
//!   A Gaussian wavepacket stays Gaussian; the inverse-width parameter
//!   obeys the deterministic Riccati equation
//!   `alphadot = -2 i alpha^2 + i omega_t^2 / 2` (the noise couples only
//!   linearly), while the center obeys
//!   `dxc = pc dt`, `dpc = -omega_t^2 xc dt - sqrt(2 gamma_t) dW`.
//!
//! * **Continuous position measurement** at unit efficiency with
//!   strength calibrated so the ensemble generator matches the noise
//!   scheme. Restricted to pure Gaussian states the conditioned width
//!   picks up a real damping term,
//!   `alphadot = -2 i alpha^2 + i omega_t^2 / 2 + 2 gamma_t`,
//!   and the center is kicked by the innovations,
//!   `dxc = pc dt + 2 sqrt(2 gamma_t) Vx dW`,
//!   `dpc = -omega_t^2 xc dt + 2 sqrt(2 gamma_t) Cxp dW`.
//!
//! Mixed thermal initial states are realized as a Gaussian mixture of
//! displaced vacuum wavepackets; averaging over both the initial draw
//! and the noise reproduces the master-equation moments.
//!
//! Trajectories are integrated with Euler-Maruyama on a fixed grid.
//! Every trajectory owns an independent, counter-derived RNG stream, so
//! ensembles are reproducible bit-for-bit for a given base seed
//! regardless of worker count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::ThermalEndpoint;
use crate::protocol::Controls;

/// Default Euler-Maruyama step count over a protocol.
pub const DEFAULT_SDE_STEPS: usize = 100_000;

/// Which unraveling realizes the dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unraveling {
    Noise,
    Measurement,
}

impl Unraveling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unraveling::Noise => "noise",
            Unraveling::Measurement => "measurement",
        }
    }
}

/// Pure Gaussian wavepacket sampled along one trajectory: center
/// `(xc, pc)`, inverse-width parameter `alpha` (`Re alpha > 0`), and the
/// accumulated phase. The parametrization is normalized by
/// construction, so the norm of every realization is exactly one.
#[derive(Debug, Clone, Copy)]
pub struct WavepacketState {
    pub t: f64,
    pub xc: f64,
    pub pc: f64,
    pub alpha: Complex64,
    pub phase: Complex64,
}

impl WavepacketState {
    /// Width contribution to `<x^2>` (relative to the center).
    pub fn var_x(&self) -> f64 {
        1.0 / (4.0 * self.alpha.re)
    }

    /// Width contribution to `<p^2>`.
    pub fn var_p(&self) -> f64 {
        self.alpha.norm_sqr() / self.alpha.re
    }

    /// Width contribution to `<{x,p}>/2`.
    pub fn cov_xp(&self) -> f64 {
        -self.alpha.im / (2.0 * self.alpha.re)
    }
}

/// Integration resolution: `n_steps` Euler-Maruyama steps, states
/// recorded at `n_samples + 1` uniformly spaced times. `n_steps` is
/// rounded up to a multiple of `n_samples`.
#[derive(Debug, Clone, Copy)]
pub struct SdeOptions {
    pub n_steps: usize,
    pub n_samples: usize,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self { n_steps: DEFAULT_SDE_STEPS, n_samples: 100 }
    }
}

impl SdeOptions {
    fn normalized(&self) -> Result<(usize, usize)> {
        if self.n_samples == 0 {
            return Err(Error::Precondition("n_samples must be positive".into()));
        }
        let per = self.n_steps.div_ceil(self.n_samples).max(1);
        Ok((per * self.n_samples, per))
    }
}

/// Moment estimates with standard errors at one sampled time.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Per-time ensemble moment estimates from a trajectory ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_x: Vec<Estimate>,
    pub mean_p: Vec<Estimate>,
    pub xx: Vec<Estimate>,
    pub pp: Vec<Estimate>,
    pub xp: Vec<Estimate>,
    pub n_traj: usize,
    pub base_seed: u64,
}

/// Precomputed per-step control values and the deterministic width
/// evolution shared by every trajectory of an ensemble.
struct StepTables {
    dt: f64,
    n_steps: usize,
    steps_per_sample: usize,
    /// Control values at step starts (length `n_steps`).
    omega_sq: Vec<f64>,
    /// Center-kick amplitudes at step starts: for the noise scheme the
    /// force `sqrt(2 gamma)` enters `pc`; for measurement the innovation
    /// gains enter both `xc` and `pc`.
    kick_x: Vec<f64>,
    kick_p: Vec<f64>,
    /// Width parameter at step boundaries (length `n_steps + 1`).
    alpha: Vec<Complex64>,
    sample_times: Vec<f64>,
}

impl StepTables {
    fn build(
        controls: &dyn Controls,
        alpha0: Complex64,
        scheme: Unraveling,
        opts: SdeOptions,
    ) -> Result<Self> {
        let (n_steps, steps_per_sample) = opts.normalized()?;
        let t_f = controls.duration();
        let dt = t_f / n_steps as f64;
        let time_at = |i: usize| -> f64 {
            if i >= n_steps {
                t_f
            } else {
                i as f64 * dt
            }
        };
        let mut omega_sq = Vec::with_capacity(n_steps);
        let mut kick_x = Vec::with_capacity(n_steps);
        let mut kick_p = Vec::with_capacity(n_steps);
        let mut alpha = Vec::with_capacity(n_steps + 1);
        alpha.push(alpha0);
        let mut a = alpha0;
        for i in 0..n_steps {
            let t = time_at(i);
            let w2 = controls.omega_sq(t);
            let g = controls.gamma(t);
            if g < 0.0 {
                return Err(Error::Precondition(format!(
                    "gamma({t}) = {g} < 0: no stochastic realization exists for \
                     negative dephasing strength"
                )));
            }
            omega_sq.push(w2);
            match scheme {
                Unraveling::Noise => {
                    kick_x.push(0.0);
                    kick_p.push(-(2.0 * g).sqrt());
                }
                Unraveling::Measurement => {
                    let amp = 2.0 * (2.0 * g).sqrt();
                    kick_x.push(amp / (4.0 * a.re));
                    kick_p.push(amp * (-a.im / (2.0 * a.re)));
                }
            }
            // Width Riccati, integrated with a classical fourth-order
            // step; the controls are evaluated analytically at substeps.
            let rhs = |t: f64, a: Complex64| -> Complex64 {
                let w2 = controls.omega_sq(t.min(t_f));
                let mut d = Complex64::new(0.0, -2.0) * a * a + Complex64::new(0.0, 0.5 * w2);
                if scheme == Unraveling::Measurement {
                    d += Complex64::new(2.0 * controls.gamma(t.min(t_f)), 0.0);
                }
                d
            };
            let k1 = rhs(t, a);
            let k2 = rhs(t + 0.5 * dt, a + 0.5 * dt * k1);
            let k3 = rhs(t + 0.5 * dt, a + 0.5 * dt * k2);
            let k4 = rhs(t + dt, a + dt * k3);
            a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !a.is_finite() || a.re <= 0.0 {
                return Err(Error::Numerical(format!(
                    "width parameter left the normalizable half-plane at t = {}: {a}",
                    time_at(i + 1)
                )));
            }
            alpha.push(a);
        }
        let sample_times =
            (0..=opts.n_samples).map(|j| time_at(j * steps_per_sample)).collect();
        Ok(Self { dt, n_steps, steps_per_sample, omega_sq, kick_x, kick_p, alpha, sample_times })
    }
}

/// Deterministic, splittable RNG stream for one trajectory.
fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Standard normal deviates via the Box-Muller transform of uniform
/// output, with the second value of each pair cached.
struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Thermal mixture of displaced vacua: classical center spread of the
/// endpoint's equilibrium state.
fn thermal_center_sigmas(start: &ThermalEndpoint) -> (f64, f64) {
    let u = start.boltzmann_u();
    let nbar = u / (1.0 - u);
    ((nbar / start.omega).sqrt(), (nbar * start.omega).sqrt())
}

/// Euler-Maruyama evolution of one trajectory's center and phase over
/// the prepared tables, recording the sampled states.
fn run_trajectory(
    tables: &StepTables,
    mut xc: f64,
    mut pc: f64,
    normals: &mut NormalSource,
) -> Vec<WavepacketState> {
    let dt = tables.dt;
    let sqrt_dt = dt.sqrt();
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(tables.sample_times.len());
    let record = |out: &mut Vec<WavepacketState>, i: usize, xc: f64, pc: f64, phase: f64| {
        let sample = i / tables.steps_per_sample;
        out.push(WavepacketState {
            t: tables.sample_times[sample],
            xc,
            pc,
            alpha: tables.alpha[i],
            phase: Complex64::new(phase, 0.0),
        });
    };
    record(&mut out, 0, xc, pc, phase);
    for i in 0..tables.n_steps {
        let dw = sqrt_dt * normals.next();
        let w2 = tables.omega_sq[i];
        let a = tables.alpha[i];
        phase -= (a.re - 1.5 * pc * pc + 0.5 * w2 * xc * xc) * dt;
        let dx = pc * dt + tables.kick_x[i] * dw;
        let dp = -w2 * xc * dt + tables.kick_p[i] * dw;
        xc += dx;
        pc += dp;
        if (i + 1).is_multiple_of(tables.steps_per_sample) {
            record(&mut out, i + 1, xc, pc, phase);
        }
    }
    out
}

fn initial_center(start: &ThermalEndpoint, normals: &mut NormalSource) -> (f64, f64) {
    let (sx, sp) = thermal_center_sigmas(start);
    let zx = normals.next();
    let zp = normals.next();
    (sx * zx, sp * zp)
}

/// Single noise-driven realization, seeded from `(base_seed, index)`.
pub fn simulate_noise_trajectory(
    controls: &dyn Controls,
    start: &ThermalEndpoint,
    base_seed: u64,
    index: u64,
    opts: SdeOptions,
) -> Result<Vec<WavepacketState>> {
    let alpha0 = Complex64::new(start.omega / 2.0, 0.0);
    let tables = StepTables::build(controls, alpha0, Unraveling::Noise, opts)?;
    let mut normals = NormalSource::new(trajectory_rng(base_seed, index));
    let (xc, pc) = initial_center(start, &mut normals);
    Ok(run_trajectory(&tables, xc, pc, &mut normals))
}

/// Single measurement-conditioned realization.
pub fn simulate_measurement_trajectory(
    controls: &dyn Controls,
    start: &ThermalEndpoint,
    base_seed: u64,
    index: u64,
    opts: SdeOptions,
) -> Result<Vec<WavepacketState>> {
    let alpha0 = Complex64::new(start.omega / 2.0, 0.0);
    let tables = StepTables::build(controls, alpha0, Unraveling::Measurement, opts)?;
    let mut normals = NormalSource::new(trajectory_rng(base_seed, index));
    let (xc, pc) = initial_center(start, &mut normals);
    Ok(run_trajectory(&tables, xc, pc, &mut normals))
}

/// Fixed reduction chunk so the summation order never depends on the
/// worker count.
const ENSEMBLE_CHUNK: usize = 256;

/// Average `n_traj` trajectories of the chosen unraveling into per-time
/// moment estimates with standard errors.
pub fn ensemble_average(
    controls: &dyn Controls,
    start: &ThermalEndpoint,
    scheme: Unraveling,
    n_traj: usize,
    base_seed: u64,
    opts: SdeOptions,
) -> Result<EnsembleStats> {
    if n_traj < 2 {
        return Err(Error::Precondition(format!(
            "n_traj = {n_traj} is degenerate: standard errors need at least 2 trajectories"
        )));
    }
    let alpha0 = Complex64::new(start.omega / 2.0, 0.0);
    let tables = StepTables::build(controls, alpha0, scheme, opts)?;
    let n_times = tables.sample_times.len();

    // Per-chunk partial sums and sums of squares for the five tracked
    // quantities, merged in chunk order.
    let n_chunks = n_traj.div_ceil(ENSEMBLE_CHUNK);
    let partials: Vec<[Vec<f64>; 10]> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * ENSEMBLE_CHUNK;
            let hi = ((chunk + 1) * ENSEMBLE_CHUNK).min(n_traj);
            let mut acc: [Vec<f64>; 10] = std::array::from_fn(|_| vec![0.0; n_times]);
            for traj in lo..hi {
                let mut normals = NormalSource::new(trajectory_rng(base_seed, traj as u64));
                let (xc, pc) = initial_center(start, &mut normals);
                let states = run_trajectory(&tables, xc, pc, &mut normals);
                for (j, s) in states.iter().enumerate() {
                    let vals = [
                        s.xc,
                        s.pc,
                        s.var_x() + s.xc * s.xc,
                        s.var_p() + s.pc * s.pc,
                        s.cov_xp() + s.xc * s.pc,
                    ];
                    for (q, v) in vals.iter().enumerate() {
                        acc[2 * q][j] += v;
                        acc[2 * q + 1][j] += v * v;
                    }
                }
            }
            acc
        })
        .collect();

    let mut sums: [Vec<f64>; 10] = std::array::from_fn(|_| vec![0.0; n_times]);
    for acc in &partials {
        for q in 0..10 {
            for j in 0..n_times {
                sums[q][j] += acc[q][j];
            }
        }
    }

    let n = n_traj as f64;
    let estimate = |q: usize| -> Vec<Estimate> {
        (0..n_times)
            .map(|j| {
                let mean = sums[2 * q][j] / n;
                let var = ((sums[2 * q + 1][j] - n * mean * mean) / (n - 1.0)).max(0.0);
                Estimate { mean, se: (var / n).sqrt() }
            })
            .collect()
    };

    Ok(EnsembleStats {
        times: tables.sample_times.clone(),
        mean_x: estimate(0),
        mean_p: estimate(1),
        xx: estimate(2),
        pp: estimate(3),
        xp: estimate(4),
        n_traj,
        base_seed,
    })
}
