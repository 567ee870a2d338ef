//! Batch command implementations behind the `sta-thermalizer` binary:
//! schedule synthesis, deterministic propagation, trajectory ensembles,
//! endpoint sweeps, and the numerical self-check battery. Every command
//! writes deterministic CSV: metadata lines prefixed `#`, one header
//! row, then data rows with full round-trip (17 significant digit)
//! formatting; byte-identical output for a fixed config, seed, and any
//! worker count.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Deserialize;

use crate::diagnostics::{
    self, hermite_eval, mehler_check, overlap_integral, overlap_integral_2f1, relative_entropy,
};
use crate::dynamics::{integrate_consistency, integrate_covariance_oracle, DEFAULT_ODE_STEPS};
use crate::error::{Error, Result};
use crate::gaussian::{
    covariance_moments, purity_from_u, spectral_decompose, thermal_coeffs, von_neumann_entropy,
    GaussianCoeffs, ThermalEndpoint,
};
use crate::oracles;
use crate::protocol::{ControlSchedule, Controls, ProtocolSpec};
use crate::stochastic::{ensemble_average, SdeOptions, Unraveling, DEFAULT_SDE_STEPS};

// ---------------------------------------------------------------------------
// logging

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LogLevel {
    Warn,
    Info,
    Debug,
}

fn log_level() -> LogLevel {
    static LEVEL: OnceLock<LogLevel> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("STA_LOG").as_deref() {
        Ok("debug") => LogLevel::Debug,
        Ok("info") => LogLevel::Info,
        _ => LogLevel::Warn,
    })
}

pub(crate) fn log_info(msg: &str) {
    if log_level() >= LogLevel::Info {
        eprintln!("[info] {msg}");
    }
}

pub(crate) fn log_debug(msg: &str) {
    if log_level() >= LogLevel::Debug {
        eprintln!("[debug] {msg}");
    }
}

// ---------------------------------------------------------------------------
// configuration

/// Range specification `start:stop:count` for sweep axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!(
                "range must be start:stop:count, got {text:?}"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Domain(format!("bad range start {:?}", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Domain(format!("bad range stop {:?}", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::Domain(format!("bad range count {:?}", parts[2])))?;
        if count < 2 {
            return Err(Error::Domain(format!("range count must be >= 2, got {count}")));
        }
        Ok(Self { start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
            })
            .collect()
    }
}

impl<'de> Deserialize<'de> for AxisRange {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        AxisRange::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Values accepted in the optional JSON config file; command-line flags
/// override any value present here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega0: Option<f64>,
    pub beta0: Option<f64>,
    pub omegaf: Option<f64>,
    pub betaf: Option<f64>,
    pub tf: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub ntraj: Option<usize>,
    pub unraveling: Option<String>,
    pub nmax: Option<usize>,
    pub omegaf_range: Option<AxisRange>,
    pub betaf_range: Option<AxisRange>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Domain(format!("bad config file {}: {e}", path.display())))
    }
}

/// Fully resolved parameters for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub omega0: f64,
    pub beta0: f64,
    pub omegaf: f64,
    pub betaf: f64,
    pub tf: f64,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub ntraj: usize,
    pub unraveling: Unraveling,
    pub nmax: usize,
    pub omegaf_range: Option<AxisRange>,
    pub betaf_range: Option<AxisRange>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            beta0: 1.0,
            omegaf: 3.0,
            betaf: 2.0,
            tf: 6.0,
            steps: None,
            out: None,
            seed: 1,
            workers: None,
            ntraj: 10_000,
            unraveling: Unraveling::Noise,
            nmax: 512,
            omegaf_range: None,
            betaf_range: None,
        }
    }
}

impl RunConfig {
    fn start(&self) -> Result<ThermalEndpoint> {
        ThermalEndpoint::new(self.omega0, self.beta0)
    }

    fn end(&self) -> Result<ThermalEndpoint> {
        ThermalEndpoint::new(self.omegaf, self.betaf)
    }

    fn spec(&self, default_steps: usize) -> Result<ProtocolSpec> {
        ProtocolSpec::new(
            self.start()?,
            self.end()?,
            self.tf,
            self.steps.unwrap_or(default_steps),
        )
    }

    fn out_path(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Io(std::io::Error::other("no output path given (--out)")))
    }

    /// Run `f` inside a worker pool of the configured size.
    fn with_workers<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// formatting

/// Full round-trip decimal formatting: 17 significant digits, `nan` and
/// `inf` spelled in lowercase.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else if x == 0.0 {
        // single spelling for both signed zeros
        "0.0000000000000000e0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    Ok(())
}

fn metadata_block(config: &RunConfig, sched: &ControlSchedule, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# omega0 = {}", fmt_f64(config.omega0));
    let _ = writeln!(s, "# beta0 = {}", fmt_f64(config.beta0));
    let _ = writeln!(s, "# omegaf = {}", fmt_f64(config.omegaf));
    let _ = writeln!(s, "# betaf = {}", fmt_f64(config.betaf));
    let _ = writeln!(s, "# tf = {}", fmt_f64(config.tf));
    let _ = writeln!(s, "# steps = {}", sched.spec.n_steps);
    let _ = writeln!(s, "# ansatz = {}", sched.ansatz_name());
    let _ = writeln!(s, "# non_markovian = {}", sched.non_markovian);
    for (k, v) in extra {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

// ---------------------------------------------------------------------------
// synthesize

/// Synthesize the control schedule and export it as CSV.
pub fn run_synthesize(config: &RunConfig) -> Result<()> {
    let sched = ControlSchedule::synthesize(config.spec(500)?)?;
    let mut csv = metadata_block(config, &sched, &[]);
    csv.push_str("t,omega_sq,gamma,A,B_implied,C,Omega,eta,u,eps_tilde,entropy\n");
    for row in &sched.rows {
        let spectral =
            spectral_decompose(&GaussianCoeffs::new(row.coeffs.a, 0.0, row.coeffs.c)?)?;
        let entropy = von_neumann_entropy(spectral.u)?;
        let cols = [
            row.t,
            row.omega_sq,
            row.gamma,
            row.coeffs.a,
            row.omega_eff / 2.0,
            row.coeffs.c,
            row.omega_eff,
            row.eta,
            spectral.u,
            spectral.eps_tilde,
            entropy,
        ];
        let line: Vec<String> = cols.iter().map(|&v| fmt_f64(v)).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    write_file(config.out_path()?, &csv)?;
    log_info(&format!(
        "synthesized schedule with {} rows (non_markovian = {})",
        sched.rows.len(),
        sched.non_markovian
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// propagate

/// Integrate the consistency equations along the synthesized schedule
/// and export coefficients, moments, and entropy diagnostics.
pub fn run_propagate(config: &RunConfig) -> Result<()> {
    let sched = ControlSchedule::synthesize(config.spec(DEFAULT_ODE_STEPS)?)?;
    let init = thermal_coeffs(&config.start()?)?;
    let n_steps = sched.spec.n_steps.max(2);
    let traj = integrate_consistency(&sched, init, n_steps)?;

    let spectra: Vec<_> = traj
        .coeffs
        .iter()
        .map(spectral_decompose)
        .collect::<Result<Vec<_>>>()?;
    let entropies: Vec<f64> = spectra
        .iter()
        .map(|s| von_neumann_entropy(s.u))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = metadata_block(config, &sched, &[("nmax", config.nmax.to_string())]);
    csv.push_str("t,A,B,C,xx,pp,xp,entropy,relative_entropy,entropy_rate_lhs,entropy_rate_rhs\n");
    let n = traj.times.len();
    let mut rel_failures = 0usize;
    for i in 0..n {
        let c = &traj.coeffs[i];
        let m = covariance_moments(c);
        let s = &spectra[i];
        // the entropy diagnostic can be infeasible for very hot states;
        // the column records nan there rather than aborting the export
        let rel = match relative_entropy(s.u, c.b, s.k, config.nmax) {
            Ok(r) => r.value,
            Err(e) => {
                if rel_failures == 0 {
                    log_info(&format!("relative entropy unavailable at t = {}: {e}", traj.times[i]));
                }
                rel_failures += 1;
                f64::NAN
            }
        };
        let rate_lhs = if i == 0 || i == n - 1 {
            f64::NAN
        } else {
            (entropies[i + 1] - entropies[i - 1]) / (2.0 * traj.dt)
        };
        let rate_rhs = sched.gamma(traj.times[i]) * s.eps_tilde / (s.k * s.k);
        let cols = [
            traj.times[i],
            c.a,
            c.b,
            c.c,
            m.xx,
            m.pp,
            m.xp,
            entropies[i],
            rel,
            rate_lhs,
            rate_rhs,
        ];
        let line: Vec<String> = cols.iter().map(|&v| fmt_f64(v)).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    write_file(config.out_path()?, &csv)?;

    if rel_failures > 0 {
        eprintln!(
            "warning: relative entropy was not evaluable at {rel_failures} of {n} rows \
             (recorded as nan)"
        );
    }
    let target = thermal_coeffs(&config.end()?)?;
    let last = traj.coeffs.last().unwrap();
    let dev = (last.a - target.a)
        .abs()
        .max((last.b - target.b).abs())
        .max((last.c - target.c).abs());
    println!("final deviation from target (max over A, B, C): {}", fmt_f64(dev));
    println!("final |B|: {}", fmt_f64(last.b.abs()));
    Ok(())
}

// ---------------------------------------------------------------------------
// ensemble

/// Trajectory-ensemble verification: stochastic moments with standard
/// errors against the deterministic route, one row per sampled time.
pub fn run_ensemble(config: &RunConfig) -> Result<()> {
    if config.ntraj < 100 {
        return Err(Error::Precondition(format!(
            "ensemble verification needs at least 100 trajectories, got {}",
            config.ntraj
        )));
    }
    let n_samples = config.steps.unwrap_or(100).max(2);
    let sched = ControlSchedule::synthesize(ProtocolSpec::new(
        config.start()?,
        config.end()?,
        config.tf,
        n_samples,
    )?)?;
    if sched.non_markovian {
        return Err(Error::Precondition(
            "the requested endpoints need gamma_t < 0 somewhere, which no noise or \
             measurement scheme realizes; only schedules with gamma_t >= 0 can be \
             verified stochastically"
                .into(),
        ));
    }
    let start = config.start()?;
    let opts = SdeOptions { n_steps: DEFAULT_SDE_STEPS, n_samples };
    let scheme = config.unraveling;
    let (stats, det) = config.with_workers(|| {
        let stats = ensemble_average(&sched, &start, scheme, config.ntraj, config.seed, opts)?;
        // deterministic reference on a grid aligned with the samples
        let n_det = n_samples * DEFAULT_ODE_STEPS.div_ceil(n_samples);
        let init = thermal_coeffs(&start)?;
        let det = integrate_consistency(&sched, init, n_det)?;
        Ok::<_, Error>((stats, det))
    })??;

    let per = det.times.len().saturating_sub(1) / n_samples;
    let mut csv = metadata_block(
        config,
        &sched,
        &[
            ("ntraj", config.ntraj.to_string()),
            ("unraveling", scheme.as_str().to_string()),
            ("seed", config.seed.to_string()),
            ("sde_steps", format!("{}", opts.n_steps)),
        ],
    );
    csv.push_str("t,xx_det,xx_ens,xx_se,pp_det,pp_ens,pp_se,xp_det,xp_ens,xp_se,z_max\n");
    for (j, &t) in stats.times.iter().enumerate() {
        let m = covariance_moments(&det.coeffs[j * per]);
        let z = |mean: f64, se: f64, want: f64| -> f64 {
            if se > 0.0 {
                (mean - want).abs() / se
            } else if (mean - want).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let z_max = z(stats.xx[j].mean, stats.xx[j].se, m.xx)
            .max(z(stats.pp[j].mean, stats.pp[j].se, m.pp))
            .max(z(stats.xp[j].mean, stats.xp[j].se, m.xp));
        let cols = [
            t,
            m.xx,
            stats.xx[j].mean,
            stats.xx[j].se,
            m.pp,
            stats.pp[j].mean,
            stats.pp[j].se,
            m.xp,
            stats.xp[j].mean,
            stats.xp[j].se,
            z_max,
        ];
        let line: Vec<String> = cols.iter().map(|&v| fmt_f64(v)).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    write_file(config.out_path()?, &csv)?;
    log_info(&format!(
        "{} trajectories ({}) against deterministic moments",
        config.ntraj,
        scheme.as_str()
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

/// Sweep final endpoints over a grid, reporting the extremal dephasing
/// strength, its location, and the entropy change per cell.
pub fn run_sweep(config: &RunConfig) -> Result<()> {
    let omega_range = config
        .omegaf_range
        .ok_or_else(|| Error::Domain("sweep needs --omegaf-range".into()))?;
    let beta_range = config
        .betaf_range
        .ok_or_else(|| Error::Domain("sweep needs --betaf-range".into()))?;
    let start = config.start()?;
    let u0 = start.boltzmann_u();
    let s0 = von_neumann_entropy(u0)?;
    let omegas = omega_range.values();
    let betas = beta_range.values();
    let cells: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&of| betas.iter().map(move |&bf| (of, bf)))
        .collect();
    let n_steps = config.steps.unwrap_or(256);
    let tf = config.tf;

    let rows: Vec<std::result::Result<String, String>> = config.with_workers(|| {
        cells
            .par_iter()
            .map(|&(of, bf)| {
                let cell = || -> Result<String> {
                    let end = ThermalEndpoint::new(of, bf)?;
                    let sched = ControlSchedule::synthesize(ProtocolSpec::new(
                        start, end, tf, n_steps,
                    )?)?;
                    let (t_max, gamma_max, _) = sched.gamma_max()?;
                    let uf = end.boltzmann_u();
                    let delta_s = von_neumann_entropy(uf)? - s0;
                    let ratio = bf * of / (config.beta0 * config.omega0);
                    let cols =
                        [of, bf, gamma_max, t_max / tf, delta_s, ratio];
                    Ok(cols.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","))
                };
                cell().map_err(|e| {
                    let nan_row = [
                        fmt_f64(of),
                        fmt_f64(bf),
                        "nan".into(),
                        "nan".into(),
                        "nan".into(),
                        "nan".into(),
                    ]
                    .join(",");
                    format!("{nan_row}\t{e}")
                })
            })
            .collect()
    })?;

    let mut csv = String::new();
    let _ = writeln!(csv, "# omega0 = {}", fmt_f64(config.omega0));
    let _ = writeln!(csv, "# beta0 = {}", fmt_f64(config.beta0));
    let _ = writeln!(csv, "# tf = {}", fmt_f64(tf));
    let _ = writeln!(
        csv,
        "# omegaf_range = {}:{}:{}",
        fmt_f64(omega_range.start),
        fmt_f64(omega_range.stop),
        omega_range.count
    );
    let _ = writeln!(
        csv,
        "# betaf_range = {}:{}:{}",
        fmt_f64(beta_range.start),
        fmt_f64(beta_range.stop),
        beta_range.count
    );
    csv.push_str("omega_f,beta_f,gamma_max,t_max_frac,delta_S,phase_space_ratio\n");
    let mut errors = 0usize;
    for row in &rows {
        match row {
            Ok(line) => {
                csv.push_str(line);
                csv.push('\n');
            }
            Err(line_and_msg) => {
                errors += 1;
                let (line, msg) = line_and_msg.split_once('\t').unwrap_or((line_and_msg, ""));
                log_debug(&format!("sweep cell failed: {msg}"));
                csv.push_str(line);
                csv.push('\n');
            }
        }
    }
    write_file(config.out_path()?, &csv)?;
    println!("sweep complete: {} cells, {} errors", rows.len(), errors);
    Ok(())
}

// ---------------------------------------------------------------------------
// check

struct CheckReport {
    failures: usize,
}

impl CheckReport {
    fn new() -> Self {
        println!("{:<44} {:>12} {:>14}  result", "check", "tolerance", "measured");
        Self { failures: 0 }
    }

    fn record(&mut self, name: &str, tolerance: f64, measured: f64) {
        let pass = measured.is_finite() && measured <= tolerance;
        if !pass {
            self.failures += 1;
        }
        println!(
            "{:<44} {:>12.1e} {:>14.3e}  {}",
            name,
            tolerance,
            measured,
            if pass { "PASS" } else { "FAIL" }
        );
    }

    fn note(&mut self, text: &str) {
        println!("  - {text}");
    }
}

/// Run the full invariant battery; returns the number of failures.
pub fn run_check(config: &RunConfig) -> Result<usize> {
    let mut report = CheckReport::new();

    // Mehler resummation against its closed form.
    let (_, _, err) = mehler_check(0.3, 0.7, -0.2, 60)?;
    report.record("mehler_partial_sum", 1e-12, err);
    let (sum, closed, _) = mehler_check(0.4, 0.0, 0.0, 80)?;
    report.record("mehler_at_origin", 1e-12, (sum - closed).abs());

    // Hermite orthogonality by quadrature.
    {
        let n = 20_001;
        let l = 9.0;
        let h = 2.0 * l / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -l + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * hermite_eval(2, x)? * hermite_eval(3, x)? * (-x * x).exp();
        }
        report.record("hermite_orthogonality_quadrature", 1e-10, (acc * h).abs());
    }

    // Overlap structure at b = 1: diagonal 2^n n! sqrt(pi), zero off it.
    {
        let b = num_complex::Complex64::new(1.0, 0.0);
        let mut worst = 0.0f64;
        let mut fact = 1.0f64;
        for n in 0..=10usize {
            if n > 0 {
                fact *= n as f64;
            }
            let want = 2f64.powi(n as i32) * fact * std::f64::consts::PI.sqrt();
            let diag = overlap_integral(n, n, b)?;
            worst = worst.max((diag.re - want).abs() / want).max(diag.im.abs() / want);
            for m in (n + 1)..=10usize {
                worst = worst.max(overlap_integral(n, m, b)?.norm());
            }
        }
        report.record("overlap_orthogonality_at_unit_b", 1e-10, worst);
    }

    // Finite sum against the quadrature oracle.
    {
        let cases = [
            (0usize, 0usize, num_complex::Complex64::new(1.3, 0.4)),
            (3, 5, num_complex::Complex64::new(1.3, 0.4)),
            (2, 8, num_complex::Complex64::new(0.7, -0.9)),
            (6, 6, num_complex::Complex64::new(2.5, 0.0)),
            (1, 7, num_complex::Complex64::new(0.4, 1.1)),
        ];
        let mut worst = 0.0f64;
        for (n, m, b) in cases {
            let quad = oracles::overlap_by_quadrature(n, m, b)?;
            let sum = overlap_integral(n, m, b)?;
            worst = worst.max((quad - sum).norm() / sum.norm().max(1.0));
        }
        report.record("overlap_vs_quadrature_oracle", 1e-9, worst);
    }

    // Finite sum against the terminating hypergeometric form.
    {
        let bs = [
            num_complex::Complex64::new(0.13, 0.7),
            num_complex::Complex64::new(1.9, -2.3),
            num_complex::Complex64::new(2.2, 4.0),
        ];
        let mut worst = 0.0f64;
        for b in bs {
            for n in 0..=10usize {
                for p in 0..=10usize {
                    let m = n + 2 * p;
                    let a = overlap_integral(n, m, b)?;
                    let h = overlap_integral_2f1(n, m, b)?;
                    worst = worst.max((a - h).norm() / a.norm().max(1.0));
                }
            }
        }
        report.record("overlap_finite_sum_vs_2f1", 1e-10, worst);
    }

    // Row unitarity of the normalized overlaps.
    {
        let mut worst = 0.0f64;
        for &bbar in &[0.1, 1.0, 5.0] {
            let table = diagnostics::OverlapTable::build(bbar, 10, 1e-12)?;
            for n in 0..=10 {
                worst = worst.max(table.row_defect(n));
            }
        }
        report.record("overlap_row_unitarity", 1e-8, worst);
    }

    // Control-field form equivalences on a reference schedule.
    let sched = ControlSchedule::synthesize(ProtocolSpec::new(
        ThermalEndpoint::new(1.0, 1.0)?,
        ThermalEndpoint::new(3.0, 2.0)?,
        6.0,
        2000,
    )?)?;
    {
        let h = 1e-6;
        let spectral = |t: f64| -> Result<crate::gaussian::SpectralData> {
            let p = sched.interpolate(t)?;
            spectral_decompose(&GaussianCoeffs::new(p.a, 0.0, p.c)?)
        };
        let mut worst_u = 0.0f64;
        let mut worst_half = 0.0f64;
        let mut worst_full = 0.0f64;
        let mut worst_omega = 0.0f64;
        let mut worst_eta = 0.0f64;
        for i in 1..60 {
            let t = 6.0 * i as f64 / 60.0;
            let gamma = sched.gamma(t);
            let s = spectral(t)?;
            let sp = spectral(t + h)?;
            let sm = spectral(t - h)?;
            let udot = (sp.u - sm.u) / (2.0 * h);
            let epsdot = (sp.eps_tilde - sm.eps_tilde) / (2.0 * h);
            worst_u = worst_u.max((gamma - s.k * s.k * udot / (1.0 - s.u).powi(2)).abs());
            worst_half = worst_half.max(
                (gamma + s.k * s.k * epsdot / (4.0 * (s.eps_tilde / 2.0).sinh().powi(2))).abs(),
            );
            worst_full = worst_full
                .max((gamma + s.k * s.k * epsdot / (4.0 * s.eps_tilde.sinh().powi(2))).abs());
            let om = |t: f64| -> Result<f64> {
                crate::protocol::effective_omega(&sched.interpolate(t)?)
            };
            let omega_dot = (om(t + h)? - om(t - h)?) / (2.0 * h);
            let alt = s.omega_tilde * s.omega_tilde - om(t)? * om(t)? - omega_dot;
            worst_omega = worst_omega.max((sched.omega_sq(t) - alt).abs());
            let s0 = spectral_decompose(&sched.start_coeffs)?;
            let kappa = s0.k / s.k;
            let eta_spec =
                kappa * ((s0.eps_tilde / 2.0).tanh() / (s.eps_tilde / 2.0).tanh()).sqrt();
            worst_eta = worst_eta.max((sched.eta(t)? - eta_spec).abs());
        }
        report.record("gamma_coefficient_vs_u_form", 1e-8, worst_u);
        report.record("gamma_spectral_half_argument_form", 1e-8, worst_half);
        report.note(&format!(
            "half-argument sinh reproduces the coefficient form; the full-argument \
             variant deviates by {:.3e} and is rejected",
            worst_full
        ));
        report.record("omega_sq_two_forms", 1e-8, worst_omega);
        report.record("eta_two_forms", 1e-10, worst_eta);
    }

    // Moment closed forms against kernel quadrature.
    {
        let cases = [
            GaussianCoeffs::new(0.6565176427496656, 0.0, -0.4254590641196608)?,
            GaussianCoeffs::new(1.2, 0.7, -0.4)?,
            GaussianCoeffs::new(0.9, -1.3, -0.05)?,
        ];
        let mut worst = 0.0f64;
        for c in &cases {
            let m = covariance_moments(c);
            let q = oracles::moments_by_quadrature(c);
            worst = worst
                .max((m.xx - q.xx).abs())
                .max((m.pp - q.pp).abs() / m.pp.abs().max(1.0))
                .max((m.xp - q.xp).abs() / m.xp.abs().max(1.0));
        }
        report.record("moments_vs_kernel_quadrature", 1e-8, worst);
    }

    // Purity two ways.
    {
        let mut worst = 0.0f64;
        for &(omega, beta) in &[(1.0, 1.0), (2.0, 0.7)] {
            let c = thermal_coeffs(&ThermalEndpoint::new(omega, beta)?)?;
            let u = spectral_decompose(&c)?.u;
            worst = worst.max((oracles::purity_by_quadrature(&c) - purity_from_u(u)?).abs());
        }
        report.record("purity_spectrum_vs_quadrature", 1e-8, worst);
    }

    // Entropy closed form against the truncated spectral sum.
    {
        let mut worst = 0.0f64;
        for &u in &[0.1f64, 0.36787944117144233, 0.6] {
            let mut s = 0.0;
            let mut n = 0;
            loop {
                let p = u.powi(n) * (1.0 - u);
                if p < 1e-16 {
                    break;
                }
                s -= p * p.ln();
                n += 1;
            }
            worst = worst.max((von_neumann_entropy(u)? - s).abs());
        }
        report.record("entropy_closed_form_vs_sum", 1e-12, worst);
    }

    // Propagation route equivalence and target attainment.
    {
        let mut worst_target = 0.0f64;
        let mut worst_route = 0.0f64;
        let mut worst_heisenberg: f64 = 0.0;
        for &(of, bf, tf) in
            &[(3.0, 2.0, 2.0), (3.0, 2.0, 6.0), (0.25, 2.0, 2.0), (0.25, 2.0, 6.0)]
        {
            let sched = ControlSchedule::synthesize(ProtocolSpec::new(
                ThermalEndpoint::new(1.0, 1.0)?,
                ThermalEndpoint::new(of, bf)?,
                tf,
                256,
            )?)?;
            let init = thermal_coeffs(&ThermalEndpoint::new(1.0, 1.0)?)?;
            let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS)?;
            let target = thermal_coeffs(&ThermalEndpoint::new(of, bf)?)?;
            let last = traj.coeffs.last().unwrap();
            worst_target = worst_target
                .max((last.a - target.a).abs())
                .max((last.b - target.b).abs())
                .max((last.c - target.c).abs());
            let oracle =
                integrate_covariance_oracle(&sched, covariance_moments(&init), DEFAULT_ODE_STEPS)?;
            for i in 0..traj.coeffs.len() {
                let m = covariance_moments(&traj.coeffs[i]);
                let o = &oracle.moments[i];
                worst_route = worst_route
                    .max((m.xx - o.xx).abs())
                    .max((m.pp - o.pp).abs())
                    .max((m.xp - o.xp).abs());
                worst_heisenberg =
                    worst_heisenberg.max(0.25 - (m.xx * m.pp - m.xp * m.xp));
            }
        }
        report.record("target_attainment", 1e-6, worst_target);
        report.record("route_equivalence_ode_vs_oracle", 1e-8, worst_route);
        report.record("uncertainty_bound_along_trajectories", 1e-10, worst_heisenberg);
    }

    // Relative entropy: overlap table vs dense-grid matrix oracle and
    // the moment closed form.
    {
        let cases = [(0.3, 0.9), (0.05, 0.3), (0.2, 0.5)];
        let mut worst_grid = 0.0f64;
        let mut worst_closed = 0.0f64;
        for &(u, bbar) in &cases {
            let table = relative_entropy(u, bbar, 1.0, config.nmax.max(256))?;
            let grid = oracles::relative_entropy_grid(u, bbar)?;
            let closed = oracles::relative_entropy_closed_form(u, bbar)?;
            worst_grid = worst_grid.max((table.value - grid).abs());
            worst_closed = worst_closed.max((table.value - closed).abs());
        }
        report.record("relative_entropy_vs_grid_oracle", 1e-5, worst_grid);
        report.record("relative_entropy_vs_moment_form", 1e-5, worst_closed);
    }

    // Entropy rate identity and monotonicity on a heating schedule.
    {
        let sched = ControlSchedule::synthesize(ProtocolSpec::new(
            ThermalEndpoint::new(1.0, 1.0)?,
            ThermalEndpoint::new(0.25, 2.0)?,
            6.0,
            256,
        )?)?;
        let init = thermal_coeffs(&ThermalEndpoint::new(1.0, 1.0)?)?;
        let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS)?;
        let entropies: Vec<f64> = traj
            .coeffs
            .iter()
            .map(|c| von_neumann_entropy(spectral_decompose(c).unwrap().u).unwrap())
            .collect();
        let mut worst_rate = 0.0f64;
        let mut worst_dip = 0.0f64;
        for i in 1..entropies.len() - 1 {
            let lhs = (entropies[i + 1] - entropies[i - 1]) / (2.0 * traj.dt);
            let s = spectral_decompose(&traj.coeffs[i])?;
            let rhs = sched.gamma(traj.times[i]) * s.eps_tilde / (s.k * s.k);
            worst_rate = worst_rate.max((lhs - rhs).abs());
            worst_dip = worst_dip.max(entropies[i - 1] - entropies[i]);
        }
        report.record("entropy_rate_identity", 1e-5, worst_rate);
        report.record("entropy_monotone_under_heating", 1e-12, worst_dip);
    }

    // Extremal dephasing scaling with protocol duration.
    {
        let gm = |tf: f64| -> Result<(f64, f64)> {
            let sched = ControlSchedule::synthesize(ProtocolSpec::new(
                ThermalEndpoint::new(1.0, 1.0)?,
                ThermalEndpoint::new(3.0, 2.0)?,
                tf,
                512,
            )?)?;
            let (t_max, g, _) = sched.gamma_max()?;
            Ok((t_max / tf, g * tf))
        };
        let (frac1, prod1) = gm(1.0)?;
        let mut worst = 0.0f64;
        for &tf in &[0.5, 2.0, 4.0, 8.0, 16.0] {
            let (frac, prod) = gm(tf)?;
            worst = worst
                .max((frac - frac1).abs())
                .max((prod - prod1).abs() / prod1.abs());
        }
        report.record("gamma_max_inverse_duration_scaling", 1e-6, worst);
    }

    if report.failures == 0 {
        println!("all checks passed");
    } else {
        println!("{} check(s) FAILED", report.failures);
    }
    Ok(report.failures)
}
