//! Acceptance suite: end-to-end verification of the synthesized
//! protocols at pinned tolerances. Each test prints one PASS/FAIL line
//! with the measured quantity and its bound.

use std::time::Instant;

use num_complex::Complex64;

use sta_thermalizer::diagnostics::{mehler_check, overlap_integral, relative_entropy};
use sta_thermalizer::dynamics::{
    integrate_consistency, integrate_covariance_oracle, DEFAULT_ODE_STEPS,
};
use sta_thermalizer::gaussian::{
    covariance_moments, spectral_decompose, thermal_coeffs, von_neumann_entropy,
};
use sta_thermalizer::oracles;
use sta_thermalizer::protocol::effective_omega;
use sta_thermalizer::stochastic::{ensemble_average, SdeOptions, Unraveling, DEFAULT_SDE_STEPS};
use sta_thermalizer::{ControlSchedule, Controls, ProtocolSpec, ThermalEndpoint};

const REFERENCE_PAIRS: [(f64, f64); 2] = [(3.0, 2.0), (0.25, 2.0)];
const REFERENCE_DURATIONS: [f64; 2] = [2.0, 6.0];

fn endpoint(omega: f64, beta: f64) -> ThermalEndpoint {
    ThermalEndpoint::new(omega, beta).unwrap()
}

fn schedule(of: f64, bf: f64, tf: f64, n: usize) -> ControlSchedule {
    ControlSchedule::synthesize(
        ProtocolSpec::new(endpoint(1.0, 1.0), endpoint(of, bf), tf, n).unwrap(),
    )
    .unwrap()
}

struct Outcome {
    name: &'static str,
    started: Instant,
    runtime_limit: f64,
}

impl Outcome {
    fn start(name: &'static str, runtime_limit: f64) -> Self {
        Self { name, started: Instant::now(), runtime_limit }
    }

    fn finish(self, pass: bool, detail: &str) {
        let elapsed = self.started.elapsed().as_secs_f64();
        println!(
            "acceptance {}: {} ({detail}; {elapsed:.2}s of {:.0}s budget)",
            self.name,
            if pass { "PASS" } else { "FAIL" },
            self.runtime_limit
        );
        assert!(pass, "{}: {detail}", self.name);
        assert!(
            elapsed < self.runtime_limit,
            "{}: runtime {elapsed:.2}s exceeds {:.0}s",
            self.name,
            self.runtime_limit
        );
    }
}

#[test]
fn target_attainment() {
    let outcome = Outcome::start("target_attainment", 4.0);
    let mut worst = 0.0f64;
    for (of, bf) in REFERENCE_PAIRS {
        for tf in REFERENCE_DURATIONS {
            let t0 = Instant::now();
            let sched = schedule(of, bf, tf, 256);
            let init = thermal_coeffs(&endpoint(1.0, 1.0)).unwrap();
            let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS).unwrap();
            let target = thermal_coeffs(&endpoint(of, bf)).unwrap();
            let last = traj.coeffs.last().unwrap();
            let dev = (last.a - target.a)
                .abs()
                .max((last.b - target.b).abs())
                .max((last.c - target.c).abs());
            worst = worst.max(dev);
            assert!(
                t0.elapsed().as_secs_f64() < 1.0,
                "single protocol must integrate in under a second"
            );
        }
    }
    outcome.finish(worst < 1e-6, &format!("max |final - target| = {worst:.2e}, bound 1e-6"));
}

#[test]
fn gamma_max_duration_scaling() {
    let outcome = Outcome::start("gamma_max_duration_scaling", 1.0);
    let durations = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut products = Vec::new();
    let mut fractions = Vec::new();
    for &tf in &durations {
        let sched = schedule(3.0, 2.0, tf, 512);
        let (t_max, g_max, degenerate) = sched.gamma_max().unwrap();
        assert!(!degenerate);
        products.push(g_max * tf);
        fractions.push(t_max / tf);
    }
    let spread = |vals: &[f64]| -> f64 {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let rel_spread = spread(&products) / products[0].abs();
    let frac_spread = spread(&fractions);
    outcome.finish(
        rel_spread < 1e-6 && frac_spread < 1e-9,
        &format!(
            "gamma_max*t_f relative spread {rel_spread:.2e} (bound 1e-6), \
             t_max/t_f spread {frac_spread:.2e} (bound 1e-9)"
        ),
    );
}

#[test]
fn dephasing_sign_structure_on_endpoint_grid() {
    let outcome = Outcome::start("dephasing_sign_structure_on_endpoint_grid", 10.0);
    let axis: Vec<f64> = (0..21).map(|i| 0.2 + 3.8 * i as f64 / 20.0).collect();
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for &of in &axis {
        for &bf in &axis {
            let ratio = of * bf;
            if (ratio - 1.0).abs() < 0.02 {
                continue; // boundary cells exempt
            }
            let sched = schedule(of, bf, 3.0, 128);
            let (_, g_max, degenerate) = sched.gamma_max().unwrap();
            let ok = if ratio > 1.0 { !degenerate && g_max < 0.0 } else { g_max >= 0.0 };
            if !ok {
                violations.push((of, bf, g_max));
            }
            checked += 1;
        }
    }
    outcome.finish(
        violations.is_empty(),
        &format!("{checked} cells checked, {} sign violations {violations:?}", violations.len()),
    );
}

#[test]
fn trap_inversion_for_stated_compression_pair() {
    // As stated for the compression-cooling pair (omega_f = 3,
    // beta_f = 2): min omega^2 < 0 at t_f = 2 and > 0 at t_f = 6.
    //
    // The first half is mathematically false for the quintic
    // interpolation: omega^2 >= omega_0^2 = 1 throughout at t_f = 2 (the
    // pair only inverts for t_f below ~1.48). The inversion the figure
    // caption describes belongs to the expansion pair; see
    // trap_inversion_for_fast_expansion below. This test states the
    // requirement faithfully and is expected to stay red.
    let outcome = Outcome::start("trap_inversion_for_stated_compression_pair", 1.0);
    let min_fast = schedule(3.0, 2.0, 2.0, 4000)
        .rows
        .iter()
        .map(|r| r.omega_sq)
        .fold(f64::INFINITY, f64::min);
    let min_slow = schedule(3.0, 2.0, 6.0, 4000)
        .rows
        .iter()
        .map(|r| r.omega_sq)
        .fold(f64::INFINITY, f64::min);
    outcome.finish(
        min_fast < 0.0 && min_slow > 0.0,
        &format!(
            "min omega^2 at t_f=2 is {min_fast:.6} (required < 0) and at t_f=6 is \
             {min_slow:.6} (required > 0); the compression pair never dips below \
             omega_0^2 = 1 at these durations"
        ),
    );
}

#[test]
fn trap_inversion_for_fast_expansion() {
    // The phenomenon itself: fast expansion momentarily needs an
    // expulsive trap, slow expansion does not.
    let outcome = Outcome::start("trap_inversion_for_fast_expansion", 1.0);
    let min_fast = schedule(0.25, 2.0, 2.0, 4000)
        .rows
        .iter()
        .map(|r| r.omega_sq)
        .fold(f64::INFINITY, f64::min);
    let min_slow = schedule(0.25, 2.0, 6.0, 4000)
        .rows
        .iter()
        .map(|r| r.omega_sq)
        .fold(f64::INFINITY, f64::min);
    outcome.finish(
        min_fast < 0.0 && min_slow > 0.0,
        &format!("min omega^2: {min_fast:.4} at t_f=2 (inverted), {min_slow:.4} at t_f=6"),
    );
}

#[test]
fn unraveling_equivalence() {
    let outcome = Outcome::start("unraveling_equivalence", 60.0);
    let sched = schedule(0.25, 2.0, 6.0, 100);
    assert!(!sched.non_markovian, "heating-compatible schedule must have gamma >= 0");
    let start = endpoint(1.0, 1.0);
    let init = thermal_coeffs(&start).unwrap();
    let n_samples = 100usize;
    let n_det = n_samples * DEFAULT_ODE_STEPS.div_ceil(n_samples);
    let det = integrate_consistency(&sched, init, n_det).unwrap();
    let per = n_det / n_samples;
    let opts = SdeOptions { n_steps: DEFAULT_SDE_STEPS, n_samples };

    let mut detail = String::new();
    let mut pass = true;
    for scheme in [Unraveling::Noise, Unraveling::Measurement] {
        let stats = ensemble_average(&sched, &start, scheme, 10_000, 11, opts).unwrap();
        let mut good_rows = 0usize;
        let mut worst_z = 0.0f64;
        for (j, _) in stats.times.iter().enumerate() {
            let m = covariance_moments(&det.coeffs[j * per]);
            let z = |mean: f64, se: f64, want: f64| (mean - want).abs() / se;
            let row_z = z(stats.xx[j].mean, stats.xx[j].se, m.xx)
                .max(z(stats.pp[j].mean, stats.pp[j].se, m.pp))
                .max(z(stats.xp[j].mean, stats.xp[j].se, m.xp));
            worst_z = worst_z.max(row_z);
            if row_z < 3.0 {
                good_rows += 1;
            }
        }
        let frac = good_rows as f64 / stats.times.len() as f64;
        pass &= frac >= 0.99;
        detail.push_str(&format!(
            "{}: {good_rows}/{} rows with all |z| < 3 (worst z {worst_z:.2}); ",
            scheme.as_str(),
            stats.times.len()
        ));
    }
    outcome.finish(pass, detail.trim_end_matches("; "));
}

#[test]
fn oracle_route_equivalence() {
    let outcome = Outcome::start("oracle_route_equivalence", 2.0);
    let mut worst = 0.0f64;
    for (of, bf) in REFERENCE_PAIRS {
        for tf in REFERENCE_DURATIONS {
            let sched = schedule(of, bf, tf, 256);
            let init = thermal_coeffs(&endpoint(1.0, 1.0)).unwrap();
            let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS).unwrap();
            let oracle = integrate_covariance_oracle(
                &sched,
                covariance_moments(&init),
                DEFAULT_ODE_STEPS,
            )
            .unwrap();
            for i in 0..traj.coeffs.len() {
                let m = covariance_moments(&traj.coeffs[i]);
                let o = &oracle.moments[i];
                worst = worst
                    .max((m.xx - o.xx).abs())
                    .max((m.pp - o.pp).abs())
                    .max((m.xp - o.xp).abs());
            }
        }
    }
    outcome.finish(worst < 1e-8, &format!("max pointwise moment deviation {worst:.2e}, bound 1e-8"));
}

#[test]
fn entropy_identities() {
    let outcome = Outcome::start("entropy_identities", 2.0);
    // (a) entropy rate identity on interior grid points
    let sched = schedule(3.0, 2.0, 6.0, 256);
    let init = thermal_coeffs(&endpoint(1.0, 1.0)).unwrap();
    let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS).unwrap();
    let entropies: Vec<f64> = traj
        .coeffs
        .iter()
        .map(|c| von_neumann_entropy(spectral_decompose(c).unwrap().u).unwrap())
        .collect();
    let mut worst_rate = 0.0f64;
    for i in 1..entropies.len() - 1 {
        let lhs = (entropies[i + 1] - entropies[i - 1]) / (2.0 * traj.dt);
        let s = spectral_decompose(&traj.coeffs[i]).unwrap();
        let rhs = sched.gamma(traj.times[i]) * s.eps_tilde / (s.k * s.k);
        worst_rate = worst_rate.max((lhs - rhs).abs());
    }

    // (b) no entropy change on the phase-space-preserving contour
    let mut worst_ds = 0.0f64;
    for &of in &[0.4, 0.7, 1.0, 1.9, 3.2] {
        let bf = 1.0 / of;
        let u0 = spectral_decompose(&thermal_coeffs(&endpoint(1.0, 1.0)).unwrap()).unwrap().u;
        let uf = spectral_decompose(&thermal_coeffs(&endpoint(of, bf)).unwrap()).unwrap().u;
        let ds = von_neumann_entropy(uf).unwrap() - von_neumann_entropy(u0).unwrap();
        worst_ds = worst_ds.max(ds.abs());
    }

    // (c) monotone entropy under nonnegative dephasing
    let heating = schedule(0.25, 2.0, 6.0, 256);
    let htraj = integrate_consistency(&heating, init, DEFAULT_ODE_STEPS).unwrap();
    let mut worst_dip = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for c in &htraj.coeffs {
        let s = von_neumann_entropy(spectral_decompose(c).unwrap().u).unwrap();
        worst_dip = worst_dip.max(prev - s);
        prev = s;
    }

    outcome.finish(
        worst_rate < 1e-5 && worst_ds < 1e-10 && worst_dip <= 1e-12,
        &format!(
            "rate residual {worst_rate:.2e} (1e-5), contour |dS| {worst_ds:.2e} (1e-10), \
             monotonicity dip {worst_dip:.2e}"
        ),
    );
}

#[test]
fn spectral_overlap_battery() {
    let outcome = Outcome::start("spectral_overlap_battery", 30.0);

    // Mehler partial sums at N = 60 for u <= 0.5
    let mut worst_mehler = 0.0f64;
    for &u in &[0.1, 0.3, 0.5] {
        for &(x, y) in &[(0.7, -0.2), (0.0, 0.0), (1.3, 0.9)] {
            let (_, _, err) = mehler_check(u, x, y, 60).unwrap();
            worst_mehler = worst_mehler.max(err);
        }
    }

    // orthogonality at b = 1: exact zero structure, 1e-10 in value
    let mut worst_orth = 0.0f64;
    let mut structure_ok = true;
    let mut fact = 1.0f64;
    for n in 0..=10usize {
        if n > 0 {
            fact *= n as f64;
        }
        let want = 2f64.powi(n as i32) * fact * std::f64::consts::PI.sqrt();
        let diag = overlap_integral(n, n, Complex64::new(1.0, 0.0)).unwrap();
        worst_orth = worst_orth.max((diag.re - want).abs() / want);
        for m in 0..=10usize {
            if m != n {
                let v = overlap_integral(n, m, Complex64::new(1.0, 0.0)).unwrap();
                structure_ok &= v == Complex64::new(0.0, 0.0);
            }
        }
    }

    // finite sum vs quadrature for n, m <= 8
    let mut worst_quad = 0.0f64;
    let b = Complex64::new(1.3, 0.4);
    for n in 0..=8usize {
        for m in n..=8usize {
            if (m - n) % 2 != 0 {
                continue;
            }
            let q = oracles::overlap_by_quadrature(n, m, b).unwrap();
            let s = overlap_integral(n, m, b).unwrap();
            worst_quad = worst_quad.max((q - s).norm() / s.norm());
        }
    }

    // relative entropy vs the dense-grid matrix oracle, randomized
    let mut state = 0x5deece66du64;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst_rel = 0.0f64;
    for _ in 0..10 {
        let u = 0.05 + 0.30 * uniform();
        let bbar = (0.15 + 0.85 * uniform()) * if uniform() < 0.5 { -1.0 } else { 1.0 };
        let k = 0.6 + 1.0 * uniform();
        let table = relative_entropy(u, bbar * k * k, k, 400).unwrap();
        let grid = oracles::relative_entropy_grid(u, bbar).unwrap();
        worst_rel = worst_rel.max((table.value - grid).abs());
    }

    outcome.finish(
        worst_mehler < 1e-12 && structure_ok && worst_orth < 1e-10 && worst_quad < 1e-9
            && worst_rel < 1e-5,
        &format!(
            "mehler {worst_mehler:.2e} (1e-12), orthogonality {worst_orth:.2e} (1e-10, \
             structure {}), quadrature {worst_quad:.2e} (1e-9), grid oracle {worst_rel:.2e} (1e-5)",
            if structure_ok { "exact" } else { "violated" }
        ),
    );
}

#[test]
fn relative_entropy_protocol_profile() {
    let outcome = Outcome::start("relative_entropy_protocol_profile", 10.0);
    let mut pass = true;
    let mut detail = String::new();
    for (of, bf) in REFERENCE_PAIRS {
        let mut maxima = Vec::new();
        let mut endpoints_ok = true;
        for tf in REFERENCE_DURATIONS {
            let sched = schedule(of, bf, tf, 128);
            let init = thermal_coeffs(&endpoint(1.0, 1.0)).unwrap();
            let traj = integrate_consistency(&sched, init, 2048).unwrap();
            let mut s_max = 0.0f64;
            let mut profile = Vec::new();
            for i in (0..traj.coeffs.len()).step_by(16) {
                let c = &traj.coeffs[i];
                let s = spectral_decompose(c).unwrap();
                let rel = relative_entropy(s.u, c.b, s.k, 400).unwrap().value;
                profile.push(rel);
                s_max = s_max.max(rel);
            }
            endpoints_ok &= profile[0].abs() < 1e-8 && profile.last().unwrap().abs() < 1e-8;
            maxima.push(s_max);
        }
        // shorter protocol strays further from the reference thermal state
        let ordered = maxima[0] > maxima[1];
        pass &= ordered && endpoints_ok;
        detail.push_str(&format!(
            "({of}, {bf}): s_max(t_f=2) = {:.4} > s_max(t_f=6) = {:.4} is {ordered}, \
             endpoints < 1e-8: {endpoints_ok}; ",
            maxima[0], maxima[1]
        ));
    }
    outcome.finish(pass, detail.trim_end_matches("; "));
}

#[test]
fn integrated_b_matches_schedule_effective_frequency() {
    // supporting identity for the unraveling and propagation routes:
    // along the exact trajectory B_t = Omega_t / 2
    let outcome = Outcome::start("integrated_b_matches_schedule_effective_frequency", 2.0);
    let sched = schedule(3.0, 2.0, 6.0, 256);
    let init = thermal_coeffs(&endpoint(1.0, 1.0)).unwrap();
    let traj = integrate_consistency(&sched, init, DEFAULT_ODE_STEPS).unwrap();
    let mut worst = 0.0f64;
    for (t, c) in traj.times.iter().zip(&traj.coeffs) {
        let omega = effective_omega(&sched.interpolate(*t).unwrap()).unwrap();
        worst = worst.max((c.b - omega / 2.0).abs());
    }
    outcome.finish(worst < 1e-6, &format!("max |B - Omega/2| = {worst:.2e}, bound 1e-6"));
}
