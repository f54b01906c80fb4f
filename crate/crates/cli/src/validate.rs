//! Oracle suites run by `aoa-pla-lab validate`.
//!
//! Every closed form in the core crate is checked against an independent
//! evaluation: direct summation, inner products, finite differences,
//! brute-force scans, numerical minimization and Monte Carlo trials.

use std::fmt;
use std::time::{Duration, Instant};

use aoa_pla_core::authtest::{asymptotic_pmd_limit, critical_sigma, p_fa, p_md, p_sd, threshold};
use aoa_pla_core::bounds::{crb, mcrb_at_pseudo_true, mcrb_general, mismatch_curvature, pseudo_true, sandwich_terms};
use aoa_pla_core::montecarlo::{run_trials, sigma2_from_snr_db, Hypothesis, Scenario};
use aoa_pla_core::search::golden_section_max;
use aoa_pla_core::signal_model::{
    inject_s1_fault, inner, mismatch_vector, spoofed_mean, weighted_geom_sum_1, weighted_geom_sum_2,
};
use aoa_pla_core::{deg, Geometry, Search, Spoofer, C64};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Wall-clock budget of a full run; exceeding it only prints a warning.
pub const SOFT_BUDGET: Duration = Duration::from_secs(600);

/// Environment switch equivalent to `validate --inject-s1-fault`.
pub const FAULT_ENV: &str = "AOA_PLA_INJECT_S1_FAULT";

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            suite,
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.suite, self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Monte Carlo trials per efficiency scenario.
    pub trials: u64,
    pub seed: u64,
    /// Perturb `S1` by `1e-6` for the duration of the run.
    pub inject_s1_fault: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            trials: aoa_pla_core::montecarlo::DEFAULT_TRIALS,
            seed: aoa_pla_core::montecarlo::DEFAULT_SEED,
            inject_s1_fault: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn over_budget(&self) -> bool {
        self.elapsed > SOFT_BUDGET
    }

    pub fn render(&self) -> String {
        let mut out: String = self.checks.iter().map(|c| format!("{c}\n")).collect();
        let failed = self.failures().count();
        out.push_str(&format!(
            "{} checks, {} failed, {:.1} s\n",
            self.checks.len(),
            failed,
            self.elapsed.as_secs_f64()
        ));
        if self.over_budget() {
            out.push_str(&format!(
                "warning: validation took longer than the {} s budget\n",
                SOFT_BUDGET.as_secs()
            ));
        }
        out
    }

    /// `Err(Validation)` naming every failed check.
    pub fn into_result(self) -> CliResult<Self> {
        if self.passed() {
            Ok(self)
        } else {
            let names: Vec<String> = self.failures().map(|c| format!("[{}] {}", c.suite, c.name)).collect();
            Err(CliError::Validation(names.join(", ")))
        }
    }
}

/// Runs every suite.
pub fn run(options: &ValidateOptions) -> CliResult<ValidationReport> {
    let start = Instant::now();
    if options.inject_s1_fault {
        inject_s1_fault(true);
    }
    let result = (|| -> CliResult<Vec<Check>> {
        let mut checks = closed_forms()?;
        checks.extend(analytic_identities()?);
        checks.extend(efficiency(options.trials, options.seed)?);
        Ok(checks)
    })();
    if options.inject_s1_fault {
        inject_s1_fault(false);
    }
    Ok(ValidationReport {
        checks: result?,
        elapsed: start.elapsed(),
    })
}

fn core<T>(context: &str, r: aoa_pla_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::core(context, e))
}

// ---------------------------------------------------------------------------
// closed forms

const SUM_TOL: f64 = 1e-9;
const INNER_TOL: f64 = 1e-8;
const FD_TOL: f64 = 1e-4;
const THETA0_TOL: f64 = 1e-7;
const SANDWICH_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 1_000_000;

/// S1/S2, η/D, θ0 and sandwich oracles.
pub fn closed_forms() -> CliResult<Vec<Check>> {
    let mut checks = weighted_sums()?;
    checks.extend(curvature_oracles()?);
    checks.extend(theta0_scan()?);
    checks.extend(sandwich_identity()?);
    Ok(checks)
}

/// Deterministic sample of unit-circle points and array sizes. Every fifth
/// phase is shrunk toward zero to exercise the near-unity branch.
pub fn unit_circle_sample(count: usize) -> Vec<(C64, usize)> {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    (0..count)
        .map(|i| {
            let u = (0.5 + i as f64 * GOLDEN).fract();
            let mut phase = std::f64::consts::TAU * u - std::f64::consts::PI;
            if i % 5 == 0 {
                phase *= 10f64.powi(-(((i / 5) % 9) as i32));
            }
            let m = 2 + (i * 37) % 127;
            (C64::from_polar(1.0, phase), m)
        })
        .collect()
}

/// `Σ_{m<M} m^p r^m` with each phase `m·arg r` carried in two parts and
/// compensated accumulation.
pub fn direct_sum(r: C64, num_terms: usize, power: i32) -> C64 {
    let phi = r.arg();
    let (mut re, mut im) = (Kahan::default(), Kahan::default());
    for m in 1..num_terms {
        let mf = m as f64;
        let hi = phi * mf;
        let lo = phi.mul_add(mf, -hi);
        let (s, c) = hi.sin_cos();
        let w = mf.powi(power);
        re.add(w * (c - s * lo));
        im.add(w * (s + c * lo));
    }
    C64::new(re.sum, im.sum)
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn weighted_sums() -> CliResult<Vec<Check>> {
    let sample = unit_circle_sample(1000);
    let mut out = Vec::new();
    for (power, name) in [(1, "S1"), (2, "S2")] {
        let mut worst = (0.0f64, C64::new(1.0, 0.0), 0usize);
        for &(r, m) in &sample {
            let closed = core(
                name,
                if power == 1 {
                    weighted_geom_sum_1(r, m)
                } else {
                    weighted_geom_sum_2(r, m)
                },
            )?;
            let err = (closed - direct_sum(r, m, power)).norm();
            if !(err <= worst.0) {
                worst = (err, r, m);
            }
        }
        out.push(Check::new(
            "closed-form",
            format!("{name} vs direct summation"),
            worst.0 <= SUM_TOL,
            format!(
                "max abs error {:.2e} (tol {SUM_TOL:.0e}) over {} points, worst at arg r = {:.3e}, M = {}",
                worst.0,
                sample.len(),
                worst.1.arg(),
                worst.2
            ),
        ));
    }
    Ok(out)
}

/// Spoofer configurations shared by the curvature and θ0 oracles.
pub fn spoofer_cases() -> Vec<(String, Geometry, Spoofer)> {
    let geom = |m| Geometry::half_wavelength(m).expect("M >= 2");
    // weights rescaled to unit l1 norm
    let normalized = |angles: &[f64], w: &[C64]| {
        let l1: f64 = w.iter().map(|q| q.norm()).sum();
        let w = w.iter().map(|q| q / l1).collect();
        Spoofer::normalized(angles.iter().map(|&a| deg(a)).collect(), w).expect("valid spoofer")
    };
    vec![
        (
            "M=16 single at 10.25deg".into(),
            geom(16),
            Spoofer::single(deg(10.25)).expect("valid"),
        ),
        (
            "M=8 colinear L=4 random phases at 12deg".into(),
            geom(8),
            Spoofer::colinear_with_phases(deg(12.0), &[0.3, -0.7, 1.1, 0.05]).expect("valid"),
        ),
        (
            "M=16 two-angle 11deg/13deg".into(),
            geom(16),
            normalized(&[11.0, 13.0], &[C64::new(0.6, 0.0), C64::new(0.4, 0.0)]),
        ),
        (
            "M=32 three-angle complex weights".into(),
            geom(32),
            normalized(
                &[-20.0, -18.5, -17.0],
                &[C64::new(0.5, 0.1), C64::new(0.3, -0.2), C64::new(0.2, 0.05)],
            ),
        ),
        (
            "M=64 two-angle near broadside".into(),
            geom(64),
            normalized(&[0.5, 1.0], &[C64::new(0.7, 0.0), C64::from_polar(0.3, 0.4)]),
        ),
    ]
}

/// `‖s - a(θ)‖²` evaluated element by element.
fn objective(geom: &Geometry, s: &[C64], theta: f64) -> f64 {
    let psi = geom.wavenumber() * theta.sin();
    s.iter()
        .enumerate()
        .map(|(m, &sm)| (sm - C64::from_polar(1.0, -psi * m as f64)).norm_sqr())
        .sum()
}

/// Probe angles spread over the visible region, offset from the spoofer.
fn probe_angles() -> Vec<f64> {
    [-61.0, -33.3, -18.0, -7.7, 0.0, 4.4, 9.1, 14.5, 27.0, 48.2, 70.3].map(deg).to_vec()
}

fn curvature_oracles() -> CliResult<Vec<Check>> {
    let mut worst_inner = (0.0f64, String::new());
    let mut worst_fd = (0.0f64, String::new());
    let mut samples = 0;
    for (label, geom, spoofer) in spoofer_cases() {
        let s = spoofed_mean(&geom, &spoofer);
        for theta in probe_angles() {
            let mc = core("mismatch curvature", mismatch_curvature(&geom, &spoofer, theta))?;
            let diff = core("mismatch vector", mismatch_vector(&geom, &spoofer, theta))?;
            let ad = core("steering derivative", geom.steering_d1(theta))?;
            let add = core("steering derivative", geom.steering_d2(theta))?;
            let eta_ip = inner(&ad, &diff).re;
            let d_ip = mc.gamma - inner(&add, &diff).re;

            // central differences, h chosen against the O(h²) truncation
            // and the O(eps/h²) rounding of the second difference
            let h = 1e-4 / geom.num_elements() as f64;
            let f = |t: f64| objective(&geom, &s, t);
            let (fm, f0, fp) = (f(theta - h), f(theta), f(theta + h));
            let (fm2, fp2) = (f(theta - 2.0 * h), f(theta + 2.0 * h));
            let slope = (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * h);
            let curv = (-fm2 + 16.0 * fm - 30.0 * f0 + 16.0 * fp - fp2) / (12.0 * h * h);
            let eta_fd = -0.5 * slope;
            let d_fd = 0.5 * curv;

            let at = format!("{label} at {:.2}deg", theta.to_degrees());
            for (closed, reference, what) in [(mc.eta, eta_ip, "eta"), (mc.d_curv, d_ip, "D")] {
                let rel = relative(closed, reference, mc.gamma);
                if rel > worst_inner.0 {
                    worst_inner = (rel, format!("{what}, {at}"));
                }
            }
            for (closed, reference, what) in [(mc.eta, eta_fd, "eta"), (mc.d_curv, d_fd, "D")] {
                let rel = relative(closed, reference, mc.gamma);
                if rel > worst_fd.0 {
                    worst_fd = (rel, format!("{what}, {at}"));
                }
            }
            samples += 1;
        }
    }
    Ok(vec![
        Check::new(
            "closed-form",
            "eta/D vs inner products",
            worst_inner.0 <= INNER_TOL,
            format!(
                "max rel error {:.2e} (tol {INNER_TOL:.0e}) over {samples} angles, worst: {}",
                worst_inner.0, worst_inner.1
            ),
        ),
        Check::new(
            "closed-form",
            "eta/D vs finite differences",
            worst_fd.0 <= FD_TOL,
            format!(
                "max rel error {:.2e} (tol {FD_TOL:.0e}) over {samples} angles, worst: {}",
                worst_fd.0, worst_fd.1
            ),
        ),
    ])
}

/// Relative error with the denominator floored at `1e-6 Γ`, the scale below
/// which `η` and `D` are zero to working precision.
fn relative(value: f64, reference: f64, gamma: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(value.abs()).max(1e-6 * gamma)
}

/// Minimizer of `‖s - a(θ)‖²` over `n` uniform points of `[lo, hi]`; ties
/// keep the smaller angle.
fn scan(geom: &Geometry, s: &[C64], lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let t = lo + step * i as f64;
            (objective(geom, s, t), t)
        })
        .reduce(
            || (f64::INFINITY, 0.0),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        )
        .1
}

/// Brute-force `θ0`: a full scan of the guarded interval, then a second scan
/// of the same density over ±2 cells of the first minimum.
pub fn theta0_by_scan(geom: &Geometry, spoofer: &Spoofer, points: usize) -> f64 {
    let s = spoofed_mean(geom, spoofer);
    let limit = std::f64::consts::FRAC_PI_2 - deg(0.1);
    let coarse = scan(geom, &s, -limit, limit, points);
    let cell = 2.0 * limit / (points - 1) as f64;
    let fine = scan(geom, &s, coarse - 2.0 * cell, coarse + 2.0 * cell, points);
    fine
}

fn theta0_scan() -> CliResult<Vec<Check>> {
    let results: Vec<CliResult<(String, f64)>> = spoofer_cases()
        .into_iter()
        .map(|(label, geom, spoofer)| {
            let pt = core("pseudo-true angle", pseudo_true(&geom, &spoofer, &Search::pseudo_true()))?;
            let grid = theta0_by_scan(&geom, &spoofer, SCAN_POINTS);
            Ok((label, (pt.theta0 - grid).abs()))
        })
        .collect();
    let mut worst = (0.0f64, String::new());
    for r in results {
        let (label, err) = r?;
        if !(err <= worst.0) {
            worst = (err, label);
        }
    }
    Ok(vec![Check::new(
        "closed-form",
        "theta0 vs grid scan",
        worst.0 <= THETA0_TOL,
        format!(
            "max |theta0 - scan| {:.2e} rad (tol {THETA0_TOL:.0e}), worst: {}",
            worst.0, worst.1
        ),
    )])
}

fn sandwich_identity() -> CliResult<Vec<Check>> {
    let mut worst = (0.0f64, String::new());
    for (label, geom, spoofer) in spoofer_cases() {
        let pt = core("pseudo-true angle", pseudo_true(&geom, &spoofer, &Search::pseudo_true()))?;
        for (sigma2, k) in [(1.0, 10), (0.1, 20), (3.2, 2)] {
            for theta in [pt.theta0, pt.theta0 + 1e-3, pt.theta0 - 4e-3] {
                let terms = core("sandwich", sandwich_terms(&geom, &spoofer, theta, sigma2, k))?;
                let general = core("mcrb", mcrb_general(&geom, &spoofer, theta, sigma2, k))?;
                let rel = (terms.mcrb() - general).abs() / general.abs();
                if !(rel <= worst.0) {
                    worst = (rel, format!("{label}, sigma2={sigma2}, K={k}"));
                }
            }
        }
    }
    Ok(vec![Check::new(
        "closed-form",
        "sandwich B/A^2 vs MCRB",
        worst.0 <= SANDWICH_TOL,
        format!("max rel error {:.2e} (tol {SANDWICH_TOL:.0e}), worst: {}", worst.0, worst.1),
    )])
}

// ---------------------------------------------------------------------------
// analytic identities

const INVERSE_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-12;
const CRITICAL_TOL: f64 = 1e-6;

const ALPHAS: [f64; 7] = [1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5];
const VARIANCES: [f64; 4] = [1e-10, 1e-6, 2.5e-3, 1.0];

/// Threshold inverse pair, the `δ = 0` identity, the asymptotic limit and the
/// critical estimator spread.
pub fn analytic_identities() -> CliResult<Vec<Check>> {
    let mut inverse = 0.0f64;
    let mut pmd = 0.0f64;
    let mut limit = 0.0f64;
    for alpha in ALPHAS {
        for c in VARIANCES {
            let tau = core("threshold", threshold(alpha, c))?;
            inverse = inverse.max((p_fa(tau, c) - alpha).abs() / alpha);
            let back = core("threshold", threshold(p_fa(tau, c), c))?;
            inverse = inverse.max((back - tau).abs() / tau);
            pmd = pmd.max((p_md(tau, 0.0, c) - (1.0 - alpha)).abs());
            let lim = core("asymptotic limit", asymptotic_pmd_limit(alpha, c, c))?;
            limit = limit.max((lim - (1.0 - alpha)).abs());
        }
    }

    let mut critical = (0.0f64, String::new());
    for tau in [1e-3, 0.05, 1.0] {
        for ratio in [1.01, 1.5, 2.0, 5.0, 20.0] {
            let delta = ratio * tau;
            let Some(sigma) = critical_sigma(delta, tau) else {
                critical = (f64::INFINITY, format!("no critical sigma at delta/tau={ratio}"));
                continue;
            };
            let (numeric, _, _) =
                golden_section_max(|s: f64| -p_sd(tau, delta, s * s), 0.01 * delta, 20.0 * delta, 1e-13 * delta, 400);
            let rel = (numeric - sigma).abs() / sigma;
            if !(rel <= critical.0) {
                critical = (rel, format!("tau={tau}, delta/tau={ratio}"));
            }
        }
    }
    let below = critical_sigma(0.5, 1.0).is_none() && critical_sigma(1.0, 1.0).is_none();

    Ok(vec![
        Check::new(
            "analytic",
            "threshold/p_fa inverse pair",
            inverse <= INVERSE_TOL,
            format!("max rel error {inverse:.2e} (tol {INVERSE_TOL:.0e})"),
        ),
        Check::new(
            "analytic",
            "P_MD(delta=0, MCRB=CRB) = 1 - alpha",
            pmd <= IDENTITY_TOL,
            format!("max abs error {pmd:.2e} (tol {IDENTITY_TOL:.0e})"),
        ),
        Check::new(
            "analytic",
            "asymptotic limit at CRB1 = MCRB1",
            limit <= IDENTITY_TOL,
            format!("max abs error {limit:.2e} (tol {IDENTITY_TOL:.0e})"),
        ),
        Check::new(
            "analytic",
            "critical sigma vs numerical minimizer",
            critical.0 <= CRITICAL_TOL && below,
            format!(
                "max rel error {:.2e} (tol {CRITICAL_TOL:.0e}), worst: {}; undefined for |delta| <= tau: {below}",
                critical.0, critical.1
            ),
        ),
    ])
}

// ---------------------------------------------------------------------------
// statistical efficiency

/// Largest accepted ratio between empirical variance and its bound.
pub const VARIANCE_FACTOR: f64 = 1.3;
/// H1 bias allowance in standard errors of the mean.
pub const MEAN_SE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCase {
    pub label: String,
    pub snr_db: f64,
    pub spoofer: Option<Spoofer>,
}

pub const EFFICIENCY_ELEMENTS: usize = 16;
pub const EFFICIENCY_SNAPSHOTS: usize = 20;
pub const EFFICIENCY_THETA_U_DEG: f64 = 10.0;

pub fn efficiency_cases() -> Vec<EfficiencyCase> {
    let two_angle = Spoofer::normalized(vec![deg(11.0), deg(13.0)], vec![C64::new(0.6, 0.0), C64::new(0.4, 0.0)])
        .expect("valid spoofer");
    let mut cases = Vec::new();
    for snr in [10.0, 20.0] {
        cases.push(EfficiencyCase {
            label: format!("H0 SNR={snr}dB"),
            snr_db: snr,
            spoofer: None,
        });
        cases.push(EfficiencyCase {
            label: format!("H1 colinear L=4 delta=1deg SNR={snr}dB"),
            snr_db: snr,
            spoofer: Some(Spoofer::colinear_equal_gain(deg(EFFICIENCY_THETA_U_DEG + 1.0), 4).expect("valid")),
        });
        cases.push(EfficiencyCase {
            label: format!("H1 two-angle 11deg/13deg SNR={snr}dB"),
            snr_db: snr,
            spoofer: Some(two_angle.clone()),
        });
    }
    cases
}

/// Estimator variance against CRB (H0) or MCRB at `θ0` (H1), M=16, K=20.
pub fn efficiency(trials: u64, seed: u64) -> CliResult<Vec<Check>> {
    let geom = core("geometry", Geometry::half_wavelength(EFFICIENCY_ELEMENTS))?;
    let theta_u = deg(EFFICIENCY_THETA_U_DEG);
    let mut checks = Vec::new();
    for (i, case) in efficiency_cases().into_iter().enumerate() {
        let sigma2 = sigma2_from_snr_db(case.snr_db);
        // distinct seeds keep the cases statistically independent
        let base = Scenario::new(geom.clone(), theta_u, sigma2, EFFICIENCY_SNAPSHOTS)
            .with_trials(trials)
            .with_seed(seed.wrapping_add(i as u64));
        let check = match &case.spoofer {
            None => {
                let summary = core(&case.label, run_trials(&base, Hypothesis::H0))?;
                let bound = core("crb", crb(&geom, theta_u, sigma2, EFFICIENCY_SNAPSHOTS))?;
                let ratio = summary.moments.variance / bound;
                Check::new(
                    "efficiency",
                    format!("{} var vs CRB", case.label),
                    within_factor(ratio) && summary.non_converged == 0,
                    format!(
                        "var/CRB = {ratio:.4} (allowed [{:.3}, {VARIANCE_FACTOR}]), {trials} trials, {} non-converged",
                        1.0 / VARIANCE_FACTOR,
                        summary.non_converged
                    ),
                )
            }
            Some(spoofer) => {
                let sc = base.with_spoofer(spoofer.clone());
                let summary = core(&case.label, run_trials(&sc, Hypothesis::H1))?;
                let bounds = core(
                    "mcrb",
                    mcrb_at_pseudo_true(&geom, &spoofer.merged(), sigma2, EFFICIENCY_SNAPSHOTS),
                )?;
                let ratio = summary.moments.variance / bounds.mcrb_k;
                let bias = (summary.moments.mean - bounds.theta0()) / summary.moments.std_error();
                Check::new(
                    "efficiency",
                    format!("{} var vs MCRB, mean vs theta0", case.label),
                    within_factor(ratio) && bias.abs() <= MEAN_SE && summary.non_converged == 0,
                    format!(
                        "var/MCRB = {ratio:.4} (allowed [{:.3}, {VARIANCE_FACTOR}]), (mean - theta0)/SE = {bias:.2} (allowed ±{MEAN_SE}), {trials} trials, {} non-converged",
                        1.0 / VARIANCE_FACTOR,
                        summary.non_converged
                    ),
                )
            }
        };
        checks.push(check);
    }
    Ok(checks)
}

fn within_factor(ratio: f64) -> bool {
    ratio <= VARIANCE_FACTOR && ratio >= 1.0 / VARIANCE_FACTOR
}
