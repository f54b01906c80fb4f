//! Monte Carlo trial engine: noisy snapshots under both hypotheses, the
//! estimator and threshold test run per trial, and binomial summaries of the
//! outcomes.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, trial_index, tag)`. A trial consumes a fixed number of uniforms in
//! a fixed order (snapshot-major, antenna-minor, Box–Muller pairs), so the
//! outcome of a trial never depends on which worker ran it or in what order.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::authtest::{self, AnalyticInputs, AnalyticReport};
use crate::bounds::{self, crb};
use crate::error::{invalid, Error, Result};
use crate::estimator::{test_statistic, AoaEstimator, SnapshotBatch};
use crate::normal;
use crate::search::{BeamScanner, SearchSettings};
use crate::signal_model::{check_angle, spoofed_mean, ComplexVector, SpooferConfig, UlaGeometry};
use crate::Scalar;

/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 0x5eed_a0a0_2024_0001;
/// Trial count used when none is configured.
pub const DEFAULT_TRIALS: u64 = 100_000;
/// Confidence level of reported intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

const TAG_H0: u64 = 0;
const TAG_H1: u64 = 1;
const TAG_PHASES: u64 = 2;
const TAG_FIXED_PHASES: u64 = 3;
const TAGS: u64 = 4;

/// `σ² = 10^(-SNR/10)` for unit-power pilots.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn snr_db_from_sigma2(sigma2: f64) -> f64 {
    -10.0 * sigma2.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Legitimate transmitter at `θ_u`.
    H0,
    /// Spoofer.
    H1,
}

impl Hypothesis {
    fn tag(self) -> u64 {
        match self {
            Hypothesis::H0 => TAG_H0,
            Hypothesis::H1 => TAG_H1,
        }
    }
}

/// How the threshold `τ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule<T> {
    /// `τ = sqrt(CRB_K(θ_u)) Q⁻¹(α/2)`.
    Wald,
    /// A given threshold, e.g. from [`calibrate_threshold_mc`].
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRedraw {
    PerTrial,
    /// One draw shared by every trial of the scenario.
    Fixed,
}

/// Random per-antenna phase offsets `φ_ℓ ~ U[-φ_max, φ_max]` applied to the
/// spoofer weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpreadModel<T> {
    pub phi_max: T,
    pub redraw: PhaseRedraw,
}

impl<T: Scalar> PhaseSpreadModel<T> {
    pub fn new(phi_max: T, redraw: PhaseRedraw) -> Result<Self> {
        if !(phi_max.is_finite() && phi_max >= T::zero()) {
            return Err(invalid("phi_max", "phase spread must be finite and non-negative"));
        }
        Ok(Self { phi_max, redraw })
    }

    pub fn per_trial(phi_max: T) -> Result<Self> {
        Self::new(phi_max, PhaseRedraw::PerTrial)
    }

    fn draw(&self, rng: &mut ChaCha8Rng, antennas: usize) -> Vec<T> {
        (0..antennas)
            .map(|_| {
                let u: f64 = rng.gen();
                self.phi_max * T::lit(2.0 * u - 1.0)
            })
            .collect()
    }
}

/// `c = (1/L) Σ_ℓ e^{jφ_ℓ}`.
pub fn coherent_gain<T: Scalar>(phases: &[T]) -> Complex<T> {
    if phases.is_empty() {
        return Complex::new(T::zero(), T::zero());
    }
    let sum = phases
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &p| acc + Complex::from_polar(T::one(), p));
    sum / T::from_count(phases.len())
}

/// `E[e^{jφ}] = sin(φ_max)/φ_max` for `φ ~ U[-φ_max, φ_max]`.
pub fn mean_coherent_gain<T: Scalar>(phi_max: T) -> T {
    if phi_max == T::zero() {
        T::one()
    } else {
        phi_max.sin() / phi_max
    }
}

/// One simulated operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub geometry: UlaGeometry<T>,
    pub theta_u: T,
    /// Noise variance; `SNR = 1/σ²`.
    pub sigma2: T,
    pub snapshots: usize,
    pub alpha: T,
    pub spoofer: Option<SpooferConfig<T>>,
    pub phase_spread: Option<PhaseSpreadModel<T>>,
    pub threshold: ThresholdRule<T>,
    pub trials: u64,
    pub seed: u64,
    /// Confidence level of the reported Wilson intervals.
    pub confidence: f64,
}

impl<T: Scalar> Scenario<T> {
    /// Legitimate-only scenario with the default trial count, seed, `α = 1e-3`
    /// and a Wald threshold.
    pub fn new(geometry: UlaGeometry<T>, theta_u: T, sigma2: T, snapshots: usize) -> Self {
        Self {
            geometry,
            theta_u,
            sigma2,
            snapshots,
            alpha: T::lit(1e-3),
            spoofer: None,
            phase_spread: None,
            threshold: ThresholdRule::Wald,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn with_spoofer(mut self, spoofer: SpooferConfig<T>) -> Self {
        self.spoofer = Some(spoofer);
        self
    }

    pub fn with_phase_spread(mut self, model: PhaseSpreadModel<T>) -> Self {
        self.phase_spread = Some(model);
        self
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_threshold(mut self, rule: ThresholdRule<T>) -> Self {
        self.threshold = rule;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn snr_db(&self) -> f64 {
        snr_db_from_sigma2(self.sigma2.as_f64())
    }

    pub fn validate(&self) -> Result<()> {
        check_angle(self.theta_u)?;
        if !(self.sigma2.is_finite() && self.sigma2 > T::zero()) {
            return Err(invalid("sigma2", "noise variance must be positive and finite"));
        }
        if self.snapshots == 0 {
            return Err(invalid("snapshots", "need at least one snapshot"));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "need at least one trial"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid("confidence", "must lie in (0, 1)"));
        }
        if let ThresholdRule::Fixed(tau) = self.threshold {
            if !(tau.is_finite() && tau > T::zero()) {
                return Err(invalid("tau", "fixed threshold must be positive and finite"));
            }
        }
        if let Some(model) = &self.phase_spread {
            PhaseSpreadModel::new(model.phi_max, model.redraw)?;
        }
        Ok(())
    }

    /// `CRB_K(θ_u)`.
    pub fn crb_k(&self) -> Result<T> {
        crb(&self.geometry, self.theta_u, self.sigma2, self.snapshots)
    }

    /// Threshold in force for this scenario.
    pub fn tau(&self) -> Result<T> {
        match self.threshold {
            ThresholdRule::Wald => authtest::threshold(self.alpha, self.crb_k()?),
            ThresholdRule::Fixed(tau) => Ok(tau),
        }
    }

    fn spoofer_required(&self) -> Result<&SpooferConfig<T>> {
        self.spoofer.as_ref().ok_or(Error::MissingSpoofer)
    }

    fn fixed_phases(&self, spoofer: &SpooferConfig<T>) -> Option<Vec<T>> {
        match self.phase_spread {
            Some(model) if model.redraw == PhaseRedraw::Fixed => {
                let mut rng = stream(self.seed, 0, TAG_FIXED_PHASES);
                Some(model.draw(&mut rng, spoofer.len()))
            }
            _ => None,
        }
    }

    /// Noise-free snapshot mean for `trial` under `hypothesis`.
    fn mean(&self, hypothesis: Hypothesis, trial: u64) -> Result<ComplexVector<T>> {
        match hypothesis {
            Hypothesis::H0 => Ok(self.geometry.steering_unchecked(self.theta_u)),
            Hypothesis::H1 => {
                let spoofer = self.spoofer_required()?;
                let phases = match self.phase_spread {
                    None => None,
                    Some(model) => match model.redraw {
                        PhaseRedraw::Fixed => self.fixed_phases(spoofer),
                        PhaseRedraw::PerTrial => {
                            let mut rng = stream(self.seed, trial, TAG_PHASES);
                            Some(model.draw(&mut rng, spoofer.len()))
                        }
                    },
                };
                Ok(match phases {
                    Some(p) => spoofed_mean(&self.geometry, &spoofer.with_phase_rotation(&p)?.merged()),
                    None => spoofed_mean(&self.geometry, &spoofer.merged()),
                })
            }
        }
    }

    fn phases_vary_per_trial(&self) -> bool {
        matches!(self.phase_spread, Some(m) if m.redraw == PhaseRedraw::PerTrial && m.phi_max > T::zero())
    }

    /// Closed-form report at this operating point. For a per-trial phase
    /// spread this is the report at the zero-phase spoofer; see
    /// [`phase_averaged_p_sd`] for the averaged curve.
    pub fn analytic(&self) -> Result<AnalyticReport<T>> {
        self.validate()?;
        let spoofer = self.spoofer_required()?.merged();
        let inputs = AnalyticInputs {
            geometry: &self.geometry,
            theta_u: self.theta_u,
            spoofer: &spoofer,
            sigma2: self.sigma2,
            snapshots: self.snapshots,
            alpha: self.alpha,
        };
        match self.threshold {
            ThresholdRule::Wald => authtest::analytic_report(&inputs),
            ThresholdRule::Fixed(tau) => authtest::analytic_report_calibrated(&inputs, tau),
        }
    }
}

fn stream(seed: u64, trial: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(TAGS).wrapping_add(tag));
    rng
}

/// One `CN(0, σ²)` draw from two uniforms (Box–Muller, no rejection).
fn complex_normal<T: Scalar>(rng: &mut ChaCha8Rng, scale: f64) -> Complex<T> {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    // 1 - u1 lies in (0, 1], so the log is finite
    let r = (-2.0 * (1.0 - u1).ln()).sqrt() * scale;
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    Complex::new(T::lit(r * c), T::lit(r * s))
}

fn noise_scale<T: Scalar>(sigma2: T) -> f64 {
    (sigma2.as_f64() / 2.0).sqrt()
}

/// `K` snapshots `x_k = mean + n_k` for one trial.
pub fn generate_snapshots<T: Scalar>(
    scenario: &Scenario<T>,
    hypothesis: Hypothesis,
    trial: u64,
) -> Result<SnapshotBatch<T>> {
    scenario.validate()?;
    let mean = scenario.mean(hypothesis, trial)?;
    let mut rng = stream(scenario.seed, trial, hypothesis.tag());
    let scale = noise_scale(scenario.sigma2);
    let snaps = (0..scenario.snapshots)
        .map(|_| mean.iter().map(|&m| m + complex_normal::<T>(&mut rng, scale)).collect())
        .collect();
    SnapshotBatch::new(&scenario.geometry, snaps)
}

/// `Σ_k n_k` for one trial: the noise of [`generate_snapshots`] summed over
/// snapshots.
fn noise_sum<T: Scalar>(
    seed: u64,
    hypothesis: Hypothesis,
    trial: u64,
    sigma2: T,
    snapshots: usize,
    acc: &mut [Complex<T>],
) {
    let mut rng = stream(seed, trial, hypothesis.tag());
    let scale = noise_scale(sigma2);
    acc.iter_mut().for_each(|a| *a = Complex::new(T::zero(), T::zero()));
    for _ in 0..snapshots {
        for a in acc.iter_mut() {
            *a += complex_normal::<T>(&mut rng, scale);
        }
    }
}

/// Binomial proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

impl EmpiricalEstimate {
    pub fn wilson(successes: u64, trials: u64, confidence: f64) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(invalid("trials", format!("{successes} successes out of {trials} trials")));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(invalid("confidence", "must lie in (0, 1)"));
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z = normal::upper_quantile((1.0 - confidence) / 2.0);
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Ok(Self {
            successes,
            trials,
            p_hat: p,
            ci_low: (center - half).clamp(0.0, p),
            ci_high: (center + half).clamp(p, 1.0),
            confidence,
        })
    }

    /// Estimate of the complementary event.
    pub fn complement(&self) -> Self {
        Self {
            successes: self.trials - self.successes,
            trials: self.trials,
            p_hat: 1.0 - self.p_hat,
            ci_low: 1.0 - self.ci_high,
            ci_high: 1.0 - self.ci_low,
            confidence: self.confidence,
        }
    }

    /// Same counts, interval recomputed at another confidence level.
    pub fn at_confidence(&self, confidence: f64) -> Result<Self> {
        Self::wilson(self.successes, self.trials, confidence)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Sample mean and unbiased variance of `θ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorMoments {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

impl EstimatorMoments {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
            };
        }
        let mean = pairwise_sum(samples) / n as f64;
        let variance = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            pairwise_sum(&dev) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            count: n as u64,
            mean,
            variance,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

/// Outcome of [`run_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub hypothesis: Hypothesis,
    pub tau: f64,
    /// Fraction of trials with `|θ̂ - θ_u| > τ`.
    pub exceed: EmpiricalEstimate,
    pub moments: EstimatorMoments,
    /// Trials whose estimate did not converge or fell in the end-fire guard.
    pub non_converged: u64,
}

impl TrialSummary {
    /// Empirical `P_FA` (H0 runs only).
    pub fn p_fa_hat(&self) -> Option<EmpiricalEstimate> {
        (self.hypothesis == Hypothesis::H0).then_some(self.exceed)
    }

    /// Empirical `P_D = 1 - P_FA` (H0 runs only).
    pub fn p_d_hat(&self) -> Option<EmpiricalEstimate> {
        self.p_fa_hat().map(|e| e.complement())
    }

    /// Empirical `P_SD` (H1 runs only).
    pub fn p_sd_hat(&self) -> Option<EmpiricalEstimate> {
        (self.hypothesis == Hypothesis::H1).then_some(self.exceed)
    }

    /// Empirical `P_MD = 1 - P_SD` (H1 runs only).
    pub fn p_md_hat(&self) -> Option<EmpiricalEstimate> {
        self.p_sd_hat().map(|e| e.complement())
    }
}

struct TrialOutcome {
    theta_hat: f64,
    statistic: f64,
    converged: bool,
}

/// Scenarios whose noise streams coincide: same array, noise level, snapshot
/// count, seed and trial count. They may differ in `θ_u`, spoofer, phase
/// model, threshold and `α`.
fn check_noise_compatible<T: Scalar>(scenarios: &[Scenario<T>]) -> Result<()> {
    let first = scenarios
        .first()
        .ok_or_else(|| invalid("scenarios", "need at least one scenario"))?;
    for sc in scenarios {
        sc.validate()?;
        if sc.geometry != first.geometry
            || sc.sigma2 != first.sigma2
            || sc.snapshots != first.snapshots
            || sc.seed != first.seed
            || sc.trials != first.trials
        {
            return Err(invalid(
                "scenarios",
                "shared-noise runs need equal geometry, sigma2, snapshots, seed and trials",
            ));
        }
    }
    Ok(())
}

/// Outcomes indexed `[scenario][trial]`.
fn simulate<T: Scalar>(scenarios: &[Scenario<T>], hypothesis: Hypothesis) -> Result<Vec<Vec<TrialOutcome>>> {
    check_noise_compatible(scenarios)?;
    if hypothesis == Hypothesis::H1 {
        for sc in scenarios {
            sc.spoofer_required()?;
        }
    }
    let first = &scenarios[0];
    let estimator = AoaEstimator::for_geometry(&first.geometry)?;
    let m = first.geometry.num_elements();
    let k = T::from_count(first.snapshots);
    let shared_means: Vec<Option<ComplexVector<T>>> = scenarios
        .iter()
        .map(|sc| {
            if hypothesis == Hypothesis::H1 && sc.phases_vary_per_trial() {
                Ok(None)
            } else {
                sc.mean(hypothesis, 0).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let per_trial: Vec<Vec<TrialOutcome>> = (0..first.trials)
        .into_par_iter()
        .map_init(
            || {
                let zero = Complex::new(T::zero(), T::zero());
                (estimator.clone(), vec![zero; m], vec![zero; m])
            },
            |(est, noise, xbar), trial| {
                noise_sum(first.seed, hypothesis, trial, first.sigma2, first.snapshots, noise);
                scenarios
                    .iter()
                    .zip(&shared_means)
                    .map(|(sc, shared)| {
                        let owned;
                        let mean = match shared {
                            Some(mean) => mean,
                            None => {
                                owned = sc.mean(hypothesis, trial)?;
                                &owned
                            }
                        };
                        for ((x, &mu), &n) in xbar.iter_mut().zip(mean).zip(noise.iter()) {
                            *x = mu * k + n;
                        }
                        let e = est.estimate_from_sum(xbar)?;
                        Ok(TrialOutcome {
                            theta_hat: e.theta_hat.as_f64(),
                            statistic: test_statistic(&e, sc.theta_u).as_f64(),
                            converged: e.converged,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            },
        )
        .collect::<Result<_>>()?;

    let mut by_scenario: Vec<Vec<TrialOutcome>> = scenarios
        .iter()
        .map(|_| Vec::with_capacity(per_trial.len()))
        .collect();
    for row in per_trial {
        for (dst, outcome) in by_scenario.iter_mut().zip(row) {
            dst.push(outcome);
        }
    }
    Ok(by_scenario)
}

fn summarize<T: Scalar>(
    scenario: &Scenario<T>,
    hypothesis: Hypothesis,
    outcomes: &[TrialOutcome],
) -> Result<TrialSummary> {
    let tau = scenario.tau()?.as_f64();
    let exceed = outcomes.iter().filter(|o| o.statistic > tau).count() as u64;
    let non_converged = outcomes.iter().filter(|o| !o.converged).count() as u64;
    let thetas: Vec<f64> = outcomes.iter().map(|o| o.theta_hat).collect();
    Ok(TrialSummary {
        hypothesis,
        tau,
        exceed: EmpiricalEstimate::wilson(exceed, scenario.trials, scenario.confidence)?,
        moments: EstimatorMoments::from_samples(&thetas),
        non_converged,
    })
}

/// Runs `scenario.trials` independent trials under `hypothesis` and counts
/// threshold exceedances. Results do not depend on the rayon pool size.
///
/// The estimator sees `x̄ = K·mean + Σ_k n_k`, the snapshot sum of
/// [`generate_snapshots`] for the same trial (up to rounding).
pub fn run_trials<T: Scalar>(scenario: &Scenario<T>, hypothesis: Hypothesis) -> Result<TrialSummary> {
    let outcomes = simulate(std::slice::from_ref(scenario), hypothesis)?;
    summarize(scenario, hypothesis, &outcomes[0])
}

/// [`run_trials`] for several scenarios that share their noise streams (see
/// the field list in the error message); each trial's noise is drawn once and
/// reused. Every summary equals what [`run_trials`] returns for that
/// scenario alone.
pub fn run_trials_shared<T: Scalar>(
    scenarios: &[Scenario<T>],
    hypothesis: Hypothesis,
) -> Result<Vec<TrialSummary>> {
    let outcomes = simulate(scenarios, hypothesis)?;
    scenarios
        .iter()
        .zip(&outcomes)
        .map(|(sc, o)| summarize(sc, hypothesis, o))
        .collect()
}

/// `(1 - α)`-quantile of `|θ̂ - θ_u|` under H0 by the order statistic of
/// 1-based rank `⌈(1 - α) n⌉`.
pub fn calibrate_threshold_mc<T: Scalar>(scenario_h0: &Scenario<T>, alpha: T) -> Result<T> {
    let a = alpha.as_f64();
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {a}")));
    }
    let required = (10.0 / a).ceil() as u64;
    if scenario_h0.trials < required {
        return Err(Error::InsufficientTrials {
            trials: scenario_h0.trials,
            required,
        });
    }
    let mut stats: Vec<f64> = simulate(std::slice::from_ref(scenario_h0), Hypothesis::H0)?
        .swap_remove(0)
        .into_iter()
        .map(|o| o.statistic)
        .collect();
    stats.sort_by(f64::total_cmp);
    let n = stats.len() as f64;
    // guard against (1 - α) n landing a rounding error above an integer
    let rank = ((1.0 - a) * n * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0) as usize;
    Ok(T::lit(stats[rank.min(stats.len()) - 1]))
}

/// Closed-form `P_SD` averaged over the spoofer's random phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAveraged {
    pub p_sd: f64,
    /// Monte Carlo standard error of the average over draws.
    pub std_error: f64,
    pub draws: usize,
    /// Average of `|c|` over the draws.
    pub mean_abs_gain: f64,
}

/// `E_φ[P_SD(φ)]`: for each of `draws` seeded phase vectors the spoofer
/// weights are rotated, `θ0` and `MCRB_K(θ0)` recomputed and the closed-form
/// `P_SD` evaluated at the scenario threshold. Without a phase spread (or with
/// `φ_max = 0`) this is the plain analytic value.
pub fn phase_averaged_p_sd<T: Scalar>(scenario: &Scenario<T>, draws: usize) -> Result<PhaseAveraged> {
    scenario.validate()?;
    let spoofer = scenario.spoofer_required()?;
    let tau = scenario.tau()?;
    let model = match scenario.phase_spread {
        Some(m) if m.phi_max > T::zero() => m,
        _ => {
            let report = scenario.analytic()?;
            return Ok(PhaseAveraged {
                p_sd: report.p_sd().as_f64(),
                std_error: 0.0,
                draws: 1,
                mean_abs_gain: 1.0,
            });
        }
    };
    if draws == 0 {
        return Err(invalid("draws", "need at least one phase draw"));
    }
    let draws = if model.redraw == PhaseRedraw::Fixed { 1 } else { draws };
    let geom = &scenario.geometry;
    let mut scanner = BeamScanner::new(geom, &SearchSettings::pseudo_true())?;
    let mut values = Vec::with_capacity(draws);
    let mut gains = Vec::with_capacity(draws);
    for d in 0..draws as u64 {
        let phases = match model.redraw {
            PhaseRedraw::Fixed => scenario.fixed_phases(spoofer).expect("fixed redraw"),
            PhaseRedraw::PerTrial => model.draw(&mut stream(scenario.seed, d, TAG_PHASES), spoofer.len()),
        };
        let rotated = spoofer.with_phase_rotation(&phases)?.merged();
        let s = spoofed_mean(geom, &rotated);
        let pt = bounds::pseudo_true_from_mean(geom, &rotated, &s, &mut scanner);
        let b = bounds::bounds_at(geom, &rotated, &pt, scenario.sigma2, scenario.snapshots)?;
        let delta = b.theta0() - scenario.theta_u;
        values.push(authtest::p_sd(tau, delta, b.mcrb_k).as_f64());
        gains.push(coherent_gain(&phases).norm().as_f64());
    }
    let m = EstimatorMoments::from_samples(&values);
    Ok(PhaseAveraged {
        p_sd: m.mean,
        std_error: if draws > 1 { m.std_error() } else { 0.0 },
        draws,
        mean_abs_gain: pairwise_sum(&gains) / draws as f64,
    })
}
