//! Parameter sweeps: one result row per swept value, analytic columns always
//! and empirical columns on request.
//!
//! Points whose noise parameters coincide (array, SNR, K) get the same derived
//! seed and their H1 trials are simulated together, so a sweep over the
//! angular offset draws each trial's noise once. Every row gets its own H0
//! run.

use std::collections::BTreeMap;
use std::time::Instant;

use aoa_pla_core::montecarlo::{
    phase_averaged_p_sd, run_trials, run_trials_shared, Hypothesis, Scenario, TrialSummary,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PointConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "M")]
    Elements,
    #[serde(rename = "K")]
    Snapshots,
    #[serde(rename = "L")]
    Antennas,
    #[serde(rename = "angular_offset_deg")]
    OffsetDeg,
    #[serde(rename = "phi_max_deg")]
    PhiMaxDeg,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Elements => "M",
            SweepAxis::Snapshots => "K",
            SweepAxis::Antennas => "L",
            SweepAxis::OffsetDeg => "angular_offset_deg",
            SweepAxis::PhiMaxDeg => "phi_max_deg",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepAxis::Elements | SweepAxis::Snapshots | SweepAxis::Antennas)
    }
}

/// Swept axis and its values, either listed or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl SweepSpec {
    pub fn list(axis: SweepAxis, values: Vec<f64>) -> Self {
        Self {
            axis,
            values: Some(values),
            start: None,
            stop: None,
            step: None,
        }
    }

    pub fn range(axis: SweepAxis, start: f64, stop: f64, step: f64) -> Self {
        Self {
            axis,
            values: None,
            start: Some(start),
            stop: Some(stop),
            step: Some(step),
        }
    }

    pub fn values(&self) -> CliResult<Vec<f64>> {
        let bad = |msg: &str| CliError::Config(format!("sweep: {msg}"));
        let values = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
                    return Err(bad("range needs finite start <= stop and step > 0"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + step * i as f64).collect()
            }
            _ => return Err(bad("give either `values` or all of `start`, `stop`, `step`")),
        };
        if values.is_empty() {
            return Err(bad("no sweep values"));
        }
        if self.axis.is_count() && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(bad(&format!("axis {} takes positive integers", self.axis.name())));
        }
        Ok(values)
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(&self, base: &PointConfig, value: f64) -> PointConfig {
        let mut p = base.clone();
        match self.axis {
            SweepAxis::SnrDb => p.snr_db = value,
            SweepAxis::Elements => p.elements = value as usize,
            SweepAxis::Snapshots => p.snapshots = value as usize,
            SweepAxis::Antennas => p.spoofer_mut().antennas = value as usize,
            SweepAxis::OffsetDeg => p.spoofer_mut().offset_deg = value,
            SweepAxis::PhiMaxDeg => p.spoofer_mut().phi_max_deg = value,
        }
        p
    }
}

/// One curve: a base point and the axis swept over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub base: PointConfig,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub empirical: bool,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    pub phase_draws: usize,
    pub timing: bool,
}

/// CSV record. Empirical columns stay empty for analytic-only runs; angles in
/// degrees, bounds in rad².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub series: String,
    pub axis: &'static str,
    pub value: f64,
    pub elements: usize,
    pub spacing: f64,
    pub snapshots: usize,
    pub antennas: Option<usize>,
    pub snr_db: f64,
    pub theta_u_deg: f64,
    pub offset_deg: Option<f64>,
    pub phi_max_deg: Option<f64>,
    pub alpha: f64,
    pub crb_k: f64,
    pub mcrb_k: Option<f64>,
    pub theta0_deg: Option<f64>,
    pub delta_deg: Option<f64>,
    pub tau_deg: f64,
    pub p_fa: f64,
    pub p_sd: Option<f64>,
    pub p_fa_hat: Option<f64>,
    pub p_fa_ci_low: Option<f64>,
    pub p_fa_ci_high: Option<f64>,
    pub p_sd_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: Option<u64>,
    pub runtime_ms: Option<f64>,
}

struct Point {
    series: usize,
    value: f64,
    config: PointConfig,
    scenario: Scenario<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Parameters that determine a point's noise streams.
type NoiseKey = (usize, u64, usize, u64);

fn noise_key(p: &PointConfig) -> NoiseKey {
    (p.elements, p.spacing.to_bits(), p.snapshots, p.snr_db.to_bits())
}

/// Seed of a point: the base seed mixed with its noise parameters.
pub fn point_seed(base: u64, p: &PointConfig) -> u64 {
    let (m, d, k, snr) = noise_key(p);
    [m as u64, d, k as u64, snr]
        .iter()
        .fold(splitmix(base), |acc, &x| splitmix(acc ^ x))
}

fn expand(series: &[Series], opts: &RunOptions) -> CliResult<Vec<Point>> {
    let mut points = Vec::new();
    for (i, s) in series.iter().enumerate() {
        for value in s.sweep.values()? {
            let config = s.sweep.apply(&s.base, value);
            let scenario = config
                .scenario(opts.trials, point_seed(opts.seed, &config), opts.confidence)
                .map_err(|e| match e {
                    CliError::Config(msg) => {
                        CliError::Config(format!("series {:?}, {} = {value}: {msg}", s.label, s.sweep.axis.name()))
                    }
                    other => other,
                })?;
            points.push(Point {
                series: i,
                value,
                config,
                scenario,
            });
        }
    }
    Ok(points)
}

fn analytic_row(series: &[Series], p: &Point, opts: &RunOptions) -> CliResult<ResultRow> {
    let start = Instant::now();
    let s = &series[p.series];
    let c = &p.config;
    let ctx = || format!("series {:?}, {} = {}", s.label, s.sweep.axis.name(), p.value);
    let sc = &p.scenario;
    let crb_k = sc.crb_k().map_err(|e| CliError::core(ctx(), e))?;
    let tau = sc.tau().map_err(|e| CliError::core(ctx(), e))?;
    let (mut mcrb_k, mut theta0_deg, mut delta_deg, mut p_sd) = (None, None, None, None);
    if sc.spoofer.is_some() {
        let random_phases = sc.phase_spread.is_some_and(|m| m.phi_max > 0.0);
        if random_phases {
            let avg = phase_averaged_p_sd(sc, opts.phase_draws).map_err(|e| CliError::core(ctx(), e))?;
            p_sd = Some(avg.p_sd);
        } else {
            let r = sc.analytic().map_err(|e| CliError::core(ctx(), e))?;
            mcrb_k = Some(r.mcrb_k);
            theta0_deg = Some(r.theta0.to_degrees());
            delta_deg = Some(r.delta.to_degrees());
            p_sd = Some(r.p_sd());
        }
    }
    Ok(ResultRow {
        series: s.label.clone(),
        axis: s.sweep.axis.name(),
        value: p.value,
        elements: c.elements,
        spacing: c.spacing,
        snapshots: c.snapshots,
        antennas: c.spoofer.as_ref().map(|sp| sp.antennas),
        snr_db: c.snr_db,
        theta_u_deg: c.theta_u_deg,
        offset_deg: c.spoofer.as_ref().map(|sp| sp.offset_deg),
        phi_max_deg: c.spoofer.as_ref().map(|sp| sp.phi_max_deg),
        alpha: c.alpha,
        crb_k,
        mcrb_k,
        theta0_deg,
        delta_deg,
        tau_deg: tau.to_degrees(),
        p_fa: c.alpha,
        p_sd,
        p_fa_hat: None,
        p_fa_ci_low: None,
        p_fa_ci_high: None,
        p_sd_hat: None,
        ci_low: None,
        ci_high: None,
        trials: None,
        runtime_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Seed of a point's H0 run: its own stream, so false-alarm estimates of
/// different rows are independent even where the H1 noise is shared.
fn h0_seed(p: &Point) -> u64 {
    splitmix(p.scenario.seed ^ splitmix(((p.series as u64) << 32) ^ p.value.to_bits()))
}

/// Empirical summaries per point: `(H0, H1)` plus the amortized run time.
fn empirical(points: &[Point]) -> CliResult<Vec<(TrialSummary, Option<TrialSummary>, f64)>> {
    let mut h1_groups: BTreeMap<NoiseKey, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if p.scenario.spoofer.is_some() {
            h1_groups.entry(noise_key(&p.config)).or_default().push(i);
        }
    }
    let mut h0: Vec<Option<TrialSummary>> = vec![None; points.len()];
    let mut h1: Vec<Option<TrialSummary>> = vec![None; points.len()];
    let mut elapsed = vec![0.0; points.len()];
    for (i, p) in points.iter().enumerate() {
        let start = Instant::now();
        let sc = p.scenario.clone().with_seed(h0_seed(p));
        h0[i] = Some(run_trials(&sc, Hypothesis::H0).map_err(|e| CliError::core("H0 trials", e))?);
        elapsed[i] += start.elapsed().as_secs_f64() * 1e3;
    }
    for members in h1_groups.values() {
        let start = Instant::now();
        let scenarios: Vec<Scenario<f64>> = members.iter().map(|&i| points[i].scenario.clone()).collect();
        let summaries = run_trials_shared(&scenarios, Hypothesis::H1).map_err(|e| CliError::core("H1 trials", e))?;
        let share = start.elapsed().as_secs_f64() * 1e3 / members.len() as f64;
        for (&i, s) in members.iter().zip(summaries) {
            h1[i] = Some(s);
            elapsed[i] += share;
        }
    }
    Ok(h0
        .into_iter()
        .zip(h1)
        .zip(elapsed)
        .map(|((a, b), t)| (a.expect("every point has an H0 run"), b, t))
        .collect())
}

/// Runs every series and returns rows in series order, then sweep order.
pub fn run(series: &[Series], opts: &RunOptions) -> CliResult<Vec<ResultRow>> {
    let points = expand(series, opts)?;
    let mut rows: Vec<ResultRow> = points
        .par_iter()
        .map(|p| analytic_row(series, p, opts))
        .collect::<CliResult<_>>()?;
    if opts.empirical {
        for (row, (h0, h1, ms)) in rows.iter_mut().zip(empirical(&points)?) {
            let fa = h0.exceed;
            row.p_fa_hat = Some(fa.p_hat);
            row.p_fa_ci_low = Some(fa.ci_low);
            row.p_fa_ci_high = Some(fa.ci_high);
            row.trials = Some(fa.trials);
            if let Some(h1) = h1 {
                row.p_sd_hat = Some(h1.exceed.p_hat);
                row.ci_low = Some(h1.exceed.ci_low);
                row.ci_high = Some(h1.exceed.ci_high);
            }
            if let Some(t) = row.runtime_ms.as_mut() {
                *t += ms;
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn range_values_are_inclusive() {
        let s = SweepSpec::range(SweepAxis::SnrDb, -15.0, 50.0, 1.0);
        let v = s.values().unwrap();
        assert_eq!(v.len(), 66);
        assert_eq!(v[65], 50.0);
        assert_eq!(SweepSpec::range(SweepAxis::OffsetDeg, 0.0, 8.0, 0.5).values().unwrap().len(), 17);
    }

    #[test]
    fn invalid_sweeps() {
        assert!(SweepSpec::list(SweepAxis::SnrDb, vec![]).values().is_err());
        assert!(SweepSpec::list(SweepAxis::Elements, vec![2.5]).values().is_err());
        assert!(SweepSpec::range(SweepAxis::SnrDb, 1.0, 0.0, 1.0).values().is_err());
        let mixed = SweepSpec {
            start: Some(0.0),
            ..SweepSpec::list(SweepAxis::SnrDb, vec![1.0])
        };
        assert!(mixed.values().is_err());
    }

    #[test]
    fn seeds_follow_noise_parameters() {
        let base = Config::default().point();
        let a = SweepSpec::list(SweepAxis::OffsetDeg, vec![0.0]).apply(&base, 1.0);
        let b = SweepSpec::list(SweepAxis::OffsetDeg, vec![0.0]).apply(&base, 2.0);
        assert_eq!(point_seed(7, &a), point_seed(7, &b));
        let c = SweepSpec::list(SweepAxis::SnrDb, vec![0.0]).apply(&base, 6.0);
        assert_ne!(point_seed(7, &a), point_seed(7, &c));
        assert_ne!(point_seed(7, &a), point_seed(8, &a));
    }

    #[test]
    fn analytic_rows_leave_empirical_columns_empty() {
        let mut base = Config::default().point();
        base.spoofer_mut().offset_deg = 0.25;
        let series = vec![Series {
            label: "x".into(),
            base,
            sweep: SweepSpec::list(SweepAxis::SnrDb, vec![-5.0, 0.0]),
        }];
        let opts = RunOptions {
            empirical: false,
            trials: 100,
            seed: 1,
            confidence: 0.99,
            phase_draws: 8,
            timing: false,
        };
        let rows = run(&series, &opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.p_sd_hat.is_none() && r.trials.is_none() && r.runtime_ms.is_none()));
        let (lo, hi) = (rows[0].p_sd.unwrap(), rows[1].p_sd.unwrap());
        assert!(hi > lo && hi < 1.0, "{lo} {hi}");
    }
}
