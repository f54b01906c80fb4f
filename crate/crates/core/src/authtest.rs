//! The authentication test `|θ̂ - θ_u| > τ` and its error probabilities
//! under the Wald (Gaussian) approximation.
//!
//! Under the legitimate hypothesis `θ̂ ~ N(θ_u, CRB_K(θ_u))`; under spoofing
//! `θ̂ ~ N(θ0, MCRB_K(θ0))`, with `δ = θ0 - θ_u`.

use crate::bounds::{self, crb, BoundReport};
use crate::error::{invalid, Result};
use crate::normal::{cdf_t, pdf, sf_t, upper_quantile_t};
use crate::search::SearchSettings;
use crate::signal_model::{check_angle, SpooferConfig, UlaGeometry};
use crate::Scalar;

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("false-alarm level must lie in (0, 1), got {alpha}")))
    }
}

fn check_variance<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(invalid(name, format!("variance must be positive and finite, got {v}")))
    }
}

/// `τ(α) = sqrt(CRB_K) Φ⁻¹(1 - α/2)`.
pub fn threshold<T: Scalar>(alpha: T, crb_k: T) -> Result<T> {
    check_alpha(alpha)?;
    check_variance("crb_k", crb_k)?;
    Ok(crb_k.sqrt() * upper_quantile_t(alpha / T::lit(2.0)))
}

/// `P_FA(τ) ≈ 2Q(τ / sqrt(CRB_K))`.
pub fn p_fa<T: Scalar>(tau: T, crb_k: T) -> T {
    (T::lit(2.0) * sf_t(tau.max(T::zero()) / crb_k.sqrt())).min(T::one())
}

/// `P_MD ≈ Φ((τ-δ)/σ) - Φ((-τ-δ)/σ)` with `σ = sqrt(MCRB_K)`.
///
/// Evaluated through whichever normal tails are small so that deep
/// misdetection masses keep their relative precision.
pub fn p_md<T: Scalar>(tau: T, delta: T, mcrb_k: T) -> T {
    if tau.is_infinite() {
        return T::one();
    }
    let sigma = mcrb_k.sqrt();
    // the mass is even in δ
    let d = delta.abs();
    let lo = (-tau - d) / sigma;
    let hi = (tau - d) / sigma;
    let mass = if hi <= T::zero() {
        cdf_t(hi) - cdf_t(lo)
    } else if lo >= T::zero() {
        sf_t(lo) - sf_t(hi)
    } else {
        T::one() - sf_t(hi) - cdf_t(lo)
    };
    mass.max(T::zero()).min(T::one())
}

/// `P_SD = 1 - P_MD`.
pub fn p_sd<T: Scalar>(tau: T, delta: T, mcrb_k: T) -> T {
    T::one() - p_md(tau, delta, mcrb_k)
}

/// Limit of `P_MD(τ(α))` as `K → ∞` when `δ = 0`:
/// `2Φ(Φ⁻¹(1 - α/2) sqrt(CRB₁/MCRB₁)) - 1`.
pub fn asymptotic_pmd_limit<T: Scalar>(alpha: T, crb1: T, mcrb1: T) -> Result<T> {
    check_alpha(alpha)?;
    check_variance("crb1", crb1)?;
    check_variance("mcrb1", mcrb1)?;
    let z = upper_quantile_t(alpha / T::lit(2.0)) * (crb1 / mcrb1).sqrt();
    // 2Φ(z) - 1 = 1 - 2Q(z)
    Ok(T::one() - T::lit(2.0) * sf_t(z))
}

/// Estimator standard deviation minimizing `P_SD` when `|δ| > τ`:
/// `σ*² = 2|δ|τ / ln((|δ|+τ)/(|δ|-τ))`. `None` when `|δ| ≤ τ`, where `P_SD`
/// is strictly increasing in the estimator variance.
pub fn critical_sigma<T: Scalar>(delta: T, tau: T) -> Option<T> {
    let d = delta.abs();
    if !(tau > T::zero()) || d <= tau {
        return None;
    }
    let var = T::lit(2.0) * d * tau / ((d + tau) / (d - tau)).ln();
    Some(var.sqrt())
}

/// `∂P_SD/∂σ`, positive where detection improves with more estimator spread.
pub fn p_sd_sigma_slope(delta: f64, tau: f64, sigma: f64) -> f64 {
    let d = delta.abs();
    ((tau - d) * pdf((tau - d) / sigma) + (tau + d) * pdf((tau + d) / sigma)) / (sigma * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdSource {
    AnalyticWald,
    MonteCarloCalibrated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestDesign<T> {
    pub alpha: T,
    pub tau: T,
    pub crb_k: T,
    pub source: ThresholdSource,
}

impl<T: Scalar> TestDesign<T> {
    pub fn wald(alpha: T, crb_k: T) -> Result<Self> {
        Ok(Self {
            alpha,
            tau: threshold(alpha, crb_k)?,
            crb_k,
            source: ThresholdSource::AnalyticWald,
        })
    }

    pub fn calibrated(alpha: T, tau: T, crb_k: T) -> Result<Self> {
        check_alpha(alpha)?;
        check_variance("crb_k", crb_k)?;
        if !(tau > T::zero()) {
            return Err(invalid("tau", "calibrated threshold must be positive"));
        }
        Ok(Self {
            alpha,
            tau,
            crb_k,
            source: ThresholdSource::MonteCarloCalibrated,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorProbabilities<T> {
    pub p_fa: T,
    pub p_md: T,
    pub p_sd: T,
    pub p_d: T,
    /// `δ = θ0 - θ_u`.
    pub delta: T,
}

impl<T: Scalar> ErrorProbabilities<T> {
    pub fn new(p_fa: T, p_md: T, delta: T) -> Self {
        Self {
            p_fa,
            p_md,
            p_sd: T::one() - p_md,
            p_d: T::one() - p_fa,
            delta,
        }
    }
}

/// Closed-form summary of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticReport<T> {
    pub theta_u: T,
    /// `CRB_K(θ_u)`.
    pub crb_k: T,
    pub bounds: BoundReport<T>,
    pub theta0: T,
    pub delta: T,
    /// `MCRB_K(θ0)`.
    pub mcrb_k: T,
    pub design: TestDesign<T>,
    pub tau: T,
    pub probabilities: ErrorProbabilities<T>,
    /// `2Q(τ/sqrt(CRB_K))` when the threshold was calibrated numerically.
    pub wald_p_fa: Option<T>,
}

impl<T: Scalar> AnalyticReport<T> {
    pub fn p_fa(&self) -> T {
        self.probabilities.p_fa
    }

    pub fn p_md(&self) -> T {
        self.probabilities.p_md
    }

    pub fn p_sd(&self) -> T {
        self.probabilities.p_sd
    }
}

/// Scenario inputs for [`analytic_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticInputs<'a, T> {
    pub geometry: &'a UlaGeometry<T>,
    pub theta_u: T,
    pub spoofer: &'a SpooferConfig<T>,
    pub sigma2: T,
    pub snapshots: usize,
    pub alpha: T,
}

/// Wald-threshold report: CRB at `θ_u`, `θ0`, `δ`, `MCRB_K(θ0)`, `τ(α)` and
/// the error probabilities, with `P_FA = α` by construction.
pub fn analytic_report<T: Scalar>(inputs: &AnalyticInputs<'_, T>) -> Result<AnalyticReport<T>> {
    let crb_u = crb(inputs.geometry, inputs.theta_u, inputs.sigma2, inputs.snapshots)?;
    let design = TestDesign::wald(inputs.alpha, crb_u)?;
    report_with_design(inputs, design, &SearchSettings::pseudo_true())
}

/// Report for a threshold calibrated outside the Wald approximation.
pub fn analytic_report_calibrated<T: Scalar>(
    inputs: &AnalyticInputs<'_, T>,
    tau: T,
) -> Result<AnalyticReport<T>> {
    let crb_u = crb(inputs.geometry, inputs.theta_u, inputs.sigma2, inputs.snapshots)?;
    let design = TestDesign::calibrated(inputs.alpha, tau, crb_u)?;
    report_with_design(inputs, design, &SearchSettings::pseudo_true())
}

pub fn report_with_design<T: Scalar>(
    inputs: &AnalyticInputs<'_, T>,
    design: TestDesign<T>,
    search: &SearchSettings<T>,
) -> Result<AnalyticReport<T>> {
    check_angle(inputs.theta_u)?;
    let pt = bounds::pseudo_true(inputs.geometry, inputs.spoofer, search)?;
    let b = bounds::bounds_at(inputs.geometry, inputs.spoofer, &pt, inputs.sigma2, inputs.snapshots)?;
    let delta = b.theta0() - inputs.theta_u;
    let p_md = p_md(design.tau, delta, b.mcrb_k);
    let (p_fa_value, wald_p_fa) = match design.source {
        ThresholdSource::AnalyticWald => (design.alpha, None),
        ThresholdSource::MonteCarloCalibrated => (design.alpha, Some(p_fa(design.tau, design.crb_k))),
    };
    Ok(AnalyticReport {
        theta_u: inputs.theta_u,
        crb_k: design.crb_k,
        bounds: b,
        theta0: b.theta0(),
        delta,
        mcrb_k: b.mcrb_k,
        design,
        tau: design.tau,
        probabilities: ErrorProbabilities::new(p_fa_value, p_md, delta),
        wald_p_fa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;
    use crate::search::golden_section_max;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn threshold_examples() {
        assert_relative_eq!(threshold(0.05, 1e-4).unwrap(), 0.019_599_64, max_relative = 1e-6);
        assert_relative_eq!(threshold(1e-3, 1.0).unwrap(), 3.290_53, max_relative = 1e-5);
        assert_relative_eq!(
            threshold(1e-3, 4.0).unwrap(),
            2.0 * threshold(1e-3, 1.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(threshold(0.0, 1.0).is_err());
        assert!(threshold(1.0, 1.0).is_err());
        assert!(threshold(0.1, 0.0).is_err());
        assert!(threshold(0.01, 1.0).unwrap() > threshold(0.1, 1.0).unwrap());
    }

    #[test]
    fn p_fa_examples() {
        assert_eq!(p_fa(0.0, 1.0), 1.0);
        let c: f64 = 2.5e-6;
        assert!((p_fa(threshold(1e-3, c).unwrap(), c) - 1e-3).abs() < 1e-12);
        assert!((p_fa(1.959_964f64, 1.0) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn p_md_examples() {
        let c: f64 = 3e-5;
        let tau = threshold(0.01, c).unwrap();
        assert!((p_md(tau, 0.0, c) - 0.99).abs() < 1e-12);
        let m: f64 = 4e-6;
        let s = m.sqrt();
        let v = p_md(s, 10.0 * s, m);
        assert_relative_eq!(v, normal::cdf(-9.0) - normal::cdf(-11.0), max_relative = 1e-10);
        assert_relative_eq!(v, 1.128_588e-19, max_relative = 1e-5);
        assert_eq!(p_sd(s, 10.0 * s, m), 1.0);
        assert_eq!(p_md(f64::INFINITY, 0.3, m), 1.0);
        assert_eq!(p_md(tau, 0.2, c), p_md(tau, -0.2, c));
    }

    #[test]
    fn asymptotic_limit_examples() {
        assert!((asymptotic_pmd_limit(0.05f64, 2.0, 2.0).unwrap() - 0.95).abs() < 1e-12);
        let v = asymptotic_pmd_limit(0.05, 1.0, 4.0).unwrap();
        assert_relative_eq!(v, 2.0 * normal::cdf(0.979_982) - 1.0, max_relative = 1e-6);
        assert!((v - 0.6729).abs() < 1e-4);
        assert!(asymptotic_pmd_limit(0.05, 1.0, 1e30).unwrap() < 1e-10);
    }

    #[test]
    fn critical_sigma_examples() {
        let tau: f64 = 0.01;
        let s = critical_sigma(2.0 * tau, tau).unwrap();
        assert_relative_eq!(s * s, 4.0 * tau * tau / 3f64.ln(), max_relative = 1e-14);
        assert!((s * s / (tau * tau) - 3.641).abs() < 1e-3);
        assert_eq!(critical_sigma(tau, tau), None);
        assert_eq!(critical_sigma(0.5 * tau, tau), None);
    }

    #[test]
    fn critical_sigma_minimizes_detection() {
        for (delta, tau) in [(2.0, 1.0), (1.3, 1.0), (5.0, 0.7), (-3.0, 2.0)] {
            let star = critical_sigma(delta, tau).unwrap();
            let (s, _, ok) = golden_section_max(
                |sigma: f64| -p_sd(tau, delta, sigma * sigma),
                star / 20.0,
                star * 20.0,
                1e-12,
                500,
            );
            assert!(ok);
            assert_relative_eq!(s, star, max_relative = 1e-6);
            assert!(p_sd_sigma_slope(delta, tau, star).abs() < 1e-9);
        }
    }

    #[test]
    fn detection_rises_with_variance_inside_acceptance_region() {
        let (delta, tau) = (0.5, 1.0);
        let mut last = 0.0;
        for i in 5..200 {
            let sigma = 0.02 * i as f64;
            let v = p_sd(tau, delta, sigma * sigma);
            assert!(v > last, "sigma {sigma}");
            last = v;
        }
    }

    proptest! {
        #[test]
        fn inverse_pair(alpha in 1e-6f64..0.999, log_c in -14.0f64..2.0) {
            let c = 10f64.powf(log_c);
            let tau = threshold(alpha, c).unwrap();
            prop_assert!((p_fa(tau, c) - alpha).abs() <= 1e-10);
        }

        #[test]
        fn p_md_in_unit_interval(tau in 0.0f64..5.0, delta in -5.0f64..5.0, v in 1e-6f64..10.0) {
            let m = p_md(tau, delta, v);
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert_eq!(p_sd(tau, delta, v), 1.0 - m);
        }
    }
}
