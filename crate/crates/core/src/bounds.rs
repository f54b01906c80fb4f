//! Estimation limits: the CRB under the assumed model, the misspecified CRB
//! under spoofing and the pseudo-true angle the quasi-ML estimator converges
//! to.
//!
//! With `Δ(θ) = s - a(θ)` the two mismatch scalars are
//!
//! - `η(θ) = Re{ȧ(θ)^H Δ(θ)} = -κ cos θ · Im{Σ_ℓ q_ℓ S1(r_ℓ)}`
//! - `D(θ) = Γ(θ) - Re{ä(θ)^H Δ(θ)}
//!         = -κ sin θ · Im{Σ_ℓ q_ℓ S1(r_ℓ)} + κ² cos² θ · Re{Σ_ℓ q_ℓ S2(r_ℓ)}`
//!
//! where `r_ℓ = exp(jκ(sin θ - sin θ^A_ℓ))`. The sandwich MCRB over `K`
//! snapshots is `A⁻¹ B A⁻¹` with `A = (2K/σ²) D` and
//! `B = (2K/σ²) Γ + ((2K/σ²) η)²`.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::search::{beam_response, BeamScanner, SearchSettings};
use crate::signal_model::{
    check_angle, norm_sqr, spoofed_mean, weighted_geom_sum_1, weighted_geom_sum_2, SpooferConfig,
    UlaGeometry,
};
use crate::Scalar;

/// Relative size below which `D` is treated as zero.
pub const DEGENERATE_CURVATURE: f64 = 1e-12;

fn check_noise<T: Scalar>(sigma2: T, snapshots: usize) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > T::zero()) {
        return Err(invalid("sigma2", format!("noise variance must be positive, got {sigma2}")));
    }
    if snapshots == 0 {
        return Err(invalid("snapshots", "need at least one snapshot"));
    }
    Ok(())
}

/// Fisher information `J(θ) = (2K/σ²) Γ(θ)`.
pub fn fisher_information<T: Scalar>(
    geom: &UlaGeometry<T>,
    theta: T,
    sigma2: T,
    snapshots: usize,
) -> Result<T> {
    check_noise(sigma2, snapshots)?;
    Ok(T::lit(2.0) * T::from_count(snapshots) / sigma2 * geom.gamma(theta)?)
}

/// `CRB_K(θ) = 3σ² / (K κ² cos² θ (M-1)M(2M-1))`.
pub fn crb<T: Scalar>(geom: &UlaGeometry<T>, theta: T, sigma2: T, snapshots: usize) -> Result<T> {
    check_noise(sigma2, snapshots)?;
    check_angle(theta)?;
    let m = T::from_count(geom.num_elements());
    let kc = geom.wavenumber() * theta.cos();
    Ok(T::lit(3.0) * sigma2
        / (T::from_count(snapshots) * kc * kc * (m - T::one()) * m * (T::lit(2.0) * m - T::one())))
}

/// `η`, `D` and `Γ` at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchCurvature<T> {
    pub theta: T,
    pub eta: T,
    pub d_curv: T,
    pub gamma: T,
}

pub fn mismatch_curvature<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    theta: T,
) -> Result<MismatchCurvature<T>> {
    let gamma = geom.gamma(theta)?;
    let kappa = geom.wavenumber();
    let m = geom.num_elements();
    let sin_t = theta.sin();
    let mut sum1 = Complex::new(T::zero(), T::zero());
    let mut sum2 = Complex::new(T::zero(), T::zero());
    for (&theta_a, &q) in spoofer.angles().iter().zip(spoofer.weights()) {
        let r = Complex::from_polar(T::one(), kappa * (sin_t - theta_a.sin()));
        sum1 += q * weighted_geom_sum_1(r, m)?;
        sum2 += q * weighted_geom_sum_2(r, m)?;
    }
    let cos_t = theta.cos();
    Ok(MismatchCurvature {
        theta,
        eta: -kappa * cos_t * sum1.im,
        d_curv: -kappa * sin_t * sum1.im + kappa * kappa * cos_t * cos_t * sum2.re,
        gamma,
    })
}

/// `η(θ)`, half the negative slope of `‖s - a(θ)‖²`.
pub fn eta<T: Scalar>(geom: &UlaGeometry<T>, spoofer: &SpooferConfig<T>, theta: T) -> Result<T> {
    Ok(mismatch_curvature(geom, spoofer, theta)?.eta)
}

/// `D(θ)`, half the curvature of `‖s - a(θ)‖²`.
pub fn d_curvature<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    theta: T,
) -> Result<T> {
    Ok(mismatch_curvature(geom, spoofer, theta)?.d_curv)
}

/// Sandwich factors over `K` snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichTerms<T> {
    /// Expected observed information under the true model, `(2K/σ²) D`.
    pub a: T,
    /// Second moment of the score under the true model.
    pub b: T,
}

impl<T: Scalar> SandwichTerms<T> {
    /// `A⁻¹ B A⁻¹`.
    pub fn mcrb(&self) -> T {
        self.b / (self.a * self.a)
    }
}

pub fn sandwich_terms<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    theta: T,
    sigma2: T,
    snapshots: usize,
) -> Result<SandwichTerms<T>> {
    check_noise(sigma2, snapshots)?;
    let mc = mismatch_curvature(geom, spoofer, theta)?;
    let scale = T::lit(2.0) * T::from_count(snapshots) / sigma2;
    let score_mean = scale * mc.eta;
    Ok(SandwichTerms {
        a: scale * mc.d_curv,
        b: scale * mc.gamma + score_mean * score_mean,
    })
}

fn check_curvature<T: Scalar>(mc: &MismatchCurvature<T>) -> Result<()> {
    if !(mc.d_curv.abs() > T::lit(DEGENERATE_CURVATURE) * mc.gamma) {
        return Err(Error::DegenerateCurvature {
            d: mc.d_curv.as_f64(),
            gamma: mc.gamma.as_f64(),
        });
    }
    Ok(())
}

/// `MCRB_K(θ) = (σ²/2K) Γ/D² + (η/D)²` at an arbitrary angle.
pub fn mcrb_general<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    theta: T,
    sigma2: T,
    snapshots: usize,
) -> Result<T> {
    check_noise(sigma2, snapshots)?;
    let mc = mismatch_curvature(geom, spoofer, theta)?;
    check_curvature(&mc)?;
    let ratio = mc.eta / mc.d_curv;
    Ok(sigma2 / (T::lit(2.0) * T::from_count(snapshots)) * mc.gamma / (mc.d_curv * mc.d_curv)
        + ratio * ratio)
}

/// Minimizer of the KL divergence between the spoofed and assumed models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoTrueResult<T> {
    pub theta0: T,
    /// `‖s - a(θ0)‖²`.
    pub objective: T,
    pub eta_at_theta0: T,
    pub gamma_at_theta0: T,
    pub converged: bool,
    /// The objective has two separated global minima; the smaller angle was kept.
    pub multimodal: bool,
}

/// Minimum grid size accepted by [`pseudo_true`].
pub const MIN_PSEUDO_TRUE_GRID: usize = 512;

/// `θ0 = argmin_θ ‖s - a(θ)‖²`, found as `argmax_θ Re{a(θ)^H s}`.
pub fn pseudo_true<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    settings: &SearchSettings<T>,
) -> Result<PseudoTrueResult<T>> {
    if settings.grid_points < MIN_PSEUDO_TRUE_GRID {
        return Err(invalid(
            "grid_points",
            format!("pseudo-true search needs at least {MIN_PSEUDO_TRUE_GRID} grid points"),
        ));
    }
    let s = spoofed_mean(geom, spoofer);
    let mut scanner = BeamScanner::new(geom, settings)?;
    Ok(pseudo_true_from_mean(geom, spoofer, &s, &mut scanner))
}

pub(crate) fn pseudo_true_from_mean<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    s: &[Complex<T>],
    scanner: &mut BeamScanner<T>,
) -> PseudoTrueResult<T> {
    let peak = scanner.maximize(s);
    let m = T::from_count(geom.num_elements());
    // theta0 lies inside the guarded interval, so these cannot fail
    let mut theta0 = peak.theta;
    let mut mc = mismatch_curvature(geom, spoofer, theta0).expect("guarded angle");
    // Newton on the stationarity condition η = 0; golden section alone stalls
    // at roughly sqrt(eps) of the peak width
    for _ in 0..3 {
        if !(mc.d_curv > T::zero()) || mc.eta == T::zero() {
            break;
        }
        let next = theta0 + mc.eta / mc.d_curv;
        match mismatch_curvature(geom, spoofer, next) {
            Ok(trial) if trial.eta.abs() < mc.eta.abs() => {
                theta0 = next;
                mc = trial;
            }
            _ => break,
        }
    }
    let tol = T::lit(1e-8).max(T::epsilon().sqrt());
    let stationary = mc.eta.abs() <= tol * (T::one() + mc.gamma);
    let value = beam_response(geom, s, theta0);
    let objective = (norm_sqr(s) + m - T::lit(2.0) * value).max(T::zero());
    PseudoTrueResult {
        theta0,
        objective,
        eta_at_theta0: mc.eta,
        gamma_at_theta0: mc.gamma,
        converged: peak.converged && stationary,
        multimodal: peak.multimodal,
    }
}

/// CRB, MCRB and the sandwich factors evaluated at `θ0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    pub pseudo_true: PseudoTrueResult<T>,
    pub crb_k: T,
    pub mcrb_k: T,
    pub a_scalar: T,
    pub b_scalar: T,
    pub gamma: T,
    pub d_curv: T,
}

impl<T: Scalar> BoundReport<T> {
    pub fn theta0(&self) -> T {
        self.pseudo_true.theta0
    }
}

/// `MCRB_K(θ0) = (Γ(θ0)/D(θ0))² CRB_K(θ0)` with the default pseudo-true search.
pub fn mcrb_at_pseudo_true<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    sigma2: T,
    snapshots: usize,
) -> Result<BoundReport<T>> {
    let pt = pseudo_true(geom, spoofer, &SearchSettings::pseudo_true())?;
    bounds_at(geom, spoofer, &pt, sigma2, snapshots)
}

/// Bounds at an already computed pseudo-true angle.
pub fn bounds_at<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    pseudo: &PseudoTrueResult<T>,
    sigma2: T,
    snapshots: usize,
) -> Result<BoundReport<T>> {
    if !pseudo.converged {
        return Err(Error::NotConverged {
            theta: pseudo.theta0.as_f64(),
        });
    }
    let theta0 = pseudo.theta0;
    let mc = mismatch_curvature(geom, spoofer, theta0)?;
    check_curvature(&mc)?;
    let crb_k = crb(geom, theta0, sigma2, snapshots)?;
    let ratio = mc.gamma / mc.d_curv;
    let terms = sandwich_terms(geom, spoofer, theta0, sigma2, snapshots)?;
    Ok(BoundReport {
        pseudo_true: *pseudo,
        crb_k,
        mcrb_k: ratio * ratio * crb_k,
        a_scalar: terms.a,
        b_scalar: terms.b,
        gamma: mc.gamma,
        d_curv: mc.d_curv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{inner, mismatch_vector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn half(m: usize) -> UlaGeometry<f64> {
        UlaGeometry::half_wavelength(m).unwrap()
    }

    fn rad(d: f64) -> f64 {
        d.to_radians()
    }

    /// ‖s − a(θ)‖² evaluated directly.
    fn kl_objective(g: &UlaGeometry<f64>, cfg: &SpooferConfig<f64>, theta: f64) -> f64 {
        norm_sqr(&mismatch_vector(g, cfg, theta).unwrap())
    }

    fn eta_inner(g: &UlaGeometry<f64>, cfg: &SpooferConfig<f64>, theta: f64) -> f64 {
        inner(&g.steering_d1(theta).unwrap(), &mismatch_vector(g, cfg, theta).unwrap()).re
    }

    fn d_inner(g: &UlaGeometry<f64>, cfg: &SpooferConfig<f64>, theta: f64) -> f64 {
        g.gamma(theta).unwrap()
            - inner(&g.steering_d2(theta).unwrap(), &mismatch_vector(g, cfg, theta).unwrap()).re
    }

    #[test]
    fn crb_examples() {
        let c = crb(&half(2), 0.0, 1.0, 1).unwrap();
        assert_relative_eq!(c, 1.0 / (2.0 * PI * PI), max_relative = 1e-15);
        assert!((c - 0.050_660).abs() < 1e-6);
        assert_relative_eq!(c, 1.0 / fisher_information(&half(2), 0.0, 1.0, 1).unwrap());
        let g = half(16);
        let th = rad(10.0);
        assert_eq!(crb(&g, th, 1.0, 40).unwrap() * 2.0, crb(&g, th, 1.0, 20).unwrap());
        assert_relative_eq!(
            crb(&g, th, 1.0, 20).unwrap(),
            1.0 / (2.0 * 20.0 * g.gamma(th).unwrap()),
            max_relative = 1e-12
        );
        assert!(crb(&g, th, 0.0, 20).is_err());
        assert!(crb(&g, th, 1.0, 0).is_err());
    }

    #[test]
    fn eta_and_d_vanish_or_collapse_without_mismatch() {
        let g = half(8);
        let cfg = SpooferConfig::single(rad(20.0)).unwrap();
        let mc = mismatch_curvature(&g, &cfg, rad(20.0)).unwrap();
        assert!(mc.eta.abs() < 1e-12);
        assert_relative_eq!(mc.d_curv, mc.gamma, max_relative = 1e-12);
    }

    #[test]
    fn eta_and_d_match_inner_products_and_differences() {
        let g = half(8);
        let cfg = SpooferConfig::single(rad(20.0)).unwrap();
        let th = rad(10.0);
        let mc = mismatch_curvature(&g, &cfg, th).unwrap();
        assert!((mc.eta - eta_inner(&g, &cfg, th)).abs() < 1e-9);
        assert_relative_eq!(mc.d_curv, d_inner(&g, &cfg, th), max_relative = 1e-8);

        let h = 1e-6;
        let fd1 = (kl_objective(&g, &cfg, th + h) - kl_objective(&g, &cfg, th - h)) / (2.0 * h);
        assert_relative_eq!(mc.eta, -0.5 * fd1, max_relative = 1e-5);
        let h = 1e-4;
        let fd2 = (kl_objective(&g, &cfg, th + h) - 2.0 * kl_objective(&g, &cfg, th)
            + kl_objective(&g, &cfg, th - h))
            / (h * h);
        assert_relative_eq!(mc.d_curv, 0.5 * fd2, max_relative = 1e-4);
    }

    #[test]
    fn pseudo_true_single_antenna() {
        let g = half(16);
        for q in [1.0, 0.5] {
            let cfg = SpooferConfig::new(vec![rad(20.0)], vec![C::new(q, 0.0)]).unwrap();
            let pt = pseudo_true(&g, &cfg, &SearchSettings::pseudo_true()).unwrap();
            assert!(pt.converged);
            assert!((pt.theta0 - rad(20.0)).abs() < 1e-8, "q={q}: {}", pt.theta0);
        }
    }

    #[test]
    fn pseudo_true_rejects_coarse_grid() {
        let cfg = SpooferConfig::single(0.1).unwrap();
        assert!(pseudo_true(&half(8), &cfg, &SearchSettings::angle_grid(100)).is_err());
    }

    #[test]
    fn mcrb_general_collapses_to_crb() {
        let g = half(8);
        let th = rad(20.0);
        let cfg = SpooferConfig::single(th).unwrap();
        assert_relative_eq!(
            mcrb_general(&g, &cfg, th, 1.0, 10).unwrap(),
            crb(&g, th, 1.0, 10).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn mcrb_general_matches_sandwich_assembly() {
        let g = half(8);
        let cfg = SpooferConfig::single(rad(20.0)).unwrap();
        let th = rad(15.0);
        let sigma2 = 1.0;
        let k = 10;
        // assemble A and B from the inner-product forms
        let scale = 2.0 * k as f64 / sigma2;
        let a = scale * d_inner(&g, &cfg, th);
        let b = scale * g.gamma(th).unwrap() + (scale * eta_inner(&g, &cfg, th)).powi(2);
        assert_relative_eq!(
            mcrb_general(&g, &cfg, th, sigma2, k).unwrap(),
            b / (a * a),
            max_relative = 1e-10
        );
    }

    #[test]
    fn degenerate_curvature_is_an_error() {
        let g = half(8);
        let zero = SpooferConfig::new(vec![0.2], vec![C::new(0.0, 0.0)]).unwrap();
        assert!(matches!(
            mcrb_general(&g, &zero, 0.1, 1.0, 1),
            Err(Error::DegenerateCurvature { .. })
        ));
    }

    #[test]
    fn mcrb_at_pseudo_true_examples() {
        let g = half(8);
        let th = rad(20.0);
        let r = mcrb_at_pseudo_true(&g, &SpooferConfig::single(th).unwrap(), 1.0, 4).unwrap();
        assert_relative_eq!(r.mcrb_k, crb(&g, th, 1.0, 4).unwrap(), max_relative = 1e-10);

        let half_gain = SpooferConfig::new(vec![th], vec![C::new(0.5, 0.0)]).unwrap();
        let r = mcrb_at_pseudo_true(&g, &half_gain, 1.0, 4).unwrap();
        assert!((r.theta0() - th).abs() < 1e-8);
        let d = d_curvature(&g, &half_gain, r.theta0()).unwrap();
        let ratio = (g.gamma(r.theta0()).unwrap() / d).powi(2);
        assert_relative_eq!(r.mcrb_k / r.crb_k, ratio, max_relative = 1e-10);
        // D = Γ/2 here: the MCRB is four times the CRB
        assert_relative_eq!(r.mcrb_k / r.crb_k, 4.0, max_relative = 1e-6);

        let cfg = SpooferConfig::new(
            vec![rad(10.25), rad(10.25)],
            vec![C::new(0.5, 0.0), C::from_polar(0.5, rad(10.0))],
        )
        .unwrap();
        let sigma2 = 10f64.powf(-0.5);
        let r = mcrb_at_pseudo_true(&g, &cfg, sigma2, 2).unwrap();
        let scale = 2.0 * 2.0 / sigma2;
        let a = scale * d_inner(&g, &cfg, r.theta0());
        let b = scale * g.gamma(r.theta0()).unwrap() + (scale * eta_inner(&g, &cfg, r.theta0())).powi(2);
        assert_relative_eq!(r.mcrb_k, b / (a * a), max_relative = 1e-10);
        assert_relative_eq!(r.mcrb_k, r.b_scalar / r.a_scalar.powi(2), max_relative = 1e-10);
    }

    fn config_strategy() -> impl Strategy<Value = SpooferConfig<f64>> {
        prop::collection::vec((-1.2f64..1.2, 0.05f64..1.0, -PI..PI), 1..5).prop_map(|terms| {
            let angles = terms.iter().map(|t| t.0).collect();
            let weights = terms.iter().map(|t| C::from_polar(t.1, t.2)).collect();
            SpooferConfig::new(angles, weights).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_forms_match_inner_products(cfg in config_strategy(), theta in -1.3f64..1.3, m in 2usize..40) {
            let g = half(m);
            let mc = mismatch_curvature(&g, &cfg, theta).unwrap();
            let eta_ref = eta_inner(&g, &cfg, theta);
            let d_ref = d_inner(&g, &cfg, theta);
            prop_assert!((mc.eta - eta_ref).abs() <= 1e-8 * (1.0 + eta_ref.abs()));
            prop_assert!((mc.d_curv - d_ref).abs() <= 1e-8 * (1.0 + d_ref.abs()));
        }

        #[test]
        fn sandwich_identity(cfg in config_strategy(), theta in -1.3f64..1.3, k in 1usize..100, snr_db in -10.0f64..30.0) {
            let g = half(8);
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            if let Ok(m) = mcrb_general(&g, &cfg, theta, sigma2, k) {
                let t = sandwich_terms(&g, &cfg, theta, sigma2, k).unwrap();
                prop_assert!((m - t.mcrb()).abs() <= 1e-10 * m);
            }
        }

        #[test]
        fn stationarity_and_scale_invariance(cfg in config_strategy(), beta in 0.1f64..10.0) {
            let g = half(16);
            let settings = SearchSettings::pseudo_true();
            let pt = pseudo_true(&g, &cfg, &settings).unwrap();
            if pt.converged && !pt.multimodal {
                prop_assert!(pt.eta_at_theta0.abs() <= 1e-8 * (1.0 + pt.gamma_at_theta0));
                let scaled = pseudo_true(&g, &cfg.scaled(C::new(beta, 0.0)), &settings).unwrap();
                prop_assert!((scaled.theta0 - pt.theta0).abs() <= 1e-8);
            }
        }
    }
}
