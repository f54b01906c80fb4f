use aoa_pla_core::montecarlo::{
    calibrate_threshold_mc, generate_snapshots, run_trials, sigma2_from_snr_db, Hypothesis, Scenario,
};
use aoa_pla_core::{deg, Geometry, Spoofer};

fn scenario(elements: usize, snapshots: usize, sigma2: f64) -> Scenario<f64> {
    Scenario::new(Geometry::half_wavelength(elements).unwrap(), deg(10.0), sigma2, snapshots)
}

#[test]
fn estimator_variance_attains_the_crb() {
    let sc = scenario(16, 20, 0.1).with_trials(2000).with_seed(11);
    let crb = sc.crb_k().unwrap();
    let h0 = run_trials(&sc, Hypothesis::H0).unwrap();
    assert_eq!(h0.non_converged, 0);
    let ratio = h0.moments.variance / crb;
    assert!((0.85..=1.15).contains(&ratio), "var / CRB = {ratio}");
    assert!((h0.moments.mean - deg(10.0)).abs() <= 4.0 * h0.moments.std_error());
}

#[test]
fn snapshot_noise_has_the_configured_variance() {
    let sc = scenario(4, 1000, 2.0).with_seed(3);
    let batch = generate_snapshots(&sc, Hypothesis::H0, 0).unwrap();
    let snaps = batch.snapshots();
    assert_eq!(snaps.len(), 1000);
    let k = snaps.len() as f64;
    let mut total = 0.0;
    for m in 0..4 {
        let mean = snaps.iter().map(|s| s[m]).sum::<aoa_pla_core::C64>() / k;
        total += snaps.iter().map(|s| (s[m] - mean).norm_sqr()).sum::<f64>() / (k - 1.0);
    }
    let var = total / 4.0;
    assert!((var / 2.0 - 1.0).abs() < 0.05, "per-element variance {var}");
}

#[test]
fn false_alarm_rate_matches_alpha_at_high_snr() {
    let sc = scenario(16, 20, sigma2_from_snr_db(20.0)).with_trials(100_000);
    let p_fa = run_trials(&sc, Hypothesis::H0).unwrap().p_fa_hat().unwrap();
    assert!(p_fa.contains(1e-3), "{p_fa:?}");
}

#[test]
fn wide_offset_is_always_detected() {
    let sc = scenario(16, 20, sigma2_from_snr_db(0.0))
        .with_trials(20_000)
        .with_spoofer(Spoofer::single(deg(14.0)).unwrap());
    let p_sd = run_trials(&sc, Hypothesis::H1).unwrap().p_sd_hat().unwrap();
    assert!(p_sd.p_hat >= 0.999, "{p_sd:?}");
}

#[test]
fn calibrated_threshold_is_close_to_the_asymptotic_one() {
    let sc = scenario(32, 50, sigma2_from_snr_db(20.0)).with_alpha(0.05).with_trials(20_000);
    let wald = sc.tau().unwrap();
    let mc = calibrate_threshold_mc(&sc, 0.05).unwrap();
    assert!((mc / wald - 1.0).abs() < 0.1, "mc {mc} vs {wald}");
}

#[test]
fn equal_gain_spoofing_is_invariant_in_the_antenna_count() {
    let base = scenario(16, 20, sigma2_from_snr_db(0.0)).with_trials(20_000);
    let runs: Vec<_> = [1, 4, 16, 64]
        .into_iter()
        .map(|l| {
            let sc = base
                .clone()
                .with_seed(100 + l as u64)
                .with_spoofer(Spoofer::colinear_equal_gain(deg(10.5), l).unwrap());
            let p = sc.analytic().unwrap().p_sd();
            let hat = run_trials(&sc, Hypothesis::H1).unwrap().p_sd_hat().unwrap();
            (p, hat)
        })
        .collect();
    let (p1, _) = runs[0];
    for (p, hat) in &runs {
        assert!((p - p1).abs() <= 1e-12 * p1, "{p} vs {p1}");
        for (_, other) in &runs {
            assert!(hat.overlaps(other), "{hat:?} vs {other:?}");
        }
    }
}

#[test]
fn trials_are_reproducible_across_pools() {
    let sc = scenario(8, 10, sigma2_from_snr_db(0.0))
        .with_trials(2000)
        .with_spoofer(Spoofer::colinear_equal_gain(deg(11.0), 3).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (run_trials(&sc, Hypothesis::H0).unwrap(), run_trials(&sc, Hypothesis::H1).unwrap()))
    };
    let reference = run(1);
    assert_eq!(reference, run(1));
    assert_eq!(reference, run(3));
    assert_eq!(reference, run(8));
}
