//! ML angle estimation under the single-source model.
//!
//! `θ̂ = argmin_θ Σ_k ‖x_k - a(θ)‖²`. Expanding the norm, only the cross term
//! depends on `θ`, so the estimator is `argmax_θ Re{a(θ)^H x̄}` with
//! `x̄ = Σ_k x_k`. Under spoofing the same estimator is the quasi-ML
//! estimator of the misspecified model.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::search::{BeamScanner, SearchSettings};
use crate::signal_model::{ComplexVector, UlaGeometry};
use crate::Scalar;

/// `K` snapshots of an `M`-element array.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch<T> {
    snapshots: Vec<ComplexVector<T>>,
    num_elements: usize,
}

impl<T: Scalar> SnapshotBatch<T> {
    pub fn new(geom: &UlaGeometry<T>, snapshots: Vec<ComplexVector<T>>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(invalid("snapshots", "a batch needs at least one snapshot"));
        }
        let expected = geom.num_elements();
        if let Some((index, x)) = snapshots.iter().enumerate().find(|(_, x)| x.len() != expected) {
            return Err(Error::SnapshotLength {
                index,
                len: x.len(),
                expected,
            });
        }
        Ok(Self {
            snapshots,
            num_elements: expected,
        })
    }

    pub fn snapshots(&self) -> &[ComplexVector<T>] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// `x̄ = Σ_k x_k`, the sufficient statistic of the estimator.
    pub fn sum(&self) -> ComplexVector<T> {
        let mut acc = vec![Complex::new(T::zero(), T::zero()); self.num_elements];
        for x in &self.snapshots {
            for (a, v) in acc.iter_mut().zip(x) {
                *a += *v;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaEstimate<T> {
    pub theta_hat: T,
    /// Maximized correlation `Re{a(θ̂)^H x̄}`.
    pub objective_value: T,
    /// False when the refinement did not converge or the peak lies in the
    /// guard band next to ±π/2; the estimate is returned unclamped.
    pub converged: bool,
}

/// Reusable estimator holding the search grid and FFT plan for one geometry.
#[derive(Clone)]
pub struct AoaEstimator<T: Scalar> {
    scanner: BeamScanner<T>,
}

impl<T: Scalar> AoaEstimator<T> {
    pub fn new(geom: &UlaGeometry<T>, settings: &SearchSettings<T>) -> Result<Self> {
        Ok(Self {
            scanner: BeamScanner::new(geom, settings)?,
        })
    }

    /// Default estimation grid for `geom`.
    pub fn for_geometry(geom: &UlaGeometry<T>) -> Result<Self> {
        Self::new(geom, &SearchSettings::estimation(geom))
    }

    pub fn estimate(&mut self, batch: &SnapshotBatch<T>) -> Result<AoaEstimate<T>> {
        self.estimate_from_sum(&batch.sum())
    }

    /// Estimate from the snapshot sum `x̄` directly.
    pub fn estimate_from_sum(&mut self, sum: &[Complex<T>]) -> Result<AoaEstimate<T>> {
        let expected = self.scanner.geometry().num_elements();
        if sum.len() != expected {
            return Err(Error::SnapshotLength {
                index: 0,
                len: sum.len(),
                expected,
            });
        }
        let peak = self.scanner.maximize(sum);
        Ok(AoaEstimate {
            theta_hat: peak.theta,
            objective_value: peak.value,
            converged: peak.converged,
        })
    }
}

/// One-shot estimate; prefer [`AoaEstimator`] in loops.
pub fn estimate_aoa<T: Scalar>(
    geom: &UlaGeometry<T>,
    batch: &SnapshotBatch<T>,
    settings: &SearchSettings<T>,
) -> Result<AoaEstimate<T>> {
    AoaEstimator::new(geom, settings)?.estimate(batch)
}

/// `T(X) = |θ̂ - θ_u|`.
pub fn test_statistic<T: Scalar>(estimate: &AoaEstimate<T>, theta_u: T) -> T {
    (estimate.theta_hat - theta_u).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{spoofed_mean, SpooferConfig};
    use std::f64::consts::PI;

    fn rad(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn noiseless_batches_recover_the_mean_angle() {
        let g = UlaGeometry::half_wavelength(16).unwrap();
        let a = g.steering(rad(10.0)).unwrap();
        let batch = SnapshotBatch::new(&g, vec![a; 5]).unwrap();
        let est = estimate_aoa(&g, &batch, &SearchSettings::estimation(&g)).unwrap();
        assert!(est.converged);
        assert!((est.theta_hat - rad(10.0)).abs() < 1e-8);

        let s = spoofed_mean(&g, &SpooferConfig::single(rad(14.0)).unwrap());
        let batch = SnapshotBatch::new(&g, vec![s; 3]).unwrap();
        let est = estimate_aoa(&g, &batch, &SearchSettings::pseudo_true()).unwrap();
        assert!((est.theta_hat - rad(14.0)).abs() < 1e-8);
    }

    #[test]
    fn batch_validation() {
        let g = UlaGeometry::<f64>::half_wavelength(4).unwrap();
        assert!(SnapshotBatch::new(&g, vec![]).is_err());
        let short = vec![Complex::new(1.0, 0.0); 3];
        assert!(matches!(
            SnapshotBatch::new(&g, vec![short]),
            Err(Error::SnapshotLength { expected: 4, len: 3, .. })
        ));
        let mut est = AoaEstimator::for_geometry(&g).unwrap();
        assert!(est.estimate_from_sum(&[Complex::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn sum_route_is_identical() {
        let g = UlaGeometry::half_wavelength(8).unwrap();
        let snaps: Vec<ComplexVector<f64>> = (0..4)
            .map(|k| {
                (0..8)
                    .map(|m| Complex::from_polar(1.0 + 0.1 * k as f64, -PI * m as f64 * 0.2 + 0.3 * k as f64))
                    .collect()
            })
            .collect();
        let batch = SnapshotBatch::new(&g, snaps).unwrap();
        let summed = SnapshotBatch::new(&g, vec![batch.sum()]).unwrap();
        let mut est = AoaEstimator::for_geometry(&g).unwrap();
        assert_eq!(est.estimate(&batch).unwrap(), est.estimate(&summed).unwrap());
    }

    #[test]
    fn test_statistic_is_absolute_difference() {
        let e = |deg: f64| AoaEstimate {
            theta_hat: rad(deg),
            objective_value: 0.0,
            converged: true,
        };
        assert_eq!(test_statistic(&e(10.0), rad(10.0)), 0.0);
        assert!((test_statistic(&e(12.0), rad(10.0)) - 0.034_906_6).abs() < 1e-7);
        assert!((test_statistic(&e(8.0), rad(10.0)) - test_statistic(&e(12.0), rad(10.0))).abs() < 1e-15);
    }
}
