//! Global 1-D search for the beam peak `argmax_θ Re{a(θ)^H v}`.
//!
//! Both the pseudo-true angle (with `v = s`) and the ML angle estimate (with
//! `v = Σ_k x_k`) reduce to this problem because `‖a(θ)‖² = M` does not
//! depend on `θ`. The search scans a dense grid to find the global basin and
//! then refines the best few grid maxima by a bracketed Newton iteration in
//! spatial frequency `ψ = κ sin θ`, falling back to bisection whenever a
//! Newton step leaves the bracket or the curvature has the wrong sign.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::signal_model::UlaGeometry;
use crate::Scalar;

/// How the coarse grid is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    /// Uniform in `θ` over the guarded interval, evaluated point by point.
    Angle,
    /// Uniform in spatial frequency `κ sin θ`, evaluated with one FFT of
    /// length `grid_points`. Bins outside the visible region are dropped.
    Spatial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings<T> {
    pub grid_points: usize,
    pub spacing: GridSpacing,
    /// Number of grid maxima refined before picking the winner.
    pub candidates: usize,
    /// Refinement stops once the angle moves by less than this, radians.
    pub tolerance: T,
    /// Distance kept from ±π/2, radians.
    pub guard: T,
    pub max_iterations: usize,
}

impl<T: Scalar> SearchSettings<T> {
    /// 4096-point angle grid over (−89.9°, 89.9°), refined to 1e-10 rad.
    pub fn pseudo_true() -> Self {
        Self::angle_grid(4096)
    }

    pub fn angle_grid(grid_points: usize) -> Self {
        Self {
            grid_points,
            spacing: GridSpacing::Angle,
            candidates: 4,
            tolerance: T::lit(1e-10),
            guard: T::lit(0.1).to_radians(),
            max_iterations: 200,
        }
    }

    /// FFT grid with 16 bins per `2π/M` of spatial frequency (at least 64).
    pub fn estimation(geom: &UlaGeometry<T>) -> Self {
        Self {
            grid_points: (16 * geom.num_elements()).next_power_of_two().max(64),
            spacing: GridSpacing::Spatial,
            candidates: 3,
            ..Self::angle_grid(0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(invalid("grid_points", "search grid needs at least 3 points"));
        }
        if self.candidates == 0 {
            return Err(invalid("candidates", "must refine at least one grid maximum"));
        }
        if !(self.tolerance > T::zero()) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if !(self.guard > T::zero() && self.guard < T::FRAC_PI_2()) {
            return Err(invalid("guard", "must lie in (0, pi/2)"));
        }
        Ok(())
    }
}

/// Result of a beam search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPeak<T> {
    pub theta: T,
    /// `Re{a(θ)^H v}` at `theta`.
    pub value: T,
    /// False when refinement ran out of iterations or the peak sits on the
    /// guard band.
    pub converged: bool,
    /// Two separated peaks tied for the maximum; the smaller angle is kept.
    pub multimodal: bool,
}

/// `Re{a(θ)^H v} = Re Σ_m v_m e^{j m κ sin θ}` by Horner's rule.
pub fn beam_response<T: Scalar>(geom: &UlaGeometry<T>, v: &[Complex<T>], theta: T) -> T {
    let z = Complex::from_polar(T::one(), geom.wavenumber() * theta.sin());
    horner(v, z).re
}

/// `(f'(ψ), f''(ψ))` of `f(ψ) = Re Σ_m v_m e^{jmψ}`.
fn spatial_derivatives<T: Scalar>(v: &[Complex<T>], psi: T) -> (T, T) {
    let z = Complex::from_polar(T::one(), psi);
    let mut zm = Complex::new(T::one(), T::zero());
    let mut s1 = Complex::new(T::zero(), T::zero());
    let mut s2 = Complex::new(T::zero(), T::zero());
    for (m, &c) in v.iter().enumerate().skip(1) {
        zm *= z;
        let t = c * zm * T::from_count(m);
        s1 += t;
        s2 += t * T::from_count(m);
    }
    (-s1.im, -s2.re)
}

/// Maximizes `Re{a(θ)^H v}` inside `[lo, hi]` starting from `start`.
/// Returns `(θ, converged)`.
fn refine_peak<T: Scalar>(
    geom: &UlaGeometry<T>,
    v: &[Complex<T>],
    lo: T,
    hi: T,
    start: T,
    tolerance: T,
    max_iterations: usize,
) -> (T, bool) {
    let kappa = geom.wavenumber();
    let to_theta = |psi: T| (psi / kappa).max(-T::one()).min(T::one()).asin();
    let (mut a, mut b) = (kappa * lo.sin(), kappa * hi.sin());
    let mut psi = kappa * start.sin();
    let mut theta = start;
    for _ in 0..max_iterations {
        let (d1, d2) = spatial_derivatives(v, psi);
        if d1 > T::zero() {
            a = psi;
        } else {
            b = psi;
        }
        let newton = psi - d1 / d2;
        let next = if d2 < T::zero() && newton > a && newton < b {
            newton
        } else {
            (a + b) / T::lit(2.0)
        };
        let next_theta = to_theta(next);
        let moved = (next_theta - theta).abs();
        psi = next;
        theta = next_theta;
        if moved <= tolerance || b - a <= T::epsilon() * (T::one() + psi.abs()) {
            return (theta, true);
        }
    }
    (theta, false)
}

#[inline]
fn horner<T: Scalar>(v: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in v.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

enum Grid<T: Scalar> {
    Angle {
        phasors: Vec<Complex<T>>,
    },
    Spatial {
        fft: Arc<dyn Fft<T>>,
        bins: Vec<usize>,
        /// Phasors at the two guard angles, which close the grid beyond the
        /// outermost visible bins.
        ends: [Complex<T>; 2],
        buffer: Vec<Complex<T>>,
        scratch: Vec<Complex<T>>,
    },
}

/// Reusable search state for one geometry: the grid, and for FFT grids the
/// plan and work buffers. Cloning gives an independent worker copy.
pub struct BeamScanner<T: Scalar> {
    geom: UlaGeometry<T>,
    settings: SearchSettings<T>,
    thetas: Vec<T>,
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> Clone for BeamScanner<T> {
    fn clone(&self) -> Self {
        let grid = match &self.grid {
            Grid::Angle { phasors } => Grid::Angle {
                phasors: phasors.clone(),
            },
            Grid::Spatial {
                fft,
                bins,
                ends,
                buffer,
                scratch,
            } => Grid::Spatial {
                fft: Arc::clone(fft),
                bins: bins.clone(),
                ends: *ends,
                buffer: buffer.clone(),
                scratch: scratch.clone(),
            },
        };
        Self {
            geom: self.geom,
            settings: self.settings,
            thetas: self.thetas.clone(),
            grid,
            values: self.values.clone(),
        }
    }
}

impl<T: Scalar> BeamScanner<T> {
    pub fn new(geom: &UlaGeometry<T>, settings: &SearchSettings<T>) -> Result<Self> {
        settings.validate()?;
        let limit = T::FRAC_PI_2() - settings.guard;
        let kappa = geom.wavenumber();
        let (thetas, grid) = match settings.spacing {
            GridSpacing::Angle => {
                let n = settings.grid_points;
                let step = (limit + limit) / T::from_count(n - 1);
                let thetas: Vec<T> = (0..n).map(|i| -limit + step * T::from_count(i)).collect();
                let phasors = thetas
                    .iter()
                    .map(|&t| Complex::from_polar(T::one(), kappa * t.sin()))
                    .collect();
                (thetas, Grid::Angle { phasors })
            }
            GridSpacing::Spatial => {
                let n = settings.grid_points;
                if n < geom.num_elements() {
                    return Err(invalid("grid_points", "FFT grid shorter than the array"));
                }
                let two_pi = T::lit(2.0) * T::PI();
                let u_max = limit.sin();
                // bins in ascending wrapped frequency (−π, π]
                let order: Vec<usize> = (n / 2 + 1..n).chain(0..=n / 2).collect();
                let wraps = ((kappa + T::PI()) / two_pi).ceil().to_i64().unwrap_or(1);
                let mut thetas = vec![-limit];
                let mut bins = Vec::new();
                for k in -wraps..=wraps {
                    for &b in &order {
                        let mut psi = two_pi * T::from_count(b) / T::from_count(n);
                        if b > n / 2 {
                            psi -= two_pi;
                        }
                        let u = (psi + two_pi * T::lit(k as f64)) / kappa;
                        if u.abs() < u_max {
                            thetas.push(u.asin());
                            bins.push(b);
                        }
                    }
                }
                if bins.len() < 3 {
                    return Err(invalid("grid_points", "too few FFT bins fall in the visible region"));
                }
                thetas.push(limit);
                let ends = [-limit, limit].map(|t| Complex::from_polar(T::one(), kappa * t.sin()));
                let fft = FftPlanner::new().plan_fft_inverse(n);
                let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
                let buffer = vec![Complex::new(T::zero(), T::zero()); n];
                (
                    thetas,
                    Grid::Spatial {
                        fft,
                        bins,
                        ends,
                        buffer,
                        scratch,
                    },
                )
            }
        };
        let values = vec![T::zero(); thetas.len()];
        Ok(Self {
            geom: *geom,
            settings: *settings,
            thetas,
            grid,
            values,
        })
    }

    pub fn geometry(&self) -> &UlaGeometry<T> {
        &self.geom
    }

    pub fn settings(&self) -> &SearchSettings<T> {
        &self.settings
    }

    /// Grid angles, ascending.
    pub fn grid(&self) -> &[T] {
        &self.thetas
    }

    fn scan(&mut self, v: &[Complex<T>]) {
        match &mut self.grid {
            Grid::Angle { phasors } => {
                for (out, &z) in self.values.iter_mut().zip(phasors.iter()) {
                    *out = horner(v, z).re;
                }
            }
            Grid::Spatial {
                fft,
                bins,
                ends,
                buffer,
                scratch,
            } => {
                let zero = Complex::new(T::zero(), T::zero());
                buffer.fill(zero);
                buffer[..v.len()].copy_from_slice(v);
                fft.process_with_scratch(buffer, scratch);
                let last = self.values.len() - 1;
                self.values[0] = horner(v, ends[0]).re;
                self.values[last] = horner(v, ends[1]).re;
                for (out, &b) in self.values[1..last].iter_mut().zip(bins.iter()) {
                    *out = buffer[b].re;
                }
            }
        }
    }

    /// Global maximizer of `Re{a(θ)^H v}` over the guarded interval.
    ///
    /// Panics if `v.len()` differs from the array size.
    pub fn maximize(&mut self, v: &[Complex<T>]) -> BeamPeak<T> {
        assert_eq!(v.len(), self.geom.num_elements(), "vector length must equal M");
        self.scan(v);
        let vals = &self.values;
        let n = vals.len();
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&i| (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == n || vals[i] >= vals[i + 1]))
            .collect();
        // highest first; equal values keep ascending angle order
        peaks.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));
        peaks.truncate(self.settings.candidates);

        let mut refined: Vec<BeamPeak<T>> = peaks
            .iter()
            .map(|&i| {
                let lo = self.thetas[i.saturating_sub(1)];
                let hi = self.thetas[(i + 1).min(n - 1)];
                let (mut theta, mut converged) = refine_peak(
                    &self.geom,
                    v,
                    lo,
                    hi,
                    self.thetas[i],
                    self.settings.tolerance,
                    self.settings.max_iterations,
                );
                let mut value = beam_response(&self.geom, v, theta);
                if !(theta >= lo && theta <= hi) {
                    converged = false;
                }
                if vals[i] > value {
                    theta = self.thetas[i];
                    value = vals[i];
                }
                let edge = self.settings.tolerance * T::lit(2.0);
                let on_guard = (i == 0 && theta - self.thetas[0] <= edge)
                    || (i + 1 == n && self.thetas[n - 1] - theta <= edge);
                if on_guard {
                    converged = false;
                }
                BeamPeak {
                    theta,
                    value,
                    converged,
                    multimodal: false,
                }
            })
            .collect();

        refined.sort_by(|a, b| {
            b.value
                .partial_cmp(&a.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.theta.partial_cmp(&b.theta).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut best = refined[0];
        let tie = T::lit(1e-12) * (T::one() + best.value.abs());
        let separation = T::lit(1e-6);
        for other in &refined[1..] {
            if best.value - other.value <= tie && (other.theta - best.theta).abs() > separation {
                best.multimodal = true;
                if other.theta < best.theta {
                    best = BeamPeak {
                        multimodal: true,
                        ..*other
                    };
                }
            }
        }
        best
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max, converged)`.
pub fn golden_section_max<T: Scalar, F: Fn(T) -> T>(
    f: F,
    lo: T,
    hi: T,
    tolerance: T,
    max_iterations: usize,
) -> (T, T, bool) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > tolerance && iterations < max_iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let x = (a + b) / T::lit(2.0);
    let fx = f(x);
    let (x, fx) = [(c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best });
    (x, fx, b - a <= tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{spoofed_mean, SpooferConfig};
    use std::f64::consts::PI;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx, ok) = golden_section_max(|x: f64| -(x - 0.3).powi(2), -1.0, 1.0, 1e-10, 200);
        assert!(ok);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx <= 0.0 && fx > -1e-18);
        let (_, _, ok) = golden_section_max(|x: f64| -x * x, -1.0, 1.0, 1e-10, 5);
        assert!(!ok);
    }

    #[test]
    fn settings_validation() {
        let mut s = SearchSettings::<f64>::pseudo_true();
        assert!(s.validate().is_ok());
        s.grid_points = 2;
        assert!(s.validate().is_err());
        let mut s = SearchSettings::<f64>::pseudo_true();
        s.guard = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn both_grids_find_a_single_source() {
        let geom = UlaGeometry::half_wavelength(16).unwrap();
        let th = 23f64.to_radians();
        let v = geom.steering(th).unwrap();
        for settings in [SearchSettings::pseudo_true(), SearchSettings::estimation(&geom)] {
            let mut scanner = BeamScanner::new(&geom, &settings).unwrap();
            let peak = scanner.maximize(&v);
            assert!(peak.converged);
            assert!(!peak.multimodal);
            assert!((peak.theta - th).abs() < 1e-8, "{:?}", settings.spacing);
            assert!((peak.value - 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_grid_handles_wide_spacing() {
        // d = 0.7λ: κ > π, the FFT period wraps into the visible region
        let geom = UlaGeometry::new(8, 0.7).unwrap();
        let th = -40f64.to_radians();
        let v = geom.steering(th).unwrap();
        let mut scanner = BeamScanner::new(&geom, &SearchSettings::estimation(&geom)).unwrap();
        let peak = scanner.maximize(&v);
        assert!((peak.theta - th).abs() < 1e-8, "{}", peak.theta);
        assert!(scanner.grid().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spatial_grid_reaches_endfire() {
        // the outermost FFT bin of a 256-point grid sits near 82.8°
        let geom = UlaGeometry::half_wavelength(16).unwrap();
        let mut scanner = BeamScanner::new(&geom, &SearchSettings::estimation(&geom)).unwrap();
        for deg in [84.1, 86.7, -84.3, -89.5] {
            let th = f64::to_radians(deg);
            let peak = scanner.maximize(&geom.steering(th).unwrap());
            assert!(peak.converged, "{deg}");
            assert!((peak.theta - th).abs() < 1e-8, "{deg}: {}", peak.theta.to_degrees());
        }
        let guard = PI / 2.0 - 0.1f64.to_radians();
        assert_eq!(scanner.grid().first(), Some(&-guard));
        assert_eq!(scanner.grid().last(), Some(&guard));
    }

    #[test]
    fn grating_lobe_tie_is_flagged() {
        // d = λ: sin θ and sin θ ± 1 alias exactly
        let geom = UlaGeometry::new(6, 1.0).unwrap();
        let th = (0.5f64).asin();
        let v = geom.steering(th).unwrap();
        let mut scanner = BeamScanner::new(&geom, &SearchSettings::pseudo_true()).unwrap();
        let peak = scanner.maximize(&v);
        assert!(peak.multimodal);
        assert!((peak.value - 6.0).abs() < 1e-9);
        // sin θ = -0.5 is the smaller of the two tied angles
        assert!((peak.theta + th).abs() < 1e-7, "{}", peak.theta);
    }

    #[test]
    fn peak_at_guard_is_not_converged() {
        let geom = UlaGeometry::half_wavelength(8).unwrap();
        let v = geom.steering(89.95f64.to_radians()).unwrap();
        let mut scanner = BeamScanner::new(&geom, &SearchSettings::pseudo_true()).unwrap();
        let peak = scanner.maximize(&v);
        assert!(!peak.converged);
        assert!(peak.theta <= PI / 2.0 - 0.1f64.to_radians() + 1e-12);
    }

    #[test]
    fn cloned_scanners_agree() {
        let geom = UlaGeometry::half_wavelength(16).unwrap();
        let cfg = SpooferConfig::new(
            vec![0.1, 0.3],
            vec![Complex::new(0.6, 0.1), Complex::new(0.2, -0.4)],
        )
        .unwrap();
        let s = spoofed_mean(&geom, &cfg);
        let mut a = BeamScanner::new(&geom, &SearchSettings::estimation(&geom)).unwrap();
        let mut b = a.clone();
        assert_eq!(a.maximize(&s), b.maximize(&s));
    }
}
