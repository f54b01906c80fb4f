//! Array response of a uniform linear array and the signal means seen by the
//! verifier under the legitimate and the spoofed hypotheses.
//!
//! Phase convention: element `m` (counted from 0) of the steering vector is
//! `exp(-j κ m sin θ)` with `κ = 2π d/λ`. All angles are radians.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::Scalar;

pub type ComplexVector<T> = Vec<Complex<T>>;

/// Below this distance from 1 the weighted geometric sums are summed
/// directly; the closed forms divide by `(1 - r)^2` and `(1 - r)^3`.
pub const NEAR_UNITY: f64 = 0.25;

static S1_FAULT: AtomicBool = AtomicBool::new(false);

/// Test hook for the validation harness: while enabled, the first weighted
/// geometric sum is perturbed by `1e-6`. Never enable outside self-tests.
pub fn inject_s1_fault(enabled: bool) {
    S1_FAULT.store(enabled, Ordering::SeqCst);
}

pub fn s1_fault_enabled() -> bool {
    S1_FAULT.load(Ordering::Relaxed)
}

pub(crate) fn check_angle<T: Scalar>(theta: T) -> Result<()> {
    if theta.is_finite() && theta.abs() < T::FRAC_PI_2() {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange {
            theta: theta.as_f64(),
        })
    }
}

/// Verifier array: `M` elements spaced `d = spacing_ratio · λ` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry<T> {
    num_elements: usize,
    spacing_ratio: T,
    wavenumber: T,
}

impl<T: Scalar> UlaGeometry<T> {
    pub fn new(num_elements: usize, spacing_ratio: T) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::UnsupportedGeometry { num_elements });
        }
        if !(spacing_ratio.is_finite() && spacing_ratio > T::zero()) {
            return Err(invalid(
                "spacing_ratio",
                format!("d/lambda must be positive and finite, got {spacing_ratio}"),
            ));
        }
        Ok(Self {
            num_elements,
            spacing_ratio,
            wavenumber: T::lit(2.0) * T::PI() * spacing_ratio,
        })
    }

    /// `d = λ/2`, i.e. `κ = π`.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, T::lit(0.5))
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing_ratio(&self) -> T {
        self.spacing_ratio
    }

    /// `κ = 2π d/λ`.
    pub fn wavenumber(&self) -> T {
        self.wavenumber
    }

    /// `Σ m²` for `m = 0..M-1`, i.e. `(M-1)M(2M-1)/6`.
    pub fn index_energy(&self) -> T {
        let m = T::from_count(self.num_elements);
        (m - T::one()) * m * (T::lit(2.0) * m - T::one()) / T::lit(6.0)
    }

    /// `a(θ)`.
    pub fn steering(&self, theta: T) -> Result<ComplexVector<T>> {
        check_angle(theta)?;
        Ok(self.steering_unchecked(theta))
    }

    pub(crate) fn steering_unchecked(&self, theta: T) -> ComplexVector<T> {
        let psi = self.wavenumber * theta.sin();
        (0..self.num_elements)
            .map(|m| Complex::from_polar(T::one(), -psi * T::from_count(m)))
            .collect()
    }

    /// `ȧ(θ) = -j κ cos θ Λ a(θ)` with `Λ = diag(0, …, M-1)`.
    pub fn steering_d1(&self, theta: T) -> Result<ComplexVector<T>> {
        let a = self.steering(theta)?;
        let scale = Complex::new(T::zero(), -self.wavenumber * theta.cos());
        Ok(a.into_iter()
            .enumerate()
            .map(|(m, am)| scale * am * T::from_count(m))
            .collect())
    }

    /// `ä(θ) = (j κ sin θ Λ - κ² cos² θ Λ²) a(θ)`.
    pub fn steering_d2(&self, theta: T) -> Result<ComplexVector<T>> {
        let a = self.steering(theta)?;
        let k = self.wavenumber;
        let (s, c) = theta.sin_cos();
        Ok(a.into_iter()
            .enumerate()
            .map(|(m, am)| {
                let m = T::from_count(m);
                am * Complex::new(-k * k * c * c * m * m, k * s * m)
            })
            .collect())
    }

    /// `Γ(θ) = ‖ȧ(θ)‖² = κ² cos² θ (M-1)M(2M-1)/6`.
    pub fn gamma(&self, theta: T) -> Result<T> {
        check_angle(theta)?;
        let kc = self.wavenumber * theta.cos();
        Ok(kc * kc * self.index_energy())
    }
}

/// Enrolled legitimate node. The channel gain is fixed to 1 (normalized
/// model with unit pilots), so only the angle is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegitimateSource<T> {
    aoa: T,
}

impl<T: Scalar> LegitimateSource<T> {
    pub fn new(aoa: T) -> Result<Self> {
        check_angle(aoa)?;
        Ok(Self { aoa })
    }

    pub fn aoa(&self) -> T {
        self.aoa
    }

    pub fn gain(&self) -> Complex<T> {
        Complex::new(T::one(), T::zero())
    }

    /// Mean snapshot under the legitimate hypothesis, `a(θ_u)`.
    pub fn mean(&self, geom: &UlaGeometry<T>) -> ComplexVector<T> {
        geom.steering_unchecked(self.aoa)
    }
}

/// `L`-antenna impersonator: per-antenna angles and complex precoding weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpooferConfig<T> {
    angles: Vec<T>,
    weights: Vec<Complex<T>>,
}

impl<T: Scalar> SpooferConfig<T> {
    /// Arbitrary weights.
    pub fn new(angles: Vec<T>, weights: Vec<Complex<T>>) -> Result<Self> {
        if angles.is_empty() || angles.len() != weights.len() {
            return Err(Error::SpooferShape {
                angles: angles.len(),
                weights: weights.len(),
            });
        }
        for &theta in &angles {
            check_angle(theta)?;
        }
        if weights.iter().any(|q| !(q.re.is_finite() && q.im.is_finite())) {
            return Err(invalid("weights", "precoding weights must be finite"));
        }
        Ok(Self { angles, weights })
    }

    /// Weights constrained to `Σ |q_ℓ| = 1` (within `1e-12`).
    pub fn normalized(angles: Vec<T>, weights: Vec<Complex<T>>) -> Result<Self> {
        let cfg = Self::new(angles, weights)?;
        let sum = cfg.weight_l1();
        if (sum - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::WeightNormalization { sum: sum.as_f64() });
        }
        Ok(cfg)
    }

    /// One antenna at `theta` with unit weight.
    pub fn single(theta: T) -> Result<Self> {
        Self::new(vec![theta], vec![Complex::new(T::one(), T::zero())])
    }

    /// `L` co-located antennas at `theta`, equal gains `1/L`.
    pub fn colinear_equal_gain(theta: T, antennas: usize) -> Result<Self> {
        let zeros = vec![T::zero(); antennas];
        Self::colinear_with_phases(theta, &zeros)
    }

    /// Co-located antennas at `theta` with `q_ℓ = e^{jφ_ℓ}/L`.
    pub fn colinear_with_phases(theta: T, phases: &[T]) -> Result<Self> {
        let l = phases.len();
        if l == 0 {
            return Err(Error::SpooferShape {
                angles: 0,
                weights: 0,
            });
        }
        let beta = T::one() / T::from_count(l);
        let weights = phases.iter().map(|&p| Complex::from_polar(beta, p)).collect();
        Self::new(vec![theta; l], weights)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    /// `Σ |q_ℓ|`.
    pub fn weight_l1(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, q| acc + q.norm())
    }

    /// Same angles, every weight multiplied by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            angles: self.angles.clone(),
            weights: self.weights.iter().map(|&q| q * factor).collect(),
        }
    }

    /// Equivalent configuration with co-located antennas combined into one
    /// (weights summed). First-appearance order of the angles is kept.
    pub fn merged(&self) -> Self {
        let mut angles: Vec<T> = Vec::new();
        let mut weights: Vec<Complex<T>> = Vec::new();
        for (&theta, &q) in self.angles.iter().zip(&self.weights) {
            match angles.iter().position(|&a| a == theta) {
                Some(i) => weights[i] += q,
                None => {
                    angles.push(theta);
                    weights.push(q);
                }
            }
        }
        Self { angles, weights }
    }

    /// Same angles, weight `ℓ` rotated by `e^{jφ_ℓ}`.
    pub fn with_phase_rotation(&self, phases: &[T]) -> Result<Self> {
        if phases.len() != self.len() {
            return Err(Error::SpooferShape {
                angles: self.len(),
                weights: phases.len(),
            });
        }
        Ok(Self {
            angles: self.angles.clone(),
            weights: self
                .weights
                .iter()
                .zip(phases)
                .map(|(&q, &p)| q * Complex::from_polar(T::one(), p))
                .collect(),
        })
    }
}

/// `S1(r) = Σ_{m=0}^{M-1} m r^m`.
pub fn weighted_geom_sum_1<T: Scalar>(r: Complex<T>, num_terms: usize) -> Result<Complex<T>> {
    if num_terms < 1 {
        return Err(invalid("M", "weighted geometric sums need M >= 1"));
    }
    let one = Complex::new(T::one(), T::zero());
    let m = T::from_count(num_terms);
    let value = if r == one {
        Complex::new(m * (m - T::one()) / T::lit(2.0), T::zero())
    } else if (one - r).norm() < T::lit(NEAR_UNITY) {
        direct_weighted_sum(r, num_terms, 1)
    } else {
        let rm1 = powu(r, num_terms - 1);
        let rm = rm1 * r;
        let d = one - r;
        r * (one - rm1 * m + rm * (m - T::one())) / (d * d)
    };
    if s1_fault_enabled() {
        return Ok(value + Complex::new(T::lit(1e-6), T::zero()));
    }
    Ok(value)
}

/// `S2(r) = Σ_{m=0}^{M-1} m² r^m`.
pub fn weighted_geom_sum_2<T: Scalar>(r: Complex<T>, num_terms: usize) -> Result<Complex<T>> {
    if num_terms < 1 {
        return Err(invalid("M", "weighted geometric sums need M >= 1"));
    }
    let one = Complex::new(T::one(), T::zero());
    let m = T::from_count(num_terms);
    if r == one {
        return Ok(Complex::new(
            (m - T::one()) * m * (T::lit(2.0) * m - T::one()) / T::lit(6.0),
            T::zero(),
        ));
    }
    if (one - r).norm() < T::lit(NEAR_UNITY) {
        return Ok(direct_weighted_sum(r, num_terms, 2));
    }
    let rm1 = powu(r, num_terms - 1);
    let rm = rm1 * r;
    let rm_next = rm * r;
    let d = one - r;
    let poly = one + r - rm1 * (m * m) + rm * (T::lit(2.0) * m * m - T::lit(2.0) * m - T::one())
        - rm_next * ((m - T::one()) * (m - T::one()));
    Ok(r * poly / (d * d * d))
}

fn direct_weighted_sum<T: Scalar>(r: Complex<T>, num_terms: usize, power: i32) -> Complex<T> {
    // powers taken individually: a running product drifts by ~m ulps
    (1..num_terms).fold(Complex::new(T::zero(), T::zero()), |acc, m| {
        acc + powu(r, m) * T::from_count(m).powi(power)
    })
}

/// `r^n`; unit-modulus inputs are raised through their phase so the result
/// stays on the circle. The product `n·φ` is carried as an unevaluated sum
/// `hi + lo` because its rounding error alone is amplified by `m²` in `S2`.
fn powu<T: Scalar>(r: Complex<T>, n: usize) -> Complex<T> {
    let (rho, phi) = r.to_polar();
    let n = T::from_count(n);
    let hi = phi * n;
    let lo = phi.mul_add(n, -hi);
    let head = Complex::from_polar(T::one(), hi);
    let tail = Complex::new(T::one() - lo * lo / T::lit(2.0), lo);
    if (rho - T::one()).abs() <= T::epsilon() * T::lit(4.0) {
        head * tail
    } else {
        head * tail * rho.powf(n)
    }
}

/// Spoofed mean `s = Σ_ℓ q_ℓ a(θ^A_ℓ)`.
pub fn spoofed_mean<T: Scalar>(geom: &UlaGeometry<T>, spoofer: &SpooferConfig<T>) -> ComplexVector<T> {
    let mut s = vec![Complex::new(T::zero(), T::zero()); geom.num_elements()];
    for (&theta, &q) in spoofer.angles().iter().zip(spoofer.weights()) {
        for (sm, am) in s.iter_mut().zip(geom.steering_unchecked(theta)) {
            *sm += q * am;
        }
    }
    s
}

/// Mismatch vector `Δ(θ) = s - a(θ)`.
pub fn mismatch_vector<T: Scalar>(
    geom: &UlaGeometry<T>,
    spoofer: &SpooferConfig<T>,
    theta: T,
) -> Result<ComplexVector<T>> {
    let a = geom.steering(theta)?;
    Ok(spoofed_mean(geom, spoofer)
        .into_iter()
        .zip(a)
        .map(|(s, a)| s - a)
        .collect())
}

/// `x^H y`.
pub fn inner<T: Scalar>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    x.iter()
        .zip(y)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

pub fn norm_sqr<T: Scalar>(x: &[Complex<T>]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr())
}
