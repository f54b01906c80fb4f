//! Standard normal distribution: cdf, tail and quantile.
//!
//! The cdf and tail come from the complementary error function, each side
//! evaluated directly so that small tail masses keep full relative precision.
//! The quantile is Acklam's rational approximation (relative error about
//! 1.15e-9) followed by one Halley step against the erfc-based cdf.

use libm::erfc;

use crate::Scalar;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `Q(x) = 1 - Φ(x)`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `φ(x)`.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `Φ⁻¹(p)` for `p` in `(0, 1)`; returns ∓∞ at the end points and NaN outside.
pub fn quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        lower_quantile(p)
    } else {
        // 1 - p is exact for p in [0.5, 1]
        -lower_quantile(1.0 - p)
    }
}

/// `Q⁻¹(q)`: the `x` with upper-tail mass `q`. Preferred over
/// `quantile(1 - q)` for small `q`.
pub fn upper_quantile(q: f64) -> f64 {
    -quantile(q)
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Halley polish
    let e = cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    if u.is_finite() {
        x - u / (1.0 + 0.5 * x * u)
    } else {
        x
    }
}

pub fn cdf_t<T: Scalar>(x: T) -> T {
    T::lit(cdf(x.as_f64()))
}

pub fn sf_t<T: Scalar>(x: T) -> T {
    T::lit(sf(x.as_f64()))
}

pub fn quantile_t<T: Scalar>(p: T) -> T {
    T::lit(quantile(p.as_f64()))
}

pub fn upper_quantile_t<T: Scalar>(q: T) -> T {
    T::lit(upper_quantile(q.as_f64()))
}
