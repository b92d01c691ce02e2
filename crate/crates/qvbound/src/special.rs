//! Scalar special functions shared across the crate: the complementary error
//! function and its scaled variant, the standard normal CDF/quantile, and
//! log-space factorials.
//!
//! `erfc` comes from libm (relative error around 2 ulp all the way to its
//! underflow near x = 26.5). `erfcx(x) = exp(x^2) erfc(x)` is assembled from
//! that below 2.5 and from the Laplace continued fraction above, so tail
//! quantities like the Mills ratio never overflow.

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.5066282746310002;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function, exp(x^2)*erfc(x), for x >= 0.
///
/// Below the switch point the direct product is safe (exp(x^2) <= e^6.25);
/// above it the Laplace continued fraction is evaluated with the modified
/// Lentz scheme. Accurate to ~1e-15 relative on [0, inf).
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0, "erfcx is only needed (and defined here) for x >= 0");
    if x < 2.5 {
        return (x * x).exp() * libm::erfc(x);
    }
    // erfcx(x) = 1/(x sqrt(pi)) * 1/(1 + a1/(1 + a2/(1 + ...))), a_k = k/(2x^2)
    let inv_2x2 = 0.5 / (x * x);
    let tiny = 1e-300;
    let mut f = 1.0f64;
    let mut c = f;
    let mut d = 0.0f64;
    for k in 1..=200u32 {
        let a = k as f64 * inv_2x2;
        d = 1.0 + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    1.0 / (x * std::f64::consts::PI.sqrt() * f)
}

/// Standard normal CDF via erfc (no 1 - Phi cancellation in either tail).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail P(N > x).
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Scaled upper tail exp(x^2/2) * P(N > x), finite for all x >= 0.
pub fn norm_sf_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    0.5 * erfcx(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile, Acklam's rational approximation.
///
/// Absolute error below 1.2e-9 over (0,1); monotone in p. This is the
/// inverse-CDF used by the samplers, where ~1e-9 is the accuracy contract.
pub fn norm_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

/// Full-precision normal quantile: Acklam seed plus Newton steps on the
/// erfc-based CDF. Used by tests and anywhere 1e-9 is not enough.
pub fn norm_quantile_precise(p: f64) -> f64 {
    let mut x = norm_quantile(p);
    for _ in 0..3 {
        let err = norm_cdf(x) - p;
        let step = err / norm_pdf(x);
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// ln(n!) by direct summation; exact enough (<= 1e-14 relative) for the
/// factorial ranges used here (n <= ~60).
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// n! as f64 (exact up to n = 22, then correctly rounded products).
pub fn factorial(n: u64) -> f64 {
    (2..=n).map(|i| i as f64).product()
}

/// Binomial coefficient as f64, multiplicative form.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Dvoretzky-Kiefer-Wolfowitz uniform confidence radius:
/// sqrt(ln(2/alpha) / (2 m)) for a sample of size m.
pub fn dkw_radius(m: usize, confidence: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("DKW radius needs a non-empty sample"));
    }
    if confidence <= 0.0 || confidence >= 1.0 {
        return Err(Error::invalid(format!(
            "confidence must lie in (0,1), got {confidence}"
        )));
    }
    let alpha = 1.0 - confidence;
    Ok(((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_matches_direct_product_on_overlap() {
        // The CF branch must agree with exp(x^2)erfc(x) wherever the direct
        // product is representable.
        for i in 0..200 {
            let x = 2.5 + 23.0 * (i as f64) / 199.0;
            let direct = (x * x).exp() * libm::erfc(x);
            let scaled = erfcx(x);
            assert!(
                ((scaled - direct) / direct).abs() < 1e-13,
                "x={x}: cf={scaled} direct={direct}"
            );
        }
    }

    #[test]
    fn erfcx_far_tail_is_finite_and_asymptotic() {
        let x = 500.0;
        let v = erfcx(x);
        let asym = 1.0 / (x * std::f64::consts::PI.sqrt());
        assert!(v.is_finite());
        assert!(((v - asym) / asym).abs() < 1e-5);
    }

    #[test]
    fn norm_cdf_anchors() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        // Phi(1.959963984540054) = 0.975
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        // deep lower tail stays relatively accurate
        let p8 = norm_cdf(-8.0);
        assert!(((p8 - 6.22096057427178e-16) / p8).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf_to_contract_accuracy() {
        // Acklam's approximation: relative error below ~1.2e-9 on the value;
        // |Phi(x)-p| / phi(x) approximates the absolute error |x - true|
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = norm_quantile(p);
            let err = (norm_cdf(x) - p).abs() / norm_pdf(x);
            assert!(err < 1.5e-9 * x.abs().max(1.0), "p={p}: quantile error {err}");
        }
        // extreme tails reachable from 53-bit uniforms
        for &p in &[1e-12, 1e-9, 5e-17, 1.0 - 1e-12] {
            let x = norm_quantile(p);
            let err = (norm_cdf(x) - p).abs() / norm_pdf(x);
            assert!(err < 2e-9 * x.abs(), "p={p}: quantile error {err}");
        }
    }

    #[test]
    fn precise_quantile_hits_machine_precision() {
        for &p in &[0.5, 0.9, 0.025, 1e-6, 1e-12] {
            let x = norm_quantile_precise(p);
            let err = (norm_cdf(x) - p).abs() / norm_pdf(x);
            assert!(err < 1e-13, "p={p}: err {err}");
        }
        assert!(norm_quantile_precise(0.5).abs() < 1e-15);
    }

    #[test]
    fn factorial_helpers() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert!((ln_factorial(20) - factorial(20).ln()).abs() < 1e-12);
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn dkw_radius_formula_and_scaling() {
        let r1 = dkw_radius(100_000, 0.99).unwrap();
        assert!((r1 - ((2.0f64 / 0.01).ln() / 200_000.0).sqrt()).abs() < 1e-16);
        let r2 = dkw_radius(200_000, 0.99).unwrap();
        assert!(((r1 / r2) - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(dkw_radius(0, 0.99).is_err());
    }
}
