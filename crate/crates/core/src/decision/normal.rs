//! Standard normal distribution function and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Result};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Lower p-quantile Φ^{-1}(p).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {p}"));
    }
    let mut x = acklam(p);
    // Halley steps against the CDF; the upper tail is polished through the
    // complement to keep relative accuracy.
    for _ in 0..2 {
        let err = if x > 0.0 { (1.0 - p) - normal_cdf(-x) } else { normal_cdf(x) - p };
        let u = err / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
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
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ from the Maclaurin series of erf, which converges for every x and is
    /// accurate to ~1e-15 for |x| ≤ 4.
    fn cdf_oracle(x: f64) -> f64 {
        let z = x / 2f64.sqrt();
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z * z / n as f64;
            sum += term / (2 * n + 1) as f64;
            if term.abs() < 1e-20 {
                break;
            }
        }
        0.5 + sum / PI.sqrt()
    }

    fn quantile_oracle(p: f64) -> f64 {
        let (mut lo, mut hi) = (-8.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_oracle(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        for i in -80..=80 {
            let x = i as f64 * 0.05;
            assert!((normal_cdf(x) - cdf_oracle(x)).abs() < 1e-13, "x={x}");
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() <= 1e-15, "x={x}");
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let q = normal_quantile(0.05).unwrap();
        assert!((q + 1.644_853_6).abs() < 1e-6);
        assert!((q - quantile_oracle(0.05)).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let q = normal_quantile(p).unwrap();
            assert!((normal_cdf(q) - p).abs() < 1e-9, "p={p}");
            assert!((q - quantile_oracle(p)).abs() < 1e-9, "p={p}");
        }
        for &p in &[1e-10, 1e-5, 0.01, 0.99, 1.0 - 1e-7] {
            let q = normal_quantile(p).unwrap();
            assert!((normal_cdf(q) - p).abs() < 1e-9 * p.max(1e-6));
        }
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }
}
