//! Special functions needed by the variational updates.

use alloc::format;

use crate::error::{Error, Result};

/// Arguments below this are shifted upward with the recurrence before the
/// asymptotic series is applied.
const ASYMPTOTIC_FLOOR: f64 = 10.0;

// B_2k / 2k for k = 1..=7
const SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// The digamma function ψ(x) = d/dx ln Γ(x) for positive arguments.
///
/// Uses ψ(x) = ψ(x + 1) − 1/x to move the argument above 10, then the
/// asymptotic expansion ln x − 1/(2x) − Σ B₂ₖ / (2k x²ᵏ).
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(psi(x))
}

#[inline]
pub(crate) fn psi(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < ASYMPTOTIC_FLOOR {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Horner evaluation of Σ c_k (1/x²)^k
    let mut tail = 0.0;
    for c in SERIES.iter().rev() {
        tail = (tail + c) * inv2;
    }
    shift + libm::log(x) - 0.5 / x - tail
}

/// ln Γ(x) for x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln Σ exp(v_i), computed with the maximum factored out.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn digamma_at_one_is_negative_euler_mascheroni() {
        let v = digamma(1.0).unwrap();
        assert!(rel(v, -0.577_215_664_901_532_9) < 1e-14, "{v}");
    }

    #[test]
    fn digamma_matches_high_precision_series() {
        // 50-term asymptotic series evaluated at 50 digits (tests/oracles/oracles.py)
        let cases = [
            (10.0, 2.251_752_589_066_721_107_6),
            (1e-3, -1_000.575_571_931_810_300_5),
            (0.5, -1.963_510_026_021_423_479_4),
            (123.456, 4.811_829_323_828_985_387_3),
        ];
        for (x, want) in cases {
            let got = digamma(x).unwrap();
            assert!(rel(got, want) < 1e-10, "digamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(digamma(-2.5), Err(Error::Domain(_))));
        assert!(matches!(digamma(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn digamma_agrees_with_statrs() {
        for i in 1..400 {
            let x = 0.001 + i as f64 * 0.37;
            let got = psi(x);
            let want = statrs::function::gamma::digamma(x);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    proptest::proptest! {
        #[test]
        fn digamma_recurrence(x in 1e-3f64..500.0) {
            let lhs = psi(x + 1.0) - psi(x);
            let rhs = 1.0 / x;
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }
}
