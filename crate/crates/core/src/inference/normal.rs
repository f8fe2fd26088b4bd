//! Standard normal distribution function.

use core::f64::consts::FRAC_1_SQRT_2;

/// `Phi(x)`, the standard normal CDF.
///
/// Evaluated through the complementary error function so that both tails
/// keep full relative precision: `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_quantiles() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959963985) - 0.975).abs() < 1e-8);
        let far = std_normal_cdf(-8.0);
        assert!(far < 1e-10);
        assert!((far - 6.220960574271784e-16).abs() < 1e-25);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev = 0.0;
        for i in 0..=16_000 {
            let x = -8.0 + i as f64 * 1e-3;
            let p = std_normal_cdf(x);
            assert!(p >= prev, "not monotone at {x}");
            prev = p;
        }
    }
}
