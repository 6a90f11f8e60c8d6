//! Left-truncated normal distribution.

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this standardised truncation point the inverse CDF runs out of
/// precision and sampling switches to exponential rejection.
const TAIL_SWITCH: f64 = 30.0;

/// `ln P(Z ≥ a)` for a standard normal `Z`.
pub fn log_upper_tail(a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return 0.0;
    }
    if a < 25.0 {
        return (0.5 * erfc(a / std::f64::consts::SQRT_2)).ln();
    }
    // Asymptotic Mills ratio.
    let a2 = a * a;
    -0.5 * a2 - a.ln() - LN_SQRT_2PI + (1.0 - 1.0 / a2 + 3.0 / (a2 * a2) - 15.0 / (a2 * a2 * a2)).ln()
}

/// Log-density of `Normal(mean, sd²)` conditioned on `x ≥ lower`.
pub fn truncnorm_logpdf(x: f64, mean: f64, sd: f64, lower: f64) -> f64 {
    debug_assert!(sd > 0.0);
    if x < lower || x.is_nan() {
        return f64::NEG_INFINITY;
    }
    let z = (x - mean) / sd;
    let a = (lower - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI - log_upper_tail(a)
}

/// Draws from `Normal(mean, sd²)` conditioned on `x ≥ lower` by inverting the
/// upper-tail CDF over the admissible range.
pub fn truncnorm_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lower: f64) -> f64 {
    debug_assert!(sd > 0.0);
    let a = (lower - mean) / sd;
    let z = if a > TAIL_SWITCH {
        exponential_tail(rng, a)
    } else {
        // v in (0, 1]; Q(z) = v Q(a) with Q the upper tail.
        let v = 1.0 - rng.random::<f64>();
        let tail = if a == f64::NEG_INFINITY { 1.0 } else { 0.5 * erfc(a / std::f64::consts::SQRT_2) };
        let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * v * tail);
        if a.is_finite() { z.max(a) } else { z }
    };
    (mean + sd * z).max(lower)
}

/// Robert (1995) exponential rejection sampler for `Z | Z ≥ a`, large `a`.
fn exponential_tail<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let z = a - u.ln() / alpha;
        let rho = (-0.5 * (z - alpha) * (z - alpha)).exp();
        if rng.random::<f64>() <= rho {
            return z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_normal_density_at_zero() {
        let v = truncnorm_logpdf(0.0, 0.0, 1.0, 0.0);
        assert!((v - (2.0 / (2.0 * std::f64::consts::PI).sqrt()).ln()).abs() < 1e-14);
        assert!((v.exp() - 0.797_884_560_802_865_4).abs() < 1e-12);
        assert_eq!(truncnorm_logpdf(-0.1, 0.0, 1.0, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn no_truncation_is_plain_normal() {
        let x = 0.7;
        let plain = -0.5 * ((x - 0.2) / 1.5f64).powi(2) - 1.5f64.ln() - LN_SQRT_2PI;
        assert!((truncnorm_logpdf(x, 0.2, 1.5, f64::NEG_INFINITY) - plain).abs() < 1e-14);
    }

    #[test]
    fn tail_log_probability_is_continuous_at_switch() {
        let below = log_upper_tail(24.999_999);
        let above = log_upper_tail(25.0);
        assert!((below - above).abs() < 1e-4, "{below} {above}");
    }

    #[test]
    fn samples_respect_truncation_far_in_the_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = truncnorm_sample(&mut rng, 0.0, 1.0, 40.0);
            assert!((40.0..41.0).contains(&x));
            let y = truncnorm_sample(&mut rng, 5.0, 0.01, 0.0);
            assert!(y >= 0.0);
        }
    }

    #[test]
    fn half_normal_mean_by_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| truncnorm_sample(&mut rng, 0.0, 1.0, 0.0)).sum::<f64>() / n as f64;
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.003, "{mean}");
    }
}
