//! Least-squares fits of `err(ε) = C·exp(−c/ε^k)` in log space.

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    /// Decay constant `c`.
    pub rate_c: f64,
    /// `ln C`.
    pub log_prefactor: f64,
    pub r_squared: f64,
    /// `k` in `exp(−c/ε^k)`, either 1 or 2.
    pub model_exponent: u32,
}

impl RateFit {
    pub fn predict(&self, epsilon: f64) -> f64 {
        math::exp(self.log_prefactor - self.rate_c / math::powf(epsilon, self.model_exponent as f64))
    }
}

/// Ordinary least squares of `ln err` against `1/ε^k`.
pub fn fit_exponential_rate(samples: &[(f64, f64)], model_exponent: u32) -> Result<RateFit> {
    if model_exponent != 1 && model_exponent != 2 {
        return Err(Error::invalid("model exponent must be 1 or 2"));
    }
    if samples.len() < 3 {
        return Err(Error::invalid("rate fit needs at least 3 samples"));
    }
    for (i, &(eps, err)) in samples.iter().enumerate() {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::invalid("epsilon samples must be positive"));
        }
        if !(err.is_finite() && err > 0.0) {
            return Err(Error::invalid("error samples must be positive"));
        }
        if samples[..i].iter().any(|&(e, _)| e == eps) {
            return Err(Error::invalid("epsilon samples must be distinct"));
        }
    }
    let k = model_exponent as f64;
    let n = samples.len() as f64;
    let pts = samples.iter().map(|&(e, r)| (1.0 / math::powf(e, k), math::ln(r)));
    let (sx, sy) = pts.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pts.clone() {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        rate_c: -slope,
        log_prefactor: intercept,
        r_squared,
        model_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    const EPS: [f64; 5] = [0.35, 0.3, 0.25, 0.2, 0.15];

    #[test]
    fn exact_inverse_epsilon_model() {
        let s: Vec<_> = EPS.iter().map(|&e| (e, math::exp(-5.0 / e))).collect();
        let fit = fit_exponential_rate(&s, 1).unwrap();
        assert!((fit.rate_c - 5.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_inverse_square_model() {
        let s: Vec<_> = EPS.iter().map(|&e| (e, 3.0 * math::exp(-2.0 / (e * e)))).collect();
        let fit = fit_exponential_rate(&s, 2).unwrap();
        assert!((fit.rate_c - 2.0).abs() < 1e-9);
        assert!((fit.log_prefactor - math::ln(3.0)).abs() < 1e-9);
        assert!((fit.predict(0.3) - 3.0 * math::exp(-2.0 / 0.09)).abs() < 1e-15);
    }

    #[test]
    fn noisy_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s: Vec<_> = EPS
            .iter()
            .map(|&e| (e, math::exp(-5.0 / e) * (1.0 + rng.gen_range(-0.01..0.01))))
            .collect();
        let fit = fit_exponential_rate(&s, 1).unwrap();
        assert!((fit.rate_c - 5.0).abs() < 0.2);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn invalid_samples() {
        assert!(fit_exponential_rate(&[(0.1, 1.0), (0.2, 1.0)], 1).is_err());
        assert!(fit_exponential_rate(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)], 1).is_err());
        assert!(fit_exponential_rate(&[(0.1, 1.0), (0.1, 2.0), (0.3, 1.0)], 1).is_err());
        assert!(fit_exponential_rate(&[(0.1, 1.0), (0.2, 2.0), (0.3, 1.0)], 3).is_err());
    }

    proptest! {
        #[test]
        fn planted_parameters_are_recovered(c in 0.1f64..10.0, lnc in -5.0f64..5.0, k in 1u32..=2) {
            let s: Vec<_> = EPS
                .iter()
                .map(|&e| (e, math::exp(lnc - c / math::powf(e, k as f64))))
                .collect();
            let fit = fit_exponential_rate(&s, k).unwrap();
            prop_assert!((fit.rate_c - c).abs() <= 1e-9 * (1.0 + c));
            prop_assert!((fit.log_prefactor - lnc).abs() <= 1e-9 * (1.0 + c));
        }
    }
}
