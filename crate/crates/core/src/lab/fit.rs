use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

/// Least-squares power law `v ≈ c·x^p` in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub samples: Vec<(f64, f64)>,
    pub exponent: f64,
    pub constant: f64,
    pub max_rel_dev: f64,
    pub window: (f64, f64),
}

impl ScalingFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.constant * x.powf(self.exponent)
    }
}

/// Fits `samples = [(x, v)]`; values must share one sign (a negative law
/// returns a negative constant), abscissae must be positive and strictly
/// monotone, and at least four samples are required.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 4 {
        return Err(ForgeError::Fit(format!("need at least 4 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(x, _)| !(x > 0.0)) {
        return Err(ForgeError::Fit("abscissae must be positive".into()));
    }
    let inc = samples.windows(2).all(|w| w[1].0 > w[0].0);
    let dec = samples.windows(2).all(|w| w[1].0 < w[0].0);
    if !inc && !dec {
        return Err(ForgeError::Fit("abscissae must be strictly monotone".into()));
    }
    let sign = samples[0].1.signum();
    if sign == 0.0 || samples.iter().any(|&(_, v)| v.signum() != sign || v == 0.0) {
        return Err(ForgeError::Fit(format!("values must share one nonzero sign: {samples:?}")));
    }
    let m = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let constant = sign * (my - exponent * mx).exp();
    let max_rel_dev = samples
        .iter()
        .map(|&(x, v)| (v / (constant * x.powf(exponent)) - 1.0).abs())
        .fold(0.0, f64::max);
    let xs = samples.iter().map(|s| s.0);
    let window = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(0.0, f64::max));
    Ok(ScalingFit { samples: samples.to_vec(), exponent, constant, max_rel_dev, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_law_recovered() {
        let s: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&x| (x, 3.7 * f64::powf(x, -2.5))).collect();
        let f = fit_power_law(&s).unwrap();
        assert!((f.exponent + 2.5).abs() < 1e-12);
        assert!((f.constant - 3.7).abs() < 1e-12);
        let neg: Vec<(f64, f64)> = s.iter().map(|&(x, v)| (x, -v)).collect();
        assert!((fit_power_law(&neg).unwrap().constant + 3.7).abs() < 1e-12);
    }

    #[test]
    fn noisy_law_and_flat_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let s: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&x| (x, 3.7 * f64::powf(x, -2.5) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0))))
            .collect();
        assert!((fit_power_law(&s).unwrap().exponent + 2.5).abs() <= 0.05);
        let flat: Vec<(f64, f64)> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| (x, 5.0)).collect();
        assert!(fit_power_law(&flat).unwrap().exponent.abs() < 1e-14);
    }

    #[test]
    fn rejections() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (3.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
    }
}
