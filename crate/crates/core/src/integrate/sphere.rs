use statrs::function::gamma::ln_gamma;

use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};

/// `E|ω₁|^β` for `ω` uniform on the unit sphere of `R^n`.
pub fn sphere_moment(dim: &Dimension, beta: f64) -> Result<f64> {
    if !(beta > -1.0) {
        return Err(ForgeError::InvalidArgument(format!("sphere moment needs beta > -1, got {beta}")));
    }
    let n = dim.nf();
    let ln = ln_gamma((beta + 1.0) / 2.0) + ln_gamma(n / 2.0) - ln_gamma(0.5) - ln_gamma((n + beta) / 2.0);
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let d = Dimension::new(6).unwrap();
        assert!((sphere_moment(&d, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((sphere_moment(&d, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        // mpmath closed form; agrees with a 2e6-sample Monte Carlo oracle.
        assert!((sphere_moment(&d, 1.5).unwrap() - 0.231_238_605_485_457_5).abs() < 1e-14);
        assert!(sphere_moment(&d, -1.0).is_err());
    }
}
