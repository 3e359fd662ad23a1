use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};

use super::{unit_rule, QuadratureSpec};

/// Gauss–Legendre nodes under `r = s·t/(1−t)`, weights carrying `r^(n−1) dr`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

impl RadialRule {
    pub fn new(n: usize, nodes: usize, scale: f64) -> Self {
        let base = unit_rule(nodes);
        let mut r = Vec::with_capacity(nodes);
        let mut w = Vec::with_capacity(nodes);
        for &(t, wt) in base.iter() {
            let om = 1.0 - t;
            let rr = scale * t / om;
            r.push(rr);
            w.push(wt * scale / (om * om) * rr.powi(n as i32 - 1));
        }
        Self { r, w }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.r.iter().zip(&self.w).map(|(&r, &w)| w * f(r)).sum()
    }

    fn integrate_with_abs(&self, f: &impl Fn(f64) -> f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut a = 0.0;
        for (&r, &w) in self.r.iter().zip(&self.w) {
            let v = w * f(r);
            s += v;
            a += v.abs();
        }
        (s, a)
    }
}

/// `∫₀^∞ f(r) r^(n−1) dr` with the map scale taken from `spec`.
pub fn integrate_radial(f: impl Fn(f64) -> f64, dim: &Dimension, spec: &QuadratureSpec) -> Result<f64> {
    integrate_radial_scaled(f, dim, spec, spec.map_scale)
}

/// As [`integrate_radial`] with an explicit map scale. The result is accepted
/// when doubling the node count moves it by at most `rel_tol` relative to
/// `∫|f| r^(n−1) dr`.
pub fn integrate_radial_scaled(
    f: impl Fn(f64) -> f64,
    dim: &Dimension,
    spec: &QuadratureSpec,
    scale: f64,
) -> Result<f64> {
    let coarse = RadialRule::new(dim.n(), spec.radial_nodes, scale).integrate_with_abs(&f).0;
    let (fine, abs) = RadialRule::new(dim.n(), 2 * spec.radial_nodes, scale).integrate_with_abs(&f);
    let change = (fine - coarse).abs();
    if !fine.is_finite() || change > spec.rel_tol * abs.max(fine.abs()) {
        return Err(ForgeError::NonConvergence { what: "radial quadrature".into(), value: fine, change });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_identity_and_gaussian_moment() {
        let d = Dimension::new(6).unwrap();
        let spec = QuadratureSpec::default();
        let v = integrate_radial(|r| (1.0 + r * r).powi(-6), &d, &spec).unwrap();
        assert!((v * 60.0 - 1.0).abs() < 1e-10, "{v}");
        let z = integrate_radial(|r| (1.0 - r * r) / (1.0 + r * r).powi(7), &d, &spec).unwrap();
        assert!(z.abs() < 1e-12, "{z}");
        let g = integrate_radial(|r| (-r * r).exp(), &d, &spec).unwrap();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
    }

    #[test]
    fn flags_non_convergence() {
        let d = Dimension::new(6).unwrap();
        let spec = QuadratureSpec { radial_nodes: 8, ..Default::default() };
        let r = integrate_radial(|r| (40.0 * r).cos() / (1.0 + r * r).powi(6), &d, &spec);
        assert!(matches!(r, Err(ForgeError::NonConvergence { .. })));
    }
}
