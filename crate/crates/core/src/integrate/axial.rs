use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};

use super::{unit_rule, QuadratureSpec, RadialRule};

/// `∫|ξ₁ + s|^β g_m(|ξ|²) dξ` and `∫|ξ₁ + s|^β ξ₁ g_m(|ξ|²) dξ` over `R^n`
/// for `M` radial functions at once.
///
/// The axial coordinate is split at the kink `ξ₁ = −s` and each half-line
/// mapped by `u = c q²`, `q = t/(1−t)`, which turns `|u|^β` into a smooth
/// power of `t`; the transverse radius uses the algebraic radial rule in
/// dimension `n − 1`. `scale` is the length scale of `g`.
pub fn axial_power_moments<const M: usize>(
    dim: &Dimension,
    beta: f64,
    s: f64,
    scale: f64,
    g: impl Fn(f64) -> [f64; M],
    spec: &QuadratureSpec,
) -> Result<[[f64; 2]; M]> {
    let coarse = axial_rule(dim, beta, s, scale, &g, spec.radial_nodes);
    let fine = axial_rule(dim, beta, s, scale, &g, 2 * spec.radial_nodes);
    for m in 0..M {
        for j in 0..2 {
            let change = (fine.0[m][j] - coarse.0[m][j]).abs();
            if !fine.0[m][j].is_finite() || change > spec.rel_tol * fine.1[m][j] {
                return Err(ForgeError::NonConvergence { what: "axial power quadrature".into(), value: fine.0[m][j], change });
            }
        }
    }
    Ok(fine.0)
}

type Sums<const M: usize> = ([[f64; 2]; M], [[f64; 2]; M]);

fn axial_rule<const M: usize>(dim: &Dimension, beta: f64, s: f64, scale: f64, g: &impl Fn(f64) -> [f64; M], nodes: usize) -> Sums<M> {
    let n = dim.n();
    let omega = Dimension::sphere_area(n - 1);
    let base = unit_rule(nodes);
    let mut sum = [[0.0; 2]; M];
    let mut abs = [[0.0; 2]; M];
    for side in [1.0, -1.0] {
        for &(t, wt) in base.iter() {
            let om = 1.0 - t;
            let q = t / om;
            let u = scale * q * q;
            let a = -s + side * u;
            let w_axial = wt * 2.0 * scale * q / (om * om) * u.powf(beta);
            let inner = RadialRule::new(n - 1, nodes, (scale * scale + a * a).sqrt());
            let mut acc = [0.0; M];
            for (&r, &wr) in inner.r.iter().zip(&inner.w) {
                let v = g(a * a + r * r);
                for m in 0..M {
                    acc[m] += wr * v[m];
                }
            }
            for m in 0..M {
                let v0 = w_axial * omega * acc[m];
                let v1 = v0 * a;
                sum[m][0] += v0;
                sum[m][1] += v1;
                abs[m][0] += v0.abs();
                abs[m][1] += v1.abs();
            }
        }
    }
    (sum, abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate_radial, sphere_moment};

    #[test]
    fn centered_moment_matches_radial_reduction() {
        // At s = 0: ∫|ξ₁|^β g = E|ω₁|^β |S^(n−1)| ∫ r^(β+n−1) g(r²) dr.
        let d = Dimension::new(6).unwrap();
        let spec = QuadratureSpec::default();
        let beta = 1.5;
        let g = |r2: f64| [(1.0 + r2).powi(-7), (1.0 - r2) * (1.0 + r2).powi(-8)];
        let m = axial_power_moments(&d, beta, 0.0, 1.0, g, &spec).unwrap();
        for k in 0..2 {
            let radial = integrate_radial(|r| r.powf(beta) * g(r * r)[k], &d, &spec).unwrap();
            let expect = sphere_moment(&d, beta).unwrap() * Dimension::sphere_area(6) * radial;
            assert!((m[k][0] / expect - 1.0).abs() < 1e-9, "{} vs {expect}", m[k][0]);
            assert!(m[k][1].abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn offset_derivative_matches_first_moment() {
        // d/ds ∫|ξ₁+s|^β g = β∫|ξ₁+s|^(β−1) sign(ξ₁+s) g; for β = 2 this is 2∫(ξ₁+s) g.
        let d = Dimension::new(6).unwrap();
        let spec = QuadratureSpec::default();
        let g = |r2: f64| [(1.0 + r2).powi(-7)];
        let s = 0.3;
        let m = axial_power_moments(&d, 2.0, s, 1.0, g, &spec).unwrap();
        let m0 = axial_power_moments(&d, 0.0, 0.0, 1.0, g, &spec).unwrap();
        let second = axial_power_moments(&d, 2.0, 0.0, 1.0, g, &spec).unwrap();
        // ∫(ξ₁+s)² g = ∫ξ₁² g + s²∫g.
        assert!((m[0][0] - (second[0][0] + s * s * m0[0][0])).abs() < 1e-10 * m[0][0]);
        // ∫(ξ₁+s)² ξ₁ g = 2s∫ξ₁² g.
        assert!((m[0][1] - 2.0 * s * second[0][0]).abs() < 1e-10 * m[0][0]);
    }
}
