use crate::bubble::{dist2, Dimension};
use crate::error::{ForgeError, Result};

use super::{unit_rule, QuadratureSpec, RadialRule};

const PARTITION_POWER: i32 = 8;

/// Moments `∫g`, `∫g·a`, `∫g·a²`, `∫g·s²` of an integrand `g(r₁, r₂)`, where
/// `a` is the axial coordinate measured from the first center towards the
/// second and `s` the distance to the axis.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub m0: f64,
    pub ma: f64,
    pub maa: f64,
    pub mss: f64,
}

impl Moments {
    /// `∫g (x − c₁)_i` given the unit axis component `e_i`.
    pub fn first(&self, e_i: f64) -> f64 {
        e_i * self.ma
    }

    /// `∫g (x − c₂)_j` for separation `d`.
    pub fn second(&self, e_j: f64, d: f64) -> f64 {
        e_j * (self.ma - d * self.m0)
    }

    /// `∫g (x − c₁)_i (x − c₂)_j`.
    pub fn pair(&self, n: usize, e_i: f64, e_j: f64, same_axis: bool, d: f64) -> f64 {
        let delta = if same_axis { 1.0 } else { 0.0 };
        e_i * e_j * (self.maa - d * self.ma) + (delta - e_i * e_j) / (n as f64 - 1.0) * self.mss
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    r1: f64,
    r2: f64,
    a: f64,
    a2: f64,
    s2: f64,
    w: f64,
}

/// Quadrature for integrands depending on `x` through `|x − c₁|` and `|x − c₂|`.
///
/// The half-plane (axial, transverse) is split by a smooth partition of unity
/// into two pieces, each integrated in polar coordinates about its own center
/// with the algebraic radial map at that center's length scale.
#[derive(Debug, Clone)]
pub struct TwoCenterRule {
    pub d: f64,
    nodes: Vec<Node>,
}

impl TwoCenterRule {
    /// `scales` are the characteristic lengths `1/μ` at each center.
    pub fn new(n: usize, d: f64, scales: [f64; 2], radial_nodes: usize, angular_nodes: usize) -> Self {
        let smin = scales[0].min(scales[1]);
        if d <= 1e-12 * smin {
            return Self::coincident(n, scales, radial_nodes);
        }
        let ang = unit_rule(angular_nodes);
        let omega = Dimension::sphere_area(n - 1);
        let mut nodes = Vec::with_capacity(2 * radial_nodes * angular_nodes);
        for part in 0..2 {
            let rad = RadialRule::new(n, radial_nodes, scales[part]);
            for (&rho, &wr) in rad.r.iter().zip(&rad.w) {
                for &(t, wt) in ang.iter() {
                    let th = std::f64::consts::PI * t;
                    let (sin, cos) = th.sin_cos();
                    let s = rho * sin;
                    let (a, r1, r2) = if part == 0 {
                        let a = rho * cos;
                        (a, rho, ((a - d) * (a - d) + s * s).sqrt())
                    } else {
                        let a = d + rho * cos;
                        (a, (a * a + s * s).sqrt(), rho)
                    };
                    let q1 = r1 / scales[0];
                    let q2 = r2 / scales[1];
                    let chi = if part == 0 {
                        1.0 / (1.0 + (q1 / q2).powi(PARTITION_POWER))
                    } else {
                        1.0 / (1.0 + (q2 / q1).powi(PARTITION_POWER))
                    };
                    if !(chi > 0.0) {
                        continue;
                    }
                    let w = chi * omega * wr * sin.powi(n as i32 - 2) * wt * std::f64::consts::PI;
                    nodes.push(Node { r1, r2, a, a2: a * a, s2: s * s, w });
                }
            }
        }
        Self { d, nodes }
    }

    fn coincident(n: usize, scales: [f64; 2], radial_nodes: usize) -> Self {
        let scale = (scales[0] * scales[1]).sqrt();
        let rad = RadialRule::new(n, 2 * radial_nodes, scale);
        let omega = Dimension::sphere_area(n);
        let nf = n as f64;
        let nodes = rad
            .r
            .iter()
            .zip(&rad.w)
            .map(|(&r, &w)| Node {
                r1: r,
                r2: r,
                a: 0.0,
                a2: r * r / nf,
                s2: r * r * (nf - 1.0) / nf,
                w: w * omega,
            })
            .collect();
        Self { d: 0.0, nodes }
    }

    pub fn from_spec(dim: &Dimension, d: f64, scales: [f64; 2], spec: &QuadratureSpec) -> Self {
        Self::new(dim.n(), d, scales, spec.radial_nodes, spec.transverse_nodes)
    }

    pub fn is_coincident(&self) -> bool {
        self.d == 0.0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.nodes.iter().map(|nd| nd.w * f(nd.r1, nd.r2)).sum()
    }

    fn integrate_with_abs(&self, f: &impl Fn(f64, f64) -> f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut a = 0.0;
        for nd in &self.nodes {
            let v = nd.w * f(nd.r1, nd.r2);
            s += v;
            a += v.abs();
        }
        (s, a)
    }

    pub fn moments(&self, f: impl Fn(f64, f64) -> f64) -> Moments {
        let mut m = Moments::default();
        for nd in &self.nodes {
            let v = nd.w * f(nd.r1, nd.r2);
            m.m0 += v;
            m.ma += v * nd.a;
            m.maa += v * nd.a2;
            m.mss += v * nd.s2;
        }
        m
    }

    /// Moments of several integrands in one pass.
    pub fn moments_many<const K: usize>(&self, f: impl Fn(f64, f64) -> [f64; K]) -> [Moments; K] {
        let mut out = [Moments::default(); K];
        for nd in &self.nodes {
            let v = f(nd.r1, nd.r2);
            for k in 0..K {
                let g = nd.w * v[k];
                out[k].m0 += g;
                out[k].ma += g * nd.a;
                out[k].maa += g * nd.a2;
                out[k].mss += g * nd.s2;
            }
        }
        out
    }

    /// Several integrands sharing one pass over the nodes.
    pub fn integrate_many<const K: usize>(&self, f: impl Fn(f64, f64) -> [f64; K]) -> [f64; K] {
        let mut out = [0.0; K];
        for nd in &self.nodes {
            let v = f(nd.r1, nd.r2);
            for k in 0..K {
                out[k] += nd.w * v[k];
            }
        }
        out
    }
}

/// `∫ f(|x−c₁|, |x−c₂|) dx` with both map scales set to `spec.map_scale`.
pub fn integrate_two_center(
    f: impl Fn(f64, f64) -> f64,
    c1: &[f64],
    c2: &[f64],
    dim: &Dimension,
    spec: &QuadratureSpec,
) -> Result<f64> {
    integrate_two_center_scaled(f, c1, c2, [spec.map_scale; 2], dim, spec)
}

/// As [`integrate_two_center`] with per-center map scales; the result is
/// checked against a rule with doubled node counts.
pub fn integrate_two_center_scaled(
    f: impl Fn(f64, f64) -> f64,
    c1: &[f64],
    c2: &[f64],
    scales: [f64; 2],
    dim: &Dimension,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let d = dist2(c1, c2).sqrt();
    let coarse = TwoCenterRule::from_spec(dim, d, scales, spec).integrate_with_abs(&f).0;
    let (fine, abs) = TwoCenterRule::from_spec(dim, d, scales, &spec.refined()).integrate_with_abs(&f);
    let change = (fine - coarse).abs();
    if !fine.is_finite() || change > spec.rel_tol * abs.max(fine.abs()) {
        return Err(ForgeError::NonConvergence { what: "two-center quadrature".into(), value: fine, change });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_convolution_identity() {
        let dim = Dimension::new(6).unwrap();
        // Gaussian tails need more nodes than the algebraically decaying bubbles.
        let spec = QuadratureSpec { radial_nodes: 96, transverse_nodes: 48, ..Default::default() };
        let pi = std::f64::consts::PI;
        for d in [0.0, 0.5, 1.0, 2.5] {
            let mut c2 = vec![0.0; 6];
            c2[1] = d;
            let v = integrate_two_center(|r1, r2| (-r1 * r1 - r2 * r2).exp(), &[0.0; 6], &c2, &dim, &spec)
                .unwrap();
            let exact = pi.powi(3) / 8.0 * (-d * d / 2.0).exp();
            assert!((v / exact - 1.0).abs() < 1e-8, "d={d}: {v} vs {exact}");
        }
    }

    #[test]
    fn moments_match_direct_products() {
        // ∫ e^{-r1²-r2²} (x-c1)_1 (x-c2)_1 with c2 = d e1 has the closed form
        // (π/2)^{n/2} e^{-d²/2} (1/4 - d²/4).
        let n = 6;
        let d = 0.5;
        let rule = TwoCenterRule::new(n, d, [1.0, 1.0], 64, 32);
        let m = rule.moments(|r1, r2| (-r1 * r1 - r2 * r2).exp());
        let base = std::f64::consts::PI.powi(3) / 8.0 * (-d * d / 2.0).exp();
        assert!((m.pair(n, 1.0, 1.0, true, d) / (base * (0.25 - 0.25 * d * d)) - 1.0).abs() < 1e-8);
        assert!((m.pair(n, 0.0, 0.0, true, d) / (base * 0.25) - 1.0).abs() < 1e-8);
        assert!((m.first(1.0) / (base * 0.5 * d) - 1.0).abs() < 1e-8);
        assert!((m.second(1.0, d) / (-base * 0.5 * d) - 1.0).abs() < 1e-8);
    }
}
