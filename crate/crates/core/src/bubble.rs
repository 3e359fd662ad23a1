//! The bubble family `U_{y,λ}` and the two-bubble ansatz.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ForgeError, Result};

/// Ambient dimension with its critical exponent and bubble normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension {
    n: usize,
    two_star: f64,
    c_n: f64,
}

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(ForgeError::InvalidDimension(n));
        }
        let nf = n as f64;
        let c_n = ((nf - 4.0) * (nf - 2.0) * nf * (nf + 2.0)).powf((nf - 4.0) / 8.0);
        Ok(Self { n, two_star: 2.0 * nf / (nf - 4.0), c_n })
    }

    /// Like [`Dimension::new`] but rejects n = 5, where no admissible β exists.
    pub fn for_theorem(n: usize) -> Result<Self> {
        let d = Self::new(n)?;
        if n < 6 {
            return Err(ForgeError::DimensionTooSmall(n));
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn two_star(&self) -> f64 {
        self.two_star
    }

    /// The nonlinearity exponent `2* − 1`.
    pub fn p(&self) -> f64 {
        self.two_star - 1.0
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// `(n − 4)/2`, the decay exponent of the bubble profile.
    pub fn k(&self) -> f64 {
        (self.nf() - 4.0) / 2.0
    }

    /// Area of the unit sphere `S^(m−1)` in `R^m`.
    pub fn sphere_area(m: usize) -> f64 {
        let mf = m as f64;
        2.0 * (std::f64::consts::PI.ln() * mf / 2.0 - ln_gamma(mf / 2.0)).exp()
    }

    /// `x^(2*−1)`, with an integer fast path.
    pub fn pow_p(&self, x: f64) -> f64 {
        pow_fast(x, self.p())
    }

    /// `x^(2*−2)`.
    pub fn pow_pm1(&self, x: f64) -> f64 {
        pow_fast(x, self.p() - 1.0)
    }

    /// `x^(2*)`.
    pub fn pow_2star(&self, x: f64) -> f64 {
        pow_fast(x, self.two_star)
    }

    /// `x^((n−4)/2)`.
    pub fn pow_k(&self, x: f64) -> f64 {
        pow_fast(x, self.k())
    }
}

impl TryFrom<usize> for Dimension {
    type Error = ForgeError;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.n
    }
}

pub(crate) fn pow_fast(x: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|u| u * u).sum::<f64>().sqrt()
}

/// One bubble: center `y` and concentration scale `λ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl Bubble {
    pub fn new(y: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ForgeError::NonPositiveScale(lambda));
        }
        Ok(Self { y, lambda })
    }

    pub fn at_origin(dim: &Dimension, lambda: f64) -> Result<Self> {
        Self::new(vec![0.0; dim.n()], lambda)
    }

    fn check(&self, dim: &Dimension) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(ForgeError::NonPositiveScale(self.lambda));
        }
        if self.y.len() != dim.n() {
            return Err(ForgeError::InvalidArgument(format!(
                "center has {} coordinates, dimension is {}",
                self.y.len(),
                dim.n()
            )));
        }
        Ok(())
    }
}

/// `U` as a function of the squared distance to the center.
#[inline]
pub fn profile(dim: &Dimension, lambda: f64, r2: f64) -> f64 {
    dim.c_n() * dim.pow_k(lambda / (1.0 + lambda * lambda * r2))
}

/// `∂U/∂λ` as a function of the squared distance.
#[inline]
pub fn profile_dlambda(dim: &Dimension, lambda: f64, r2: f64) -> f64 {
    let l2r2 = lambda * lambda * r2;
    profile(dim, lambda, r2) * dim.k() / lambda * (1.0 - l2r2) / (1.0 + l2r2)
}

/// The radial factor `H` with `∂U/∂y_i = (x − y)_i H`.
#[inline]
pub fn profile_dcenter_factor(dim: &Dimension, lambda: f64, r2: f64) -> f64 {
    let l2 = lambda * lambda;
    (dim.nf() - 4.0) * l2 * profile(dim, lambda, r2) / (1.0 + l2 * r2)
}

pub fn bubble_value(dim: &Dimension, b: &Bubble, x: &[f64]) -> Result<f64> {
    b.check(dim)?;
    Ok(profile(dim, b.lambda, dist2(x, &b.y)))
}

pub fn bubble_grad_scale(dim: &Dimension, b: &Bubble, x: &[f64]) -> Result<f64> {
    b.check(dim)?;
    Ok(profile_dlambda(dim, b.lambda, dist2(x, &b.y)))
}

/// `∂U/∂y_i`; `axis` is zero-based.
pub fn bubble_grad_center(dim: &Dimension, b: &Bubble, x: &[f64], axis: usize) -> Result<f64> {
    b.check(dim)?;
    if axis >= dim.n() {
        return Err(ForgeError::AxisOutOfRange { axis, n: dim.n() });
    }
    let r2 = dist2(x, &b.y);
    Ok((x[axis] - b.y[axis]) * profile_dcenter_factor(dim, b.lambda, r2))
}

/// `Δ q^(−m) = 2m(2m+2−n) q^(−m−1) − 4m(m+1) q^(−m−2)` for radial `q = 1+s²`,
/// as coefficients of `q^(−m−1)` and `q^(−m−2)`.
fn laplacian_of_power(n: f64, m: f64) -> (f64, f64) {
    (2.0 * m * (2.0 * m + 2.0 - n), -4.0 * m * (m + 1.0))
}

/// Radial bilaplacian of the unit profile `g(s) = (1+s²)^(−k)`, applying the
/// power rule twice so every term is a positive power of `1/q` with exact
/// coefficients and nothing cancels at large `s`.
fn unit_bilaplacian(dim: &Dimension, s: f64) -> f64 {
    let n = dim.nf();
    let k = dim.k();
    let (a, b) = laplacian_of_power(n, k);
    let (a1, b1) = laplacian_of_power(n, k + 1.0);
    let (a2, b2) = laplacian_of_power(n, k + 2.0);
    let c2 = a * a1;
    let c3 = a * b1 + b * a2;
    let c4 = b * b2;
    let iq = 1.0 / (1.0 + s * s);
    iq.powf(k + 2.0) * (c2 + iq * (c3 + iq * c4))
}

/// `Δ²U(x)` from closed-form radial derivatives.
pub fn bubble_bilaplacian(dim: &Dimension, b: &Bubble, x: &[f64]) -> Result<f64> {
    b.check(dim)?;
    let lam = b.lambda;
    let s = lam * dist2(x, &b.y).sqrt();
    Ok(dim.c_n() * dim.pow_k(lam) * lam.powi(4) * unit_bilaplacian(dim, s))
}

/// `Δ²U(x) − U(x)^(2*−1)`, zero up to round-off.
pub fn bubble_residual(dim: &Dimension, b: &Bubble, x: &[f64]) -> Result<f64> {
    let u = bubble_value(dim, b, x)?;
    Ok(bubble_bilaplacian(dim, b, x)? - dim.pow_p(u))
}

/// `ΔU` as a function of the distance to the center.
pub fn bubble_laplacian_radial(dim: &Dimension, lambda: f64, r: f64) -> f64 {
    let n = dim.nf();
    let k = dim.k();
    let s = lambda * r;
    let q = 1.0 + s * s;
    let unit = -2.0 * k * n * q.powf(-k - 1.0) + 4.0 * k * (k + 1.0) * s * s * q.powf(-k - 2.0);
    dim.c_n() * dim.pow_k(lambda) * lambda * lambda * unit
}

/// Two weighted bubbles `α₁U₁ + α₂U₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAnsatz {
    pub alpha: [f64; 2],
    pub bubbles: [Bubble; 2],
}

impl PeakAnsatz {
    pub fn new(alpha: [f64; 2], bubbles: [Bubble; 2]) -> Result<Self> {
        if alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(ForgeError::InvalidArgument(format!("weights must be positive: {alpha:?}")));
        }
        Ok(Self { alpha, bubbles })
    }

    /// `ε₁₂ = (λ₁λ₂)^(−(n−4)/2)`, recomputed on every call.
    pub fn eps12(&self, dim: &Dimension) -> f64 {
        eps12(dim, self.bubbles[0].lambda, self.bubbles[1].lambda)
    }

    pub fn value(&self, dim: &Dimension, x: &[f64]) -> f64 {
        self.alpha
            .iter()
            .zip(&self.bubbles)
            .map(|(a, b)| a * profile(dim, b.lambda, dist2(x, &b.y)))
            .sum()
    }
}

pub fn eps12(dim: &Dimension, l1: f64, l2: f64) -> f64 {
    (l1 * l2).powf(-dim.k())
}

/// The parameter sets `D_μ` (centers, scales) and `M_μ` (weights, correction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub mu: f64,
    pub centers: [Vec<f64>; 2],
}

impl SearchBox {
    /// `(y, λ) ∈ D_μ`: `yʲ` in the closed ball of radius μ about `zʲ` and `λⱼ ≥ 1/μ`.
    pub fn contains_params(&self, y: [&[f64]; 2], lambda: [f64; 2]) -> bool {
        (0..2).all(|j| dist2(y[j], &self.centers[j]).sqrt() <= self.mu && lambda[j] >= 1.0 / self.mu)
    }

    /// `(α, v) ∈ M_μ`: `|αⱼ − 1| ≤ μ` and `‖v‖ ≤ μ`.
    pub fn contains_weights(&self, alpha: [f64; 2], v_norm: f64) -> bool {
        alpha.iter().all(|a| (a - 1.0).abs() <= self.mu) && v_norm <= self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalization_constant_n6() {
        let d = Dimension::new(6).unwrap();
        assert_relative_eq!(d.c_n(), 384f64.powf(0.25), max_relative = 1e-15);
        assert_relative_eq!(d.two_star(), 6.0);
        assert!(Dimension::new(4).is_err());
        assert!(Dimension::for_theorem(5).is_err());
    }

    #[test]
    fn closed_form_values() {
        let d = Dimension::new(6).unwrap();
        let c6 = d.c_n();
        let b = Bubble::at_origin(&d, 1.0).unwrap();
        let mut x = vec![0.0; 6];
        assert_relative_eq!(bubble_value(&d, &b, &x).unwrap(), c6);
        x[0] = 1.0;
        assert_relative_eq!(bubble_value(&d, &b, &x).unwrap(), c6 / 2.0);
        let b2 = Bubble::at_origin(&d, 2.0).unwrap();
        assert_relative_eq!(bubble_value(&d, &b2, &[0.0; 6]).unwrap(), 2.0 * c6);
        assert_relative_eq!(bubble_grad_scale(&d, &b2, &[0.0; 6]).unwrap(), c6, max_relative = 1e-15);
        let mut edge = vec![0.0; 6];
        edge[3] = 0.5;
        assert!(bubble_grad_scale(&d, &b2, &edge).unwrap().abs() < 1e-15);
        assert_eq!(bubble_grad_center(&d, &b2, &[0.0; 6], 2).unwrap(), 0.0);
        assert!(matches!(
            bubble_grad_center(&d, &b2, &[0.0; 6], 6),
            Err(ForgeError::AxisOutOfRange { .. })
        ));
        assert!(Bubble::new(vec![0.0; 6], 0.0).is_err());
    }

    #[test]
    fn bilaplacian_matches_finite_differences() {
        // Radial Δ h = h'' + (n−1)h'/s, applied twice by central differences.
        for n in [5, 6, 8] {
            let d = Dimension::new(n).unwrap();
            let nf = n as f64;
            let g = |s: f64| (1.0 + s * s).powf(-d.k());
            let h = 1e-2;
            let lap = |s: f64| (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h) + (nf - 1.0) * (g(s + h) - g(s - h)) / (2.0 * h * s);
            for s in [0.7, 1.3, 2.9] {
                let fd = (lap(s + h) - 2.0 * lap(s) + lap(s - h)) / (h * h) + (nf - 1.0) * (lap(s + h) - lap(s - h)) / (2.0 * h * s);
                assert_relative_eq!(unit_bilaplacian(&d, s), fd, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn center_limit_of_residual() {
        for n in [5, 6, 8] {
            let d = Dimension::new(n).unwrap();
            let b = Bubble::at_origin(&d, 1.0).unwrap();
            let x = vec![0.0; n];
            let r = bubble_residual(&d, &b, &x).unwrap();
            let up = d.pow_p(bubble_value(&d, &b, &x).unwrap());
            assert!((r / up).abs() < 1e-12, "n={n}: {r}");
        }
    }

    #[test]
    fn eps12_exact() {
        let d = Dimension::new(6).unwrap();
        let b = Bubble::at_origin(&d, 10.0).unwrap();
        let a = PeakAnsatz::new([1.0, 1.0], [b.clone(), b]).unwrap();
        assert_eq!(a.eps12(&d), 0.01);
    }

    #[test]
    fn search_box_membership() {
        let sb = SearchBox { mu: 0.5, centers: [vec![0.0, 0.0], vec![1.0, 0.0]] };
        assert!(sb.contains_params([&[0.5, 0.0], &[1.0, 0.2]], [2.0, 3.0]));
        assert!(!sb.contains_params([&[0.6, 0.0], &[1.0, 0.2]], [2.0, 3.0]));
        assert!(!sb.contains_params([&[0.0, 0.0], &[1.0, 0.0]], [1.9, 3.0]));
        assert!(sb.contains_weights([1.5, 0.5], 0.5));
        assert!(!sb.contains_weights([1.51, 1.0], 0.1));
    }
}
