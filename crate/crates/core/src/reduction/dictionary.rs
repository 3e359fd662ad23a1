use serde::{Deserialize, Serialize};

use crate::bubble::{profile, profile_dcenter_factor, profile_dlambda, Dimension};

/// Which member of the bubble family an entry is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Value,
    DLambda,
    /// `∂U/∂y_i`, zero-based axis.
    DCenter(usize),
}

/// Radial shape shared by entries: `U`, `∂λU`, or the factor `H` of `∂yU = (x−y)H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Kind {
    Value,
    DLambda,
    Center,
}

impl Tag {
    pub(crate) fn kind(&self) -> Kind {
        match self {
            Tag::Value => Kind::Value,
            Tag::DLambda => Kind::DLambda,
            Tag::DCenter(_) => Kind::Center,
        }
    }

    pub(crate) fn axis(&self) -> Option<usize> {
        match self {
            Tag::DCenter(i) => Some(*i),
            _ => None,
        }
    }
}

/// `(φ, Δ²φ)` radial parts for a kind at squared distance `r2`.
#[inline]
pub(crate) fn radial_pair(dim: &Dimension, kind: Kind, mu: f64, r2: f64) -> (f64, f64) {
    let u = profile(dim, mu, r2);
    let w = dim.p() * dim.pow_pm1(u);
    match kind {
        Kind::Value => (u, u * dim.pow_pm1(u)),
        Kind::DLambda => {
            let d = profile_dlambda(dim, mu, r2);
            (d, w * d)
        }
        Kind::Center => {
            let h = profile_dcenter_factor(dim, mu, r2);
            (h, w * h)
        }
    }
}

/// `(φ, Δ²φ)` radial parts of all three kinds at once, in the order value, ∂λ, center.
#[inline]
pub(crate) fn radial_triplet(dim: &Dimension, mu: f64, r2: f64) -> ([f64; 3], [f64; 3]) {
    let l2r2 = mu * mu * r2;
    let inv = 1.0 / (1.0 + l2r2);
    let u = dim.c_n() * dim.pow_k(mu * inv);
    let upm1 = dim.pow_pm1(u);
    let w = dim.p() * upm1;
    let d = u * dim.k() / mu * (1.0 - l2r2) * inv;
    let h = (dim.nf() - 4.0) * mu * mu * u * inv;
    ([u, d, h], [u * upm1, w * d, w * h])
}

/// One dictionary function: a bubble-family member at `center` with scale `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Peak (0 or 1) whose family this entry enriches.
    pub peak: usize,
    pub center: Vec<f64>,
    pub mu: f64,
    pub tag: Tag,
}

impl Entry {
    /// `φ` at displacement `d = x − center`.
    pub fn value_disp(&self, dim: &Dimension, d: &[f64]) -> f64 {
        let r2: f64 = d.iter().map(|v| v * v).sum();
        let (phi, _) = radial_pair(dim, self.tag.kind(), self.mu, r2);
        match self.tag.axis() {
            Some(i) => phi * d[i],
            None => phi,
        }
    }

    /// `Δ²φ` at displacement `d`.
    pub fn bilaplacian_disp(&self, dim: &Dimension, d: &[f64]) -> f64 {
        let r2: f64 = d.iter().map(|v| v * v).sum();
        let (_, b) = radial_pair(dim, self.tag.kind(), self.mu, r2);
        match self.tag.axis() {
            Some(i) => b * d[i],
            None => b,
        }
    }
}

/// Composition of the per-peak dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DictSpec {
    /// Multiples of `λⱼ` for the plain-bubble entries.
    pub scale_factors: Vec<f64>,
    /// Offset `c` of the shifted entries `U` at `yʲ ± (c/λⱼ)eᵢ`.
    pub offset: f64,
    pub include_offsets: bool,
}

impl Default for DictSpec {
    fn default() -> Self {
        let s = std::f64::consts::SQRT_2;
        Self { scale_factors: vec![0.5, 1.0 / s, 1.0, s, 2.0], offset: 0.3, include_offsets: true }
    }
}

impl DictSpec {
    /// Entries for one peak; the constraint functions `U`, `∂λU`, `∂yᵢU` at
    /// the peak's own scale come first, in that order.
    pub fn entries(&self, dim: &Dimension, peak: usize, y: &[f64], lambda: f64) -> Vec<Entry> {
        let n = dim.n();
        let mk = |center: Vec<f64>, mu: f64, tag: Tag| Entry { peak, center, mu, tag };
        let mut out = vec![mk(y.to_vec(), lambda, Tag::Value), mk(y.to_vec(), lambda, Tag::DLambda)];
        out.extend((0..n).map(|i| mk(y.to_vec(), lambda, Tag::DCenter(i))));
        for &f in &self.scale_factors {
            if (f - 1.0).abs() > 1e-12 {
                out.push(mk(y.to_vec(), f * lambda, Tag::Value));
            }
        }
        if self.include_offsets {
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let mut c = y.to_vec();
                    c[i] += sign * self.offset / lambda;
                    out.push(mk(c, lambda, Tag::Value));
                }
            }
        }
        out
    }

    /// Number of constraint functions per peak.
    pub fn constraints_per_peak(dim: &Dimension) -> usize {
        dim.n() + 2
    }
}
