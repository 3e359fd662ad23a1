//! Local model of the coefficient `K` near a critical point and its global extension.

use serde::{Deserialize, Serialize};

use crate::bubble::{dist2, norm, Dimension};
use crate::error::{ForgeError, Result};

/// `K(x) = K0 + Σ aᵢ|xᵢ − zᵢ|^β` on the ball of radius `r0` about `z`.
///
/// Outside the ball the model term is multiplied by a smoothstep cutoff that
/// brings it to zero at radius `2 r0`, so `K` is C¹, bounded, and equal to `K0`
/// far away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KProfile {
    pub z: Vec<f64>,
    pub a: Vec<f64>,
    pub beta: f64,
    pub sigma: f64,
    pub k0: f64,
    pub r0: f64,
}

impl KProfile {
    pub fn new(dim: &Dimension, z: Vec<f64>, a: Vec<f64>, beta: f64, k0: f64, r0: f64) -> Result<Self> {
        let p = Self { z, a, beta, sigma: 0.5, k0, r0 };
        p.validate(dim)?;
        Ok(p)
    }

    /// The symmetric profile `a = (−1, …, −1)` used throughout the examples.
    pub fn symmetric(dim: &Dimension, z: Vec<f64>, beta: f64, k0: f64) -> Result<Self> {
        Self::new(dim, z, vec![-1.0; dim.n()], beta, k0, 1.0)
    }

    pub fn validate(&self, dim: &Dimension) -> Result<()> {
        let n = dim.n();
        if self.z.len() != n || self.a.len() != n {
            return Err(ForgeError::InvalidProfile(format!("z and a must have {n} entries")));
        }
        if self.a.iter().any(|&a| a == 0.0 || !a.is_finite()) {
            return Err(ForgeError::InvalidProfile("every coefficient a_i must be nonzero".into()));
        }
        if self.sum_a() >= 0.0 {
            return Err(ForgeError::InvalidProfile(format!("sum of a_i is {} (must be < 0)", self.sum_a())));
        }
        if !(self.beta > 1.0 && self.beta < dim.nf() - 4.0) {
            return Err(ForgeError::InvalidProfile(format!(
                "beta = {} outside (1, {})",
                self.beta,
                n - 4
            )));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(ForgeError::InvalidProfile(format!("sigma = {} outside (0, 1)", self.sigma)));
        }
        if !(self.r0 > 0.0) || !self.k0.is_finite() {
            return Err(ForgeError::InvalidProfile("r0 must be positive and K0 finite".into()));
        }
        Ok(())
    }

    pub fn sum_a(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Radial cutoff: 1 on `[0, r0]`, smoothstep decay on `[r0, 2 r0]`, 0 beyond.
    pub fn window(&self, rho: f64) -> f64 {
        if rho <= self.r0 {
            1.0
        } else if rho >= 2.0 * self.r0 {
            0.0
        } else {
            let s = (rho - self.r0) / self.r0;
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }

    /// `K − K0` as a function of the displacement `x − z`.
    pub fn excess_disp(&self, d: &[f64]) -> f64 {
        let rho = norm(d);
        let w = self.window(rho);
        if w == 0.0 {
            return 0.0;
        }
        w * d.iter().zip(&self.a).map(|(di, ai)| ai * di.abs().powf(self.beta)).sum::<f64>()
    }

    pub fn value_disp(&self, d: &[f64]) -> f64 {
        self.k0 + self.excess_disp(d)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.z).map(|(xi, zi)| xi - zi).collect();
        self.value_disp(&d)
    }
}

pub fn k_profile_value(p: &KProfile, x: &[f64]) -> f64 {
    p.value(x)
}

/// `K` on all of `R^n` from one profile per peak.
///
/// Inside the support ball (radius `2 r0`) of a profile, that profile decides;
/// elsewhere `K` is the baseline of the nearest critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KField {
    pub profiles: Vec<KProfile>,
}

impl KField {
    pub fn new(profiles: Vec<KProfile>) -> Self {
        Self { profiles }
    }

    /// Average baseline, the constant part split off from `K` in the forms.
    pub fn mean_k0(&self) -> f64 {
        if self.profiles.is_empty() {
            return 0.0;
        }
        self.profiles.iter().map(|p| p.k0).sum::<f64>() / self.profiles.len() as f64
    }

    /// `K` given the displacements `x − zʲ` to every critical point.
    pub fn value_from_disps(&self, disps: &[&[f64]]) -> f64 {
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        for (j, d) in disps.iter().enumerate() {
            let d2: f64 = d.iter().map(|v| v * v).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = Some(j);
            }
        }
        match best {
            Some(j) => self.profiles[j].value_disp(disps[j]),
            None => 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let disps: Vec<Vec<f64>> = self
            .profiles
            .iter()
            .map(|p| x.iter().zip(&p.z).map(|(a, b)| a - b).collect())
            .collect();
        let refs: Vec<&[f64]> = disps.iter().map(|d| d.as_slice()).collect();
        self.value_from_disps(&refs)
    }

    /// Minimum distance between critical points.
    pub fn separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.profiles.len() {
            for j in i + 1..self.profiles.len() {
                best = best.min(dist2(&self.profiles[i].z, &self.profiles[j].z).sqrt());
            }
        }
        best
    }
}
