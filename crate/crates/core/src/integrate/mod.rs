//! Quadrature engines: radial, two-center, Monte Carlo, and sphere moments.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

mod axial;
mod mc;
mod radial;
mod sphere;
mod two_center;

pub use axial::axial_power_moments;
pub use mc::{integrate_mc, CloudSpec, McEstimate, SampleCloud};
pub use radial::{integrate_radial, integrate_radial_scaled, RadialRule};
pub use sphere::sphere_moment;
pub use two_center::{integrate_two_center, integrate_two_center_scaled, Moments, TwoCenterRule};

/// Node counts, map scale, sample budget, seed, and tolerance for all engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub radial_nodes: usize,
    pub map_scale: f64,
    pub transverse_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_nodes: 64,
            map_scale: 1.0,
            transverse_nodes: 32,
            mc_samples: 1 << 15,
            seed: 20_240_611,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 8 || self.transverse_nodes < 8 {
            return Err(ForgeError::InvalidArgument("node counts must be at least 8".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(ForgeError::InvalidArgument(format!("rel_tol {} outside (0, 1)", self.rel_tol)));
        }
        if !(self.map_scale > 0.0) {
            return Err(ForgeError::InvalidArgument("map_scale must be positive".into()));
        }
        if self.mc_samples < 8 {
            return Err(ForgeError::InvalidArgument("mc_samples must be at least 8".into()));
        }
        Ok(())
    }

    pub fn with_map_scale(&self, s: f64) -> Self {
        Self { map_scale: s, ..self.clone() }
    }

    pub fn refined(&self) -> Self {
        Self {
            radial_nodes: 2 * self.radial_nodes,
            transverse_nodes: 2 * self.transverse_nodes,
            ..self.clone()
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, cached per node count.
pub(crate) fn unit_rule(nodes: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(nodes)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(nodes.max(2)).expect("node count >= 2");
            let mut pairs: Vec<(f64, f64)> = gl
                .as_node_weight_pairs()
                .iter()
                .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rule_integrates_polynomials() {
        let r = unit_rule(16);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 0.125).abs() < 1e-15);
    }
}
