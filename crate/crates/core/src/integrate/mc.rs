use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;

use super::QuadratureSpec;

/// The two bubbles whose `U^(2*)` densities form the importance mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub centers: [Vec<f64>; 2],
    pub lambdas: [f64; 2],
}

impl CloudSpec {
    pub fn single(center: Vec<f64>, lambda: f64) -> Self {
        Self { centers: [center.clone(), center], lambdas: [lambda; 2] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Set when the standard error exceeds `rel_tol·|value|`.
    pub warning: bool,
}

/// A fixed, seeded sample cloud from the bubble mixture.
///
/// Points are stored as offsets from their component's center, so any
/// displacement `x − c` is formed as `(center − c) + offset` without losing
/// the small differences that matter near a concentrated bubble. Each
/// component contributes half the points, as antithetic pairs `±ξ`.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    n: usize,
    spec: CloudSpec,
    comp: Vec<u8>,
    offset: Vec<f64>,
    weight: Vec<f64>,
    pairs_per_comp: usize,
}

impl SampleCloud {
    pub fn new(dim: &Dimension, spec: &CloudSpec, samples: usize, seed: u64) -> Self {
        let n = dim.n();
        let pairs = (samples / 4).max(1);
        let total = 4 * pairs;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = Beta::new(n as f64 / 2.0, n as f64 / 2.0).expect("valid beta parameters");
        let mut comp = Vec::with_capacity(total);
        let mut offset = Vec::with_capacity(total * n);
        for j in 0..2u8 {
            let lam = spec.lambdas[j as usize];
            for _ in 0..pairs {
                let t: f64 = beta.sample(&mut rng);
                let r = (t / (1.0 - t)).sqrt();
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let gn = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                for sign in [1.0, -1.0] {
                    comp.push(j);
                    offset.extend(g.iter().map(|v| sign * v / gn * r / lam));
                }
            }
        }
        let z = Dimension::sphere_area(n) * 0.5 * statrs::function::beta::beta(n as f64 / 2.0, n as f64 / 2.0);
        let mut cloud = Self { n, spec: spec.clone(), comp, offset, weight: vec![0.0; total], pairs_per_comp: pairs };
        let d0 = cloud.disp_to(&spec.centers[0]);
        let d1 = cloud.disp_to(&spec.centers[1]);
        for i in 0..total {
            let mut rho = 0.0;
            for (j, d) in [&d0, &d1].into_iter().enumerate() {
                let lam = spec.lambdas[j];
                let r2: f64 = d[i * n..(i + 1) * n].iter().map(|v| v * v).sum();
                rho += 0.5 * lam.powi(n as i32) * (1.0 + lam * lam * r2).powi(-(n as i32)) / z;
            }
            cloud.weight[i] = 1.0 / (total as f64 * rho);
        }
        cloud
    }

    pub fn len(&self) -> usize {
        self.comp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comp.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &CloudSpec {
        &self.spec
    }

    /// Importance weights `1/(N ρ(x_i))`.
    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Displacements `x_i − c`, row-major `len() × n`.
    pub fn disp_to(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        let base: [Vec<f64>; 2] = [0, 1].map(|j| self.spec.centers[j].iter().zip(c).map(|(a, b)| a - b).collect());
        let mut out = Vec::with_capacity(self.offset.len());
        for (i, &j) in self.comp.iter().enumerate() {
            let b = &base[j as usize];
            out.extend(self.offset[i * n..(i + 1) * n].iter().zip(b).map(|(o, b)| b + o));
        }
        out
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let n = self.n;
        let c = &self.spec.centers[self.comp[i] as usize];
        c.iter().zip(&self.offset[i * n..(i + 1) * n]).map(|(a, b)| a + b).collect()
    }

    /// Importance-weighted estimate of `∫f` from the values `f(x_i)`.
    pub fn estimate(&self, values: &[f64], rel_tol: f64) -> McEstimate {
        let p = self.pairs_per_comp;
        let mut total = 0.0;
        let mut var = 0.0;
        for j in 0..2 {
            let units: Vec<f64> = (0..p)
                .map(|k| {
                    let i = 2 * (j * p + k);
                    values[i] * self.weight[i] + values[i + 1] * self.weight[i + 1]
                })
                .collect();
            let sum: f64 = units.iter().sum();
            let mean = sum / p as f64;
            total += sum;
            if p > 1 {
                let ss: f64 = units.iter().map(|u| (u - mean) * (u - mean)).sum();
                var += ss / (p as f64 - 1.0) * p as f64;
            }
        }
        let std_error = var.sqrt();
        McEstimate {
            value: total,
            std_error,
            samples: self.len(),
            warning: std_error > rel_tol * total.abs(),
        }
    }

    /// `Σ w_i f(x_i)` without error estimate.
    pub fn sum(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weight).map(|(v, w)| v * w).sum()
    }
}

/// Monte Carlo estimate of `∫ f` with the bubble mixture as importance density.
pub fn integrate_mc(f: impl Fn(&[f64]) -> f64, dim: &Dimension, spec: &QuadratureSpec, importance: &CloudSpec) -> McEstimate {
    let cloud = SampleCloud::new(dim, importance, spec.mc_samples, spec.seed);
    let values: Vec<f64> = (0..cloud.len()).map(|i| f(&cloud.point(i))).collect();
    let est = cloud.estimate(&values, spec.rel_tol);
    if est.warning {
        log::debug!("Monte Carlo precision warning: {:e} ± {:e}", est.value, est.std_error);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_normalization_and_determinism() {
        let dim = Dimension::new(6).unwrap();
        let mut c2 = vec![0.0; 6];
        c2[0] = 2.0;
        let mix = CloudSpec { centers: [vec![0.0; 6], c2], lambdas: [1.0, 3.0] };
        let spec = QuadratureSpec { mc_samples: 4000, ..Default::default() };
        let cloud = SampleCloud::new(&dim, &mix, spec.mc_samples, spec.seed);
        let z = Dimension::sphere_area(6) * 0.5 * statrs::function::beta::beta(3.0, 3.0);
        let dens: Vec<f64> = (0..cloud.len())
            .map(|i| {
                let x = cloud.point(i);
                let r1: f64 = x.iter().map(|v| v * v).sum();
                let r2: f64 = crate::bubble::dist2(&x, &mix.centers[1]);
                0.5 * (1.0 + r1).powi(-6) / z + 0.5 * 729.0 * (1.0 + 9.0 * r2).powi(-6) / z
            })
            .collect();
        let est = cloud.estimate(&dens, 1e-8);
        assert!((est.value - 1.0).abs() < 1e-12);
        let again = SampleCloud::new(&dim, &mix, spec.mc_samples, spec.seed);
        assert_eq!(again.weights(), cloud.weights());
    }
}
