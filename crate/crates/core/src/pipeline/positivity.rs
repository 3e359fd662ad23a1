use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};
use crate::integrate::{CloudSpec, SampleCloud};
use crate::lab::{Check, Verdict};
use crate::reduction::{CorrectionSolution, Entry, GalerkinSpace, Tag};

use super::config::PositivityConfig;

/// `u = Σ cᵢ φᵢ` over bubble-family functions; the first two terms are the peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledSolution {
    pub dim: Dimension,
    pub terms: Vec<(f64, Entry)>,
}

impl AssembledSolution {
    pub fn new(dim: &Dimension, terms: Vec<(f64, Entry)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(ForgeError::InvalidArgument("empty solution".into()));
        }
        Ok(Self { dim: *dim, terms })
    }

    /// `Σ αⱼ U_{yʲ,λⱼ} + v` with `v` expanded in the dictionary.
    pub fn from_correction(space: &GalerkinSpace, sol: &CorrectionSolution) -> Result<Self> {
        let mut terms: Vec<(f64, Entry)> = (0..space.peaks())
            .map(|j| (sol.alpha[j], Entry { peak: j, center: space.centers[j].clone(), mu: space.lambdas[j], tag: Tag::Value }))
            .collect();
        let coeffs = &space.basis * nalgebra::DVector::from_column_slice(&sol.v_coeffs);
        terms.extend(coeffs.iter().zip(&space.dictionary).filter(|(c, _)| **c != 0.0).map(|(c, e)| (*c, e.clone())));
        Self::new(&space.dim, terms)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut d = vec![0.0; x.len()];
        self.terms
            .iter()
            .map(|(c, e)| {
                for ((di, xi), ci) in d.iter_mut().zip(x).zip(&e.center) {
                    *di = xi - ci;
                }
                c * e.value_disp(&self.dim, &d)
            })
            .sum()
    }

    /// Peak centers and scales; a single-peak solution repeats its peak.
    fn peaks(&self) -> CloudSpec {
        let peaks: Vec<&Entry> = self.terms.iter().map(|t| &t.1).filter(|e| e.tag == Tag::Value).take(2).collect();
        let second = peaks.get(1).unwrap_or(&peaks[0]);
        CloudSpec { centers: [peaks[0].center.clone(), second.center.clone()], lambdas: [peaks[0].mu, second.mu] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_value: f64,
    /// Point of the minimum of `u/max(U_peak)`, i.e. relative to the local height.
    pub min_relative: f64,
    pub points: usize,
    /// `|u⁻|_{L^(2*)}` by importance sampling, and its standard error.
    pub negative_norm: f64,
    pub negative_norm_se: f64,
    pub witnesses: Vec<Witness>,
    pub verdict: Verdict,
}

fn ball_points(n: usize, center: &[f64], radius: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let unit = Uniform::new(0.0f64, 1.0).expect("unit interval");
    let mut out = vec![center.to_vec()];
    for _ in 0..count {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let r = radius * unit.sample(rng).powf(1.0 / n as f64);
        out.push(center.iter().zip(&g).map(|(c, v)| c + r * v / norm).collect());
    }
    out
}

/// Minimum of `u` over an importance-sampled cloud plus dense balls around
/// every center in the expansion, and the `L^(2*)` norm of `u⁻`.
pub fn positivity_check(u: &AssembledSolution, cfg: &PositivityConfig, seed: u64) -> Result<PositivityReport> {
    let dim = &u.dim;
    let n = dim.n();
    let cloud = SampleCloud::new(dim, &u.peaks(), cfg.cloud_samples, seed);
    let values: Vec<f64> = (0..cloud.len()).map(|i| u.value(&cloud.point(i))).collect();
    let neg: Vec<f64> = values.iter().map(|v| dim.pow_2star((-v).max(0.0))).collect();
    let est = cloud.estimate(&neg, 1.0);
    let negative_norm = est.value.max(0.0).powf(1.0 / dim.two_star());
    let negative_norm_se = if est.value > 0.0 { negative_norm * est.std_error / (dim.two_star() * est.value) } else { 0.0 };

    // Balls around distinct centers; nearby centers share the ball of the first.
    let mut balls: Vec<(Vec<f64>, f64)> = Vec::new();
    for (_, e) in &u.terms {
        let radius = cfg.ball_radius / e.mu;
        let covered = balls.iter().any(|(c, r)| {
            let d2: f64 = c.iter().zip(&e.center).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() <= 0.5 * r && radius <= 2.0 * r
        });
        if !covered {
            balls.push((e.center.clone(), radius));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut samples: Vec<(Vec<f64>, f64)> = (0..cloud.len()).map(|i| (cloud.point(i), values[i])).collect();
    for (c, r) in &balls {
        for x in ball_points(n, c, *r, cfg.ball_samples, &mut rng) {
            let v = u.value(&x);
            samples.push((x, v));
        }
    }
    let peaks = u.peaks();
    if cfg.far_shells > 0 {
        let mid: Vec<f64> = peaks.centers[0].iter().zip(&peaks.centers[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let inner = cfg.ball_radius / peaks.lambdas[0].max(peaks.lambdas[1]);
        let ratio = (cfg.far_radius / inner).max(1.0);
        for s in 0..cfg.far_shells {
            let r = inner * ratio.powf((s + 1) as f64 / cfg.far_shells as f64);
            for _ in 0..cfg.shell_samples {
                let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = g.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
                let x: Vec<f64> = mid.iter().zip(&g).map(|(c, v)| c + r * v / norm).collect();
                let v = u.value(&x);
                samples.push((x, v));
            }
        }
    }
    let height = |x: &[f64]| {
        (0..2)
            .map(|j| {
                let r2: f64 = x.iter().zip(&peaks.centers[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                crate::bubble::profile(dim, peaks.lambdas[j], r2)
            })
            .fold(0.0, f64::max)
    };
    let min_value = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let min_relative = samples.iter().map(|s| s.1 / height(&s.0)).fold(f64::INFINITY, f64::min);
    let mut negative: Vec<&(Vec<f64>, f64)> = samples.iter().filter(|s| !(s.1 > 0.0)).collect();
    negative.sort_by(|a, b| a.1.total_cmp(&b.1));
    let witnesses: Vec<Witness> = negative.iter().take(cfg.witnesses).map(|s| Witness { x: s.0.clone(), u: s.1 }).collect();

    let mut verdict = Verdict::new("positivity");
    verdict.check(Check::new(
        "minimum positive",
        min_value > 0.0,
        format!("min u = {min_value:e} over {} points, min u/U_peak = {min_relative:e}", samples.len()),
    ));
    verdict.check(Check::new(
        "negative part small in L^(2*)",
        negative_norm <= cfg.negative_tol,
        format!("|u^-| = {negative_norm:e} ± {negative_norm_se:e}, tolerance {:e}", cfg.negative_tol),
    ));
    Ok(PositivityReport {
        min_value,
        min_relative,
        points: samples.len(),
        negative_norm,
        negative_norm_se,
        witnesses,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bubble(center: Vec<f64>, mu: f64) -> Entry {
        Entry { peak: 0, center, mu, tag: Tag::Value }
    }

    #[test]
    fn single_bubble_is_positive() {
        let dim = Dimension::new(6).unwrap();
        let u = AssembledSolution::new(&dim, vec![(1.0, bubble(vec![0.0; 6], 3.0))]).unwrap();
        let r = positivity_check(&u, &PositivityConfig::default(), 7).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict.checks);
        assert_eq!(r.negative_norm, 0.0);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn engineered_dip_is_caught_with_witness() {
        let dim = Dimension::new(6).unwrap();
        let mut far = vec![0.0; 6];
        far[0] = 5.0;
        let u = AssembledSolution::new(&dim, vec![(1.0, bubble(vec![0.0; 6], 1.0)), (-10.0, bubble(far.clone(), 1.0))]).unwrap();
        let r = positivity_check(&u, &PositivityConfig::default(), 7).unwrap();
        assert!(!r.verdict.passed());
        assert!(r.negative_norm > 0.0);
        let w = &r.witnesses[0];
        assert!(w.u < 0.0 && (u.value(&w.x) - w.u).abs() <= 1e-12 * w.u.abs());
        let d: f64 = w.x.iter().zip(&far).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(d < 4.0, "witness at distance {d} from the dip");
    }
}
