use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};
use crate::integrate::QuadratureSpec;
use crate::kprofile::KProfile;

use super::{
    coercivity_spectrum, verify_energy_balance, verify_lemma_b1, verify_lemma_b2, verify_lemma_b3, verify_lemma_b4,
    verify_linear_bounds, AppendixConfig, Check, SampleRow, Verdict,
};

/// Identifier of one appendix estimate, as accepted by `forge verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaId {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    B1,
    B2,
    B3,
    B4,
}

impl LemmaId {
    pub const ALL: [LemmaId; 11] = [
        LemmaId::A1,
        LemmaId::A2,
        LemmaId::A3,
        LemmaId::A4,
        LemmaId::A5,
        LemmaId::A6,
        LemmaId::A7,
        LemmaId::B1,
        LemmaId::B2,
        LemmaId::B3,
        LemmaId::B4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LemmaId::A1 => "a1",
            LemmaId::A2 => "a2",
            LemmaId::A3 => "a3",
            LemmaId::A4 => "a4",
            LemmaId::A5 => "a5",
            LemmaId::A6 => "a6",
            LemmaId::A7 => "a7",
            LemmaId::B1 => "b1",
            LemmaId::B2 => "b2",
            LemmaId::B3 => "b3",
            LemmaId::B4 => "b4",
        }
    }

    /// Linear-bound estimates covered by this identifier, if it is one of them.
    fn linear_estimates(&self) -> Option<&'static [&'static str]> {
        match self {
            LemmaId::A1 => Some(&["k_weighted_power"]),
            LemmaId::A2 => Some(&["interaction_power"]),
            LemmaId::A6 => Some(&["linearized_value"]),
            LemmaId::A7 => Some(&["linearized_scale", "linearized_center"]),
            _ => None,
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LemmaId {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        LemmaId::ALL
            .into_iter()
            .find(|id| id.as_str() == lower)
            .ok_or_else(|| ForgeError::InvalidArgument(format!("unknown estimate '{s}', expected one of a1..a7, b1..b4")))
    }
}

/// Geometry of the coercivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoercivityConfig {
    pub lambda: f64,
    /// Separations, largest first; every `d·λ` should be at least 50.
    pub separations: Vec<f64>,
    pub eps: Vec<f64>,
    /// Pair used for the α-block diagonal, far enough apart that the interaction is below the tolerance.
    pub diagonal_separation: f64,
    pub diagonal_lambda: f64,
    /// Absolute tolerance on the α-block diagonal in units of `A`.
    pub diagonal_tol: f64,
    /// Bound `C` in `|δ̂(ε) − δ̂(0)| ≤ C·ε`.
    pub shift_constant: f64,
    pub delta_floor: f64,
}

impl Default for CoercivityConfig {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            separations: vec![10.0, 5.0, 2.5],
            eps: vec![0.0, 1e-2],
            diagonal_separation: 10.0,
            diagonal_lambda: 1000.0,
            diagonal_tol: 1e-6,
            shift_constant: 1.0,
            delta_floor: 0.1,
        }
    }
}

/// Sweep grids for every appendix verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabConfig {
    pub appendix: AppendixConfig,
    pub coercivity: CoercivityConfig,
    /// Exponent of the symmetric profile used by the single-bubble estimates.
    pub beta: f64,
    pub lambdas: Vec<f64>,
    pub separation: f64,
    pub separations: Vec<f64>,
    pub offset_axis: usize,
    pub offset_lambda: f64,
    /// Offsets in units of `1/λ`.
    pub scaled_offsets: Vec<f64>,
    pub fixed_scaled_offset: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            appendix: AppendixConfig::default(),
            coercivity: CoercivityConfig::default(),
            beta: 1.5,
            lambdas: vec![10.0, 20.0, 40.0, 80.0],
            separation: 1.0,
            separations: vec![1.0, 2.0, 4.0, 8.0],
            offset_axis: 0,
            offset_lambda: 20.0,
            scaled_offsets: vec![0.005, 0.01, 0.02, 0.04],
            fixed_scaled_offset: 0.01,
        }
    }
}

/// Positivity of the `v`-block over a separation sweep, its `O(ε)` stability,
/// and the α-block diagonal on a well-separated pair.
pub fn verify_coercivity(dim: &Dimension, cfg: &CoercivityConfig, spec: &QuadratureSpec) -> Result<Verdict> {
    let mut v = Verdict::new("coercivity");
    let eps0 = cfg.eps.first().copied().unwrap_or(0.0);
    let mut previous: Option<f64> = None;
    for &d in &cfg.separations {
        let ac = AppendixConfig { separation: d, ..Default::default() };
        let space = ac.space(dim, cfg.lambda, spec)?;
        let field = ac.field(dim)?;
        let mut base = None;
        for &eps in &cfg.eps {
            let r = coercivity_spectrum(&space, eps, &field, cfg.delta_floor)?;
            v.table.push(SampleRow::raw(&format!("delta_hat eps={eps}"), d, r.delta_hat, 0.0));
            v.check(Check::new(
                format!("delta_hat positive at d={d}, eps={eps}"),
                r.delta_hat >= cfg.delta_floor,
                format!("delta_hat {:.6}, d*lambda {}", r.delta_hat, d * cfg.lambda),
            ));
            match base {
                None => base = Some(r.delta_hat),
                Some(b) => {
                    let shift = (r.delta_hat - b).abs();
                    v.check(Check::new(
                        format!("delta_hat shift O(eps) at d={d}, eps={eps}"),
                        shift <= cfg.shift_constant * (eps - eps0).abs(),
                        format!("|shift| {shift:e}"),
                    ));
                }
            }
        }
        let b = base.unwrap_or(f64::NAN);
        if let Some(prev) = previous {
            v.check(Check::new(
                format!("delta_hat non-increasing down to d={d}"),
                b <= prev,
                format!("{prev:.6} -> {b:.6}"),
            ));
        }
        previous = Some(b);
    }
    let ac = AppendixConfig { separation: cfg.diagonal_separation, ..Default::default() };
    let space = ac.space(dim, cfg.diagonal_lambda, spec)?;
    let r = coercivity_spectrum(&space, 0.0, &ac.field(dim)?, cfg.delta_floor)?;
    let target = -(dim.two_star() - 2.0);
    for (k, d) in r.alpha_diagonal.iter().enumerate() {
        v.table.push(SampleRow::raw("alpha diagonal / A", k as f64, *d, 0.0));
        v.check(Check::new(
            format!("alpha diagonal of peak {k}"),
            (d - target).abs() <= cfg.diagonal_tol,
            format!("measured {d:.9} A, target {target} A ± {}", cfg.diagonal_tol),
        ));
    }
    v.check(Check::new("alpha block not coercive", r.alpha_diagonal.iter().all(|d| *d < 0.0), format!("{:?}", r.alpha_diagonal)));
    Ok(v)
}

fn subset(v: &Verdict, name: &str, estimates: &[&str]) -> Verdict {
    let mut out = Verdict::new(name);
    out.checks = v.checks.iter().filter(|c| estimates.iter().any(|e| c.name.starts_with(e))).cloned().collect();
    out.table = v.table.iter().filter(|r| estimates.contains(&r.series.as_str())).cloned().collect();
    out
}

/// Runs one appendix verifier with the sweep grids of `cfg`.
pub fn verify_lemma(id: LemmaId, dim: &Dimension, cfg: &LabConfig, spec: &QuadratureSpec) -> Result<Verdict> {
    let profile = || KProfile::symmetric(dim, vec![0.0; dim.n()], cfg.beta, 0.0);
    let mut v = if let Some(est) = id.linear_estimates() {
        subset(&verify_linear_bounds(dim, &cfg.appendix, spec)?.verdict, id.as_str(), est)
    } else {
        match id {
            LemmaId::A3 => verify_energy_balance(dim, &cfg.appendix, spec)?.verdict,
            LemmaId::A4 | LemmaId::A5 => verify_coercivity(dim, &cfg.coercivity, spec)?,
            LemmaId::B1 => verify_lemma_b1(dim, &profile()?, &cfg.lambdas, spec)?.verdict,
            LemmaId::B2 => verify_lemma_b2(dim, cfg.separation, &cfg.lambdas, &cfg.separations, spec)?.verdict,
            LemmaId::B3 => {
                verify_lemma_b3(
                    dim,
                    &profile()?,
                    cfg.offset_axis,
                    cfg.offset_lambda,
                    &cfg.scaled_offsets,
                    &cfg.lambdas,
                    cfg.fixed_scaled_offset,
                    spec,
                )?
                .verdict
            }
            LemmaId::B4 => verify_lemma_b4(dim, cfg.separation, &cfg.lambdas, spec)?.verdict,
            _ => unreachable!("linear estimates handled above"),
        }
    };
    v.name = id.as_str().into();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_case_insensitively() {
        for id in LemmaId::ALL {
            assert_eq!(id.as_str().parse::<LemmaId>().unwrap(), id);
            assert_eq!(id.as_str().to_uppercase().parse::<LemmaId>().unwrap(), id);
        }
        assert!("c1".parse::<LemmaId>().is_err());
    }
}
