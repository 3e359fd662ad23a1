use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};
use crate::integrate::QuadratureSpec;
use crate::kprofile::{KField, KProfile};
use crate::lab::{LabConfig, LemmaId};
use crate::reduced::{GradientSource, ReducedBox};
use crate::reduction::{CorrectionOptions, DictSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Sampling of the positivity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PositivityConfig {
    /// Points drawn from the two-bubble importance mixture.
    pub cloud_samples: usize,
    /// Uniform points per ball around each center.
    pub ball_samples: usize,
    /// Ball radius in units of the local concentration length `1/μ`.
    pub ball_radius: f64,
    /// Bound on the `L^(2*)` norm of the negative part.
    pub negative_tol: f64,
    /// Log-spaced spherical shells about the midpoint of the peaks, out to `far_radius`.
    pub far_shells: usize,
    pub shell_samples: usize,
    pub far_radius: f64,
    /// Number of most negative points reported on failure.
    pub witnesses: usize,
}

impl Default for PositivityConfig {
    fn default() -> Self {
        Self {
            cloud_samples: 10_000,
            ball_samples: 2_000,
            ball_radius: 4.0,
            negative_tol: 1e-8,
            far_shells: 24,
            shell_samples: 32,
            far_radius: 1e3,
            witnesses: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("forge-out") }
    }
}

/// Everything a run needs; loaded from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub n: usize,
    pub profiles: Vec<KProfile>,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub dict: DictSpec,
    pub correction: CorrectionOptions,
    pub reduced_box: ReducedBox,
    /// Boundary grid of the scale-block degree; `null` skips the degree.
    pub degree_resolution: Option<usize>,
    pub positivity: PositivityConfig,
    /// Appendix estimates to verify alongside the pipeline.
    pub verify: Vec<LemmaId>,
    pub lab: LabConfig,
    /// Exponents tabulated in the constants table.
    pub betas: Vec<f64>,
    pub outputs: OutputConfig,
    /// Seeds every sampled quantity; overrides `quadrature.seed`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let n = 6;
        let mut z2 = vec![0.0; n];
        z2[0] = 2.5;
        let profile = |z: Vec<f64>| KProfile { z, a: vec![-1.0; n], beta: 1.5, sigma: 0.5, k0: 0.0, r0: 1.0 };
        let quadrature = QuadratureSpec::default();
        Self {
            schema_version: SCHEMA_VERSION,
            n,
            profiles: vec![profile(vec![0.0; n]), profile(z2)],
            eps: vec![8e-3, 4e-3, 2e-3],
            seed: quadrature.seed,
            quadrature,
            dict: DictSpec::default(),
            correction: CorrectionOptions::default(),
            reduced_box: ReducedBox::default(),
            degree_resolution: Some(2),
            positivity: PositivityConfig::default(),
            verify: Vec::new(),
            lab: LabConfig::default(),
            betas: vec![1.5],
            outputs: OutputConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> ForgeError {
    ForgeError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> Result<Dimension> {
        Dimension::for_theorem(self.n)
    }

    pub fn field(&self) -> KField {
        KField::new(self.profiles.clone())
    }

    /// The quadrature spec with the run seed applied.
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { seed: self.seed, ..self.quadrature.clone() }
    }

    pub fn source(&self) -> GradientSource {
        GradientSource::Full { dict: self.dict.clone(), quadrature: self.quadrature(), options: self.correction.clone() }
    }

    /// Cross-field checks; every constructor of a run goes through here.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let dim = self.dim().map_err(|e| bad(e.to_string()))?;
        if self.profiles.len() != 2 {
            return Err(bad(format!("need exactly two profiles, got {}", self.profiles.len())));
        }
        for (j, p) in self.profiles.iter().enumerate() {
            p.validate(&dim).map_err(|e| bad(format!("profile {j}: {e}")))?;
        }
        if self.field().separation() <= 0.0 {
            return Err(bad("the two critical points coincide"));
        }
        validate_eps(&self.eps)?;
        self.quadrature.validate().map_err(|e| bad(e.to_string()))?;
        let b = &self.reduced_box;
        if !(b.gamma1 > 0.0 && b.gamma2 > b.gamma1 && b.delta > 0.0) {
            return Err(bad(format!("reduced box needs 0 < gamma1 < gamma2 and delta > 0, got {b:?}")));
        }
        if self.degree_resolution == Some(0) {
            return Err(bad("degree_resolution must be positive"));
        }
        if self.dict.scale_factors.iter().any(|&f| !(f > 0.0)) {
            return Err(bad("dictionary scale factors must be positive"));
        }
        let pc = &self.positivity;
        if pc.cloud_samples < 8 || !(pc.ball_radius > 0.0) || !(pc.far_radius > 0.0) || !(pc.negative_tol >= 0.0) {
            return Err(bad(format!("invalid positivity settings {pc:?}")));
        }
        for &beta in &self.betas {
            if !(beta > 1.0 && beta < dim.nf() - 4.0) {
                return Err(bad(format!("tabulated beta {beta} outside (1, {})", self.n - 4)));
            }
        }
        Ok(())
    }
}

/// The sweep must be positive, below 1, and strictly decreasing.
pub fn validate_eps(eps: &[f64]) -> Result<()> {
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(bad(format!("every eps must lie in (0, 1): {eps:?}")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(bad(format!("eps list must be strictly decreasing: {eps:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates_and_roundtrips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_documents_take_defaults() {
        let cfg = RunConfig::from_json(r#"{"eps": [1e-2, 5e-3]}"#).unwrap();
        assert_eq!(cfg.eps, vec![1e-2, 5e-3]);
        assert_eq!(cfg.n, 6);
    }

    #[test]
    fn cross_field_errors() {
        for doc in [
            r#"{"schema_version": 2}"#,
            r#"{"n": 5}"#,
            r#"{"eps": [1e-3, 2e-3]}"#,
            r#"{"eps": [0.0]}"#,
            r#"{"reduced_box": {"gamma1": 2.0, "gamma2": 1.0}}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"betas": [2.5]}"#,
        ] {
            assert!(matches!(RunConfig::from_json(doc), Err(ForgeError::Config(_))), "{doc}");
        }
        let mut cfg = RunConfig::default();
        cfg.profiles[1].a = vec![1.0; 6];
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.profiles[1].z = vec![0.0; 6];
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.profiles.pop();
        assert!(cfg.validate().is_err());
    }
}
