use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::constants::ExpansionModel;
use crate::error::{ForgeError, Result};
use crate::integrate::QuadratureSpec;
use crate::kprofile::KField;
use crate::reduction::{build_space, reduced_gradients, solve_correction_with, CorrectionOptions, CorrectionSolution, DictSpec, GalerkinSpace};

use super::degree::{brouwer_degree, offset_degree, ProductDegree};
use super::scale::{g_map, jac_g, l_eps, solve_reduced, Rect, ReducedRoot, ScaleLaw};

/// Where the reduced gradients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientSource {
    /// The leading terms: `R_t = g(t)` and `R_x = x`.
    Model,
    /// Correction solve and reduced gradients at every evaluation.
    Full { dict: DictSpec, quadrature: QuadratureSpec, options: CorrectionOptions },
}

impl GradientSource {
    pub fn full(quadrature: QuadratureSpec) -> Self {
        Self::Full { dict: DictSpec::default(), quadrature, options: CorrectionOptions::default() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Full { .. } => "full",
        }
    }
}

/// Search region: `t ∈ [γ₁, γ₂]²` and `|xᵏ| ≤ δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReducedBox {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta: f64,
}

impl Default for ReducedBox {
    fn default() -> Self {
        Self { gamma1: 0.25, gamma2: 4.0, delta: 1.0 }
    }
}

impl ReducedBox {
    pub fn t_box(&self) -> Result<Rect> {
        Rect::square(self.gamma1, self.gamma2)
    }
}

/// The rescaled two-peak system at one `ε`.
///
/// `λ_k = t_k L_ε^(1/β_k)` and `yᵏ = zᵏ + xᵏ/λ_k`. The residuals are the
/// reduced gradients divided by the sizes of their leading terms:
/// `R_t = −λ_k∂J/∂λ_k/(C_k|Σaᵏ|ε/L_ε)` and `R_xᵢ = −∂J/∂yᵏᵢ/(εD_k aᵏᵢ λ_k^(1−β_k))`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub dim: Dimension,
    pub field: KField,
    pub eps: f64,
    pub model: ExpansionModel,
    pub scale: ScaleLaw,
}

/// Residuals of the rescaled system at one `(t, x)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub r_t: [f64; 2],
    pub r_x: [Vec<f64>; 2],
    pub lambda: [f64; 2],
    pub y: [Vec<f64>; 2],
    pub solved: Option<(GalerkinSpace, CorrectionSolution)>,
}

impl ReducedSystem {
    pub fn new(dim: &Dimension, field: &KField, eps: f64, model: &ExpansionModel) -> Result<Self> {
        if field.profiles.len() != 2 {
            return Err(ForgeError::InvalidArgument("the reduced system needs two profiles".into()));
        }
        let scale = l_eps(eps, model.beta[0], model.beta[1], dim)?;
        Ok(Self { dim: *dim, field: field.clone(), eps, model: model.clone(), scale })
    }

    pub fn lambdas(&self, t: [f64; 2]) -> [f64; 2] {
        [self.scale.lambda(t[0], self.model.beta[0]), self.scale.lambda(t[1], self.model.beta[1])]
    }

    pub fn centers(&self, t: [f64; 2], x: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let l = self.lambdas(t);
        [0, 1].map(|k| self.field.profiles[k].z.iter().zip(&x[k]).map(|(z, xi)| z + xi / l[k]).collect())
    }

    pub fn evaluate(&self, t: [f64; 2], x: &[Vec<f64>; 2], source: &GradientSource) -> Result<Evaluation> {
        let lambda = self.lambdas(t);
        let y = self.centers(t, x);
        match source {
            GradientSource::Model => Ok(Evaluation {
                r_t: g_map(t, self.model.mk, self.model.beta, &self.dim)?,
                r_x: x.clone(),
                lambda,
                y,
                solved: None,
            }),
            GradientSource::Full { dict, quadrature, options } => {
                let space = build_space(&self.dim, &y, &lambda, dict, quadrature)?;
                let sol = solve_correction_with(&space, self.eps, &self.field, options)?;
                let grads = reduced_gradients(&space, &sol)?;
                let lead = self.eps / self.scale.value;
                let r_t = [0, 1].map(|k| {
                    -lambda[k] * grads.lambda[k] / (self.model.c_n_beta[k] * self.model.sum_a[k].abs() * lead)
                });
                let r_x = [0, 1].map(|k| {
                    let p = &self.field.profiles[k];
                    let size = self.eps * self.model.d_n_beta[k] * lambda[k].powf(1.0 - p.beta);
                    grads.y[k].iter().zip(&p.a).map(|(g, a)| -g / (size * a)).collect::<Vec<f64>>()
                });
                Ok(Evaluation { r_t, r_x, lambda, y, solved: Some((space, sol)) })
            }
        }
    }
}

/// Solution of the rescaled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub source: String,
    pub eps: f64,
    pub t: [f64; 2],
    pub x: [Vec<f64>; 2],
    pub m: [f64; 2],
    pub beta: [f64; 2],
    pub scale: ScaleLaw,
    pub lambda: [f64; 2],
    pub y: [Vec<f64>; 2],
    pub residual_t: [f64; 2],
    pub residual_x: f64,
    pub iterations: usize,
    pub step_trace: Vec<f64>,
    /// The model root the iteration started from.
    pub model_root: ReducedRoot,
}

fn sup_x(x: &[Vec<f64>; 2]) -> f64 {
    x.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solves `R_t = 0`, `R_x = 0` by chord Newton with the model Jacobian
/// `diag(Jac g(t*), I)`, starting from the model root `(t*, 0)`.
pub fn solve_full_reduced(
    dim: &Dimension,
    field: &KField,
    eps: f64,
    model: &ExpansionModel,
    source: &GradientSource,
    bx: &ReducedBox,
) -> Result<ReducedPoint> {
    let sys = ReducedSystem::new(dim, field, eps, model)?;
    let t_box = bx.t_box()?;
    let root = solve_reduced(model.mk, model.beta, dim, &t_box)?;
    let jac = jac_g(root.t, model.mk, model.beta, dim)?;
    let n = dim.n();
    let mut t = root.t;
    let mut x = [vec![0.0; n], vec![0.0; n]];
    let mut trace = Vec::new();
    let mut rising = 0;
    let max_iter = 30;
    for it in 1..=max_iter {
        let ev = sys.evaluate(t, &x, source)?;
        let dt = jac.solve(ev.r_t).ok_or_else(|| ForgeError::Singular("model Jacobian".into()))?;
        let step = dt[0].abs().max(dt[1].abs()).max(sup_x(&ev.r_x));
        let done = step <= 1e-9 * t[0].max(t[1]);
        let converged_point = |iterations: usize, trace: Vec<f64>| ReducedPoint {
            source: source.name().into(),
            eps,
            t,
            x: x.clone(),
            m: model.mk,
            beta: model.beta,
            scale: sys.scale,
            lambda: ev.lambda,
            y: ev.y.clone(),
            residual_t: ev.r_t,
            residual_x: sup_x(&ev.r_x),
            iterations,
            step_trace: trace,
            model_root: root.clone(),
        };
        if done {
            trace.push(step);
            return Ok(converged_point(it, trace));
        }
        if let Some(&last) = trace.last() {
            rising = if step > last { rising + 1 } else { 0 };
        }
        trace.push(step);
        if rising >= 3 || !step.is_finite() {
            return Err(ForgeError::NewtonFailure(format!("chord iteration diverged; steps {trace:?}")));
        }
        t = [t[0] - dt[0], t[1] - dt[1]];
        for k in 0..2 {
            for i in 0..n {
                x[k][i] -= ev.r_x[k][i];
            }
        }
        if !t_box.contains(t, 0.0) || x.iter().any(|v| norm(v) > bx.delta) {
            return Err(ForgeError::NewtonFailure(format!("iterate left the box: t = {t:?}, |x| = {}; steps {trace:?}", sup_x(&x))));
        }
    }
    Err(ForgeError::NewtonFailure(format!("chord iteration did not converge in {max_iter} steps; steps {trace:?}")))
}

/// Blockwise degree of the rescaled map on `Ω₁ × Ω₂` at a solved point.
///
/// The scale block is the winding of `t ↦ R_t(t, x*)` on `[γ₁, γ₂]²`; the
/// offset block is certified on the `4n` points `±δ eᵢ` of the sphere
/// `∂(B_δ × B_δ)` at `t*`.
pub fn reduced_degree(
    dim: &Dimension,
    field: &KField,
    point: &ReducedPoint,
    model: &ExpansionModel,
    source: &GradientSource,
    bx: &ReducedBox,
    grid_res: usize,
) -> Result<ProductDegree> {
    let sys = ReducedSystem::new(dim, field, point.eps, model)?;
    let n = dim.n();
    let scale = brouwer_degree(|t| Ok(sys.evaluate(t, &point.x, source)?.r_t), &bx.t_box()?, grid_res)?;
    let mut samples = Vec::with_capacity(4 * n);
    for k in 0..2 {
        for i in 0..n {
            for s in [bx.delta, -bx.delta] {
                let mut x = [vec![0.0; n], vec![0.0; n]];
                x[k][i] = s;
                let r = sys.evaluate(point.t, &x, source)?.r_x;
                samples.push((x.concat(), r.concat()));
            }
        }
    }
    Ok(ProductDegree::new(offset_degree(&samples, bx.delta)?, scale))
}
