use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::constants::{constants_table, ConstantRow, ExpansionModel};
use crate::kprofile::KField;
use crate::lab::{verify_lemma, Check, SampleRow, Verdict};
use crate::reduced::{reduced_degree, solve_full_reduced, ProductDegree, ReducedPoint, ReducedSystem};
use crate::error::Result;
use crate::reduction::SpaceSummary;

use super::config::{RunConfig, SCHEMA_VERSION};
use super::positivity::{positivity_check, AssembledSolution, PositivityReport};

/// The constructed solution at one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub eps: f64,
    pub reduced: ReducedPoint,
    pub degree: Option<ProductDegree>,
    pub alpha: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub v_norm: f64,
    /// Dual norm of the Galerkin residual of the correction equation.
    pub residual_norm: f64,
    pub correction_iterations: usize,
    pub omega_norm: f64,
    pub q_inv_norm: f64,
    pub f_norm: f64,
    pub coercivity: f64,
    pub constraint_violation: f64,
    pub mc_warnings: usize,
    pub space: SpaceSummary,
    /// `|yʲ − zʲ|`.
    pub center_offsets: [f64; 2],
    pub positivity: PositivityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub error: String,
}

/// Either a constructed point or the stage at which its construction stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub eps: f64,
    pub report: Option<PointReport>,
    pub failure: Option<StageFailure>,
}

/// Wall-clock seconds per stage. Kept out of the report so that reports stay
/// byte-identical across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
}

impl Timing {
    fn record<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push((name.into(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|s| s.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub constants: Vec<ConstantRow>,
    pub model: Option<ExpansionModel>,
    /// Appendix verifiers requested by the config.
    pub verdicts: Vec<Verdict>,
    pub points: Vec<PointOutcome>,
    pub trends: Verdict,
    pub positivity: Verdict,
    /// Failures outside the per-point stages (constants, model).
    pub setup: Verdict,
    pub passed: bool,
    #[serde(skip)]
    pub timing: Timing,
}

impl RunReport {
    pub fn accepted(&self) -> impl Iterator<Item = &PointReport> {
        self.points.iter().filter_map(|p| p.report.as_ref())
    }

    pub fn all_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().chain([&self.setup, &self.trends, &self.positivity])
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn fail(stage: &str) -> impl Fn(crate::ForgeError) -> StageFailure + '_ {
    move |e| StageFailure { stage: stage.into(), error: e.to_string() }
}

/// Solves the reduced system, rebuilds the correction at its root, and checks
/// the degree and the positivity of the assembled solution.
pub fn construct_point(
    cfg: &RunConfig,
    dim: &Dimension,
    field: &KField,
    model: &ExpansionModel,
    eps: f64,
    timing: &mut Timing,
) -> std::result::Result<PointReport, StageFailure> {
    let source = cfg.source();
    let reduced = timing
        .record(format!("reduced solve eps={eps}"), || solve_full_reduced(dim, field, eps, model, &source, &cfg.reduced_box))
        .map_err(fail("reduced solve"))?;
    let sys = ReducedSystem::new(dim, field, eps, model).map_err(fail("reduced system"))?;
    let (space, sol) = timing
        .record(format!("correction eps={eps}"), || sys.evaluate(reduced.t, &reduced.x, &source))
        .map_err(fail("correction"))?
        .solved
        .ok_or_else(|| StageFailure { stage: "correction".into(), error: "full source returned no correction".into() })?;
    let degree = match cfg.degree_resolution {
        Some(res) => Some(
            timing
                .record(format!("degree eps={eps}"), || reduced_degree(dim, field, &reduced, model, &source, &cfg.reduced_box, res))
                .map_err(fail("degree"))?,
        ),
        None => None,
    };
    let u = AssembledSolution::from_correction(&space, &sol).map_err(fail("assembly"))?;
    let positivity = timing
        .record(format!("positivity eps={eps}"), || positivity_check(&u, &cfg.positivity, cfg.seed))
        .map_err(fail("positivity"))?;
    let center_offsets = [0, 1].map(|j| {
        let d: Vec<f64> = reduced.y[j].iter().zip(&field.profiles[j].z).map(|(a, b)| a - b).collect();
        norm(&d)
    });
    Ok(PointReport {
        eps,
        degree,
        alpha: sol.alpha.clone(),
        alpha_hat: sol.alpha_hat.clone(),
        v_norm: sol.v_norm,
        residual_norm: sol.residual_norm,
        correction_iterations: sol.iterations,
        omega_norm: sol.omega_norm,
        q_inv_norm: sol.q_inv_norm,
        f_norm: sol.f_norm,
        coercivity: sol.coercivity,
        constraint_violation: sol.constraint_violation,
        mc_warnings: sol.mc_warnings,
        space: sol.space.clone(),
        center_offsets,
        positivity,
        reduced,
    })
}

/// Least-squares slope of `ln v` against `ln x`.
fn log_slope(samples: &[(f64, f64)]) -> f64 {
    let m = samples.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(x, v)| (x.ln(), v.abs().ln())).unzip();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slack allowed per step in the "monotone within 10%" trends.
const TREND_SLACK: f64 = 0.1;

/// The limits of the construction as `ε` decreases: `‖v‖ → 0`, `yʲ → zʲ`,
/// `λⱼ → ∞` like `ε^(−2)` for the default exponents, and `αⱼ → 1`.
pub fn trend_verdict(cfg: &RunConfig, dim: &Dimension, points: &[PointOutcome]) -> Verdict {
    let mut v = Verdict::new("trends");
    if points.is_empty() {
        return v;
    }
    let ok: Vec<&PointReport> = points.iter().filter_map(|p| p.report.as_ref()).collect();
    v.check(Check::new(
        "every point accepted",
        ok.len() == points.len(),
        format!("{} of {} points constructed", ok.len(), points.len()),
    ));
    if ok.len() < 2 {
        v.check(Check::new("at least two accepted points", false, format!("{} accepted", ok.len())));
        return v;
    }
    for p in &ok {
        if let Some(d) = &p.degree {
            v.check(Check::new(
                format!("product degree -1 at eps={}", p.eps),
                d.degree == -1,
                format!("offset {} x scale {}, min alignment {:.3}", d.offset.degree, d.scale.degree, d.offset.min_alignment),
            ));
        }
    }
    let series = |f: &dyn Fn(&PointReport) -> f64| -> Vec<(f64, f64)> {
        ok.iter().map(|p| (p.eps, f(p))).collect()
    };
    let push = |v: &mut Verdict, name: &str, s: &[(f64, f64)]| {
        for &(e, x) in s {
            v.table.push(SampleRow::raw(name, e, x, 0.0));
        }
    };
    let vn = series(&|p| p.v_norm);
    push(&mut v, "v_norm", &vn);
    v.check(Check::new(
        "v norm strictly decreasing",
        vn.windows(2).all(|w| w[1].1 < w[0].1),
        format!("{:?}", vn.iter().map(|s| s.1).collect::<Vec<_>>()),
    ));
    // λ_k = t_k L_ε^(1/β_k) with L_ε = ε^(β₁β₂/(β₁β₂ − k(β₁+β₂))).
    let b = [cfg.profiles[0].beta, cfg.profiles[1].beta];
    let k = dim.k();
    let expo = b[0] * b[1] / (b[0] * b[1] - k * (b[0] + b[1]));
    for j in 0..2 {
        let lam = series(&|p| p.reduced.lambda[j]);
        push(&mut v, &format!("lambda{}", j + 1), &lam);
        let slope = log_slope(&lam);
        let predicted = expo / b[j];
        let mut c = Check::within(format!("lambda{} slope in eps", j + 1), slope, predicted, 0.2);
        c.detail = format!("{}; values {:?}", c.detail, lam.iter().map(|s| s.1).collect::<Vec<_>>());
        v.check(c);
        let off = series(&|p| p.center_offsets[j]);
        push(&mut v, &format!("offset{}", j + 1), &off);
        v.check(Check::new(
            format!("|y{0} - z{0}| decreasing", j + 1),
            off.windows(2).all(|w| w[1].1 < w[0].1),
            format!("{:?}", off.iter().map(|s| s.1).collect::<Vec<_>>()),
        ));
        let al = series(&|p| (p.alpha[j] - 1.0).abs());
        push(&mut v, &format!("|alpha{} - 1|", j + 1), &al);
        v.check(Check::new(
            format!("alpha{} tends to 1", j + 1),
            al.windows(2).all(|w| w[1].1 <= (1.0 + TREND_SLACK) * w[0].1),
            format!("{:?}", al.iter().map(|s| s.1).collect::<Vec<_>>()),
        ));
    }
    v
}

/// Constants, requested appendix verifiers, and the ε-sweep of the construction.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dim = cfg.dim()?;
    let field = cfg.field();
    let spec = cfg.quadrature();
    let mut timing = Timing::default();
    let mut setup = Verdict::new("setup");

    let constants = match timing.record("constants", || constants_table(&dim, &cfg.betas, &spec)) {
        Ok(rows) => {
            setup.check(Check::new("constants", true, format!("{} rows", rows.len())));
            rows
        }
        Err(e) => {
            setup.check(Check::new("constants", false, e.to_string()));
            Vec::new()
        }
    };
    let mut verdicts = Vec::new();
    for &id in &cfg.verify {
        let v = timing.record(format!("verify {id}"), || verify_lemma(id, &dim, &cfg.lab, &spec));
        verdicts.push(v.unwrap_or_else(|e| {
            let mut f = Verdict::new(id.as_str());
            f.check(Check::new("verifier ran", false, e.to_string()));
            f
        }));
    }
    let model = timing.record("expansion model", || ExpansionModel::analytic(&dim, &field, &spec));
    let model = match model {
        Ok(m) => {
            setup.check(Check::new("expansion model", true, format!("m = {:?}", m.mk)));
            Some(m)
        }
        Err(e) => {
            setup.check(Check::new("expansion model", false, e.to_string()));
            None
        }
    };

    let mut points = Vec::new();
    for &eps in &cfg.eps {
        let outcome = match &model {
            Some(m) => construct_point(cfg, &dim, &field, m, eps, &mut timing),
            None => Err(StageFailure { stage: "expansion model".into(), error: "no model".into() }),
        };
        match outcome {
            Ok(r) => {
                log::info!("eps {eps}: lambda {:?}, |v| {:e}", r.reduced.lambda, r.v_norm);
                points.push(PointOutcome { eps, report: Some(r), failure: None });
            }
            Err(f) => {
                log::warn!("eps {eps}: {} failed: {}", f.stage, f.error);
                points.push(PointOutcome { eps, report: None, failure: Some(f) });
            }
        }
    }
    let trends = trend_verdict(cfg, &dim, &points);
    let mut positivity = Verdict::new("positivity");
    for p in points.iter().filter_map(|p| p.report.as_ref()) {
        let r = &p.positivity;
        positivity.check(Check::new(
            format!("positive at eps={}", p.eps),
            r.verdict.passed(),
            format!("min u = {:e}, |u^-| = {:e}", r.min_value, r.negative_norm),
        ));
        positivity.table.push(SampleRow::raw("min u / U_peak", p.eps, r.min_relative, 0.0));
    }
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        constants,
        model,
        verdicts,
        points,
        trends,
        positivity,
        setup,
        passed: false,
        timing,
    };
    let passed = report.all_verdicts().all(Verdict::passed);
    report.passed = passed;
    Ok(report)
}
