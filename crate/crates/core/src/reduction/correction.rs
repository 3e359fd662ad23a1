use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubble::dist2;
use crate::constants::{f_constant, g_constant};
use crate::error::{ForgeError, Result};
use crate::integrate::TwoCenterRule;
use crate::kprofile::KField;

use super::dictionary::{Entry, Tag};
use super::forms::{alpha_hat, assemble, baseline, interaction_power, Assembled, CloudData};
use super::space::{GalerkinSpace, SpaceSummary};

/// Knobs of the correction solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionOptions {
    /// Overrides the default `α̂ⱼ = (1 + εK(zʲ))^(−(n−4)/8)`.
    pub alpha_hat: Option<Vec<f64>>,
    pub tol: f64,
    pub max_iter: usize,
    /// Relative parameter step for the moving-constraint derivatives.
    pub fd_step: f64,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self { alpha_hat: None, tol: 1e-10, max_iter: 50, fd_step: 1e-4 }
    }
}

/// Iterates and step norms of `ω ← −Q⁻¹(f + DR(ω))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointTrace {
    pub omega: DVector<f64>,
    pub iterations: usize,
    pub steps: Vec<f64>,
}

/// Solves `f + Qω + DR(ω) = 0` by the iteration `ω ← −Q⁻¹(f + DR(ω))` from `ω = 0`.
///
/// Stops when the step falls below `tol·‖ω‖`; three consecutive step
/// increases count as divergence.
pub fn fixed_point(
    f: &DVector<f64>,
    q: &DMatrix<f64>,
    mut dr: impl FnMut(&DVector<f64>) -> DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointTrace> {
    let lu = q.clone().lu();
    if !lu.is_invertible() {
        return Err(ForgeError::Singular("quadratic form of the correction problem".into()));
    }
    let mut omega = DVector::zeros(f.len());
    let mut steps = Vec::new();
    let mut rising = 0;
    for it in 1..=max_iter {
        let rhs = -(f + dr(&omega));
        let next = lu.solve(&rhs).ok_or_else(|| ForgeError::Singular("correction step".into()))?;
        let step = (&next - &omega).norm();
        if !step.is_finite() {
            steps.push(step);
            return Err(ForgeError::Divergence { trace: steps });
        }
        if let Some(&last) = steps.last() {
            rising = if step > last { rising + 1 } else { 0 };
        }
        steps.push(step);
        omega = next;
        if step <= tol * omega.norm() {
            return Ok(FixedPointTrace { omega, iterations: it, steps });
        }
        if rising >= 3 {
            return Err(ForgeError::Divergence { trace: steps });
        }
    }
    Err(ForgeError::NonConvergence {
        what: "correction fixed point".into(),
        value: omega.norm(),
        change: *steps.last().unwrap_or(&f64::NAN),
    })
}

/// Lagrange multipliers of one peak: `A` for `U`, `B` for `∂λU`, `C_i` for `∂yᵢU`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakMultipliers {
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub peaks: Vec<PeakMultipliers>,
    /// Diagonal of the multiplier system divided by `A`, `F/λ²`, `Gλ²`, minus one, per constraint.
    pub diagonal_deviation: Vec<f64>,
    /// Largest off-diagonal coefficient relative to the geometric mean of its diagonals.
    pub max_off_diagonal: f64,
}

/// The solved correction and everything downstream needs from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSolution {
    pub eps: f64,
    pub alpha_hat: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    /// `α̂ + ᾱ`.
    pub alpha: Vec<f64>,
    pub v_coeffs: Vec<f64>,
    pub v_norm: f64,
    pub iterations: usize,
    pub step_trace: Vec<f64>,
    /// `‖Q⁻¹‖`, `‖f‖`, `‖ω‖` in the scaled norm `(√A ᾱ, v)`.
    pub q_inv_norm: f64,
    pub f_norm: f64,
    pub omega_norm: f64,
    pub residual_norm: f64,
    /// Smallest eigenvalue of the `v`-block.
    pub coercivity: f64,
    /// Largest `|⟨τ, v⟩|/(‖τ‖‖v‖)` over constraint functions.
    pub constraint_violation: f64,
    /// `⟨I'(u), τ⟩` for every constraint function, in constraint order.
    pub constraint_rhs: Vec<f64>,
    /// `⟨∂θτ, v⟩` per peak, parameter (`λ`, then `y₁…y_n`) and constraint slot.
    pub moving_constraints: Vec<Vec<Vec<f64>>>,
    pub energy: f64,
    pub mc_warnings: usize,
    pub multipliers: MultiplierReport,
    pub space: SpaceSummary,
}

pub fn solve_correction(space: &GalerkinSpace, eps: f64, field: &KField) -> Result<CorrectionSolution> {
    solve_correction_with(space, eps, field, &CorrectionOptions::default())
}

pub fn solve_correction_with(
    space: &GalerkinSpace,
    eps: f64,
    field: &KField,
    opts: &CorrectionOptions,
) -> Result<CorrectionSolution> {
    let np = space.peaks();
    let m = space.basis_size();
    let ah = opts.alpha_hat.clone().unwrap_or_else(|| alpha_hat(&space.dim, field, eps, np));
    if ah.len() != np {
        return Err(ForgeError::InvalidArgument(format!("{} weights for {np} peaks", ah.len())));
    }
    let cd = CloudData::new(space, field);
    let asm = assemble(space, field, eps, &ah, &cd);
    let scale: Vec<f64> = (0..np).map(|k| 1.0 / space.gram[(space.constraint(k, Tag::Value), space.constraint(k, Tag::Value))].sqrt()).collect();
    let (f, q) = scaled_system(&asm, &scale);
    let q_eig = nalgebra::SymmetricEigen::new(q.clone()).eigenvalues;
    let q_inv_norm = 1.0 / q_eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let split = |w: &DVector<f64>| -> (Vec<f64>, DVector<f64>) {
        let ab = (0..np).map(|k| w[k] * scale[k]).collect();
        (ab, w.rows(np, m).into_owned())
    };
    let scaled_remainder = |w: &DVector<f64>| -> DVector<f64> {
        let (ab, c) = split(w);
        let (dr_c, dr_v) = asm.remainder(space, &cd, &ab, &cd.v_values(&c));
        let mut out = DVector::zeros(np + m);
        for k in 0..np {
            out[k] = dr_c[asm.alpha_rows[k]] * scale[k];
        }
        out.rows_mut(np, m).copy_from(&dr_v);
        out
    };
    let trace = fixed_point(&f, &q, scaled_remainder, opts.tol, opts.max_iter)?;
    let (alpha_bar, c) = split(&trace.omega);
    let v = cd.v_values(&c);
    let (dr_c, _) = asm.remainder(space, &cd, &alpha_bar, &v);
    let residual = &f + &q * &trace.omega + scaled_remainder(&trace.omega);

    let mut constraint_rhs = asm.f_cons.clone() + &asm.l_cons_alpha * DVector::from_vec(alpha_bar.clone()) + &asm.l_cons_v * &c + dr_c;
    // The α rows are the solved equations; keep their converged value rather than re-derived noise.
    for k in 0..np {
        constraint_rhs[asm.alpha_rows[k]] = residual[k] / scale[k];
    }
    let inner = space.dictionary_basis_inner() * &c;
    let v_norm = c.norm();
    let constraint_violation = if v_norm > 0.0 {
        space
            .constraint_idx
            .iter()
            .map(|&a| inner[a].abs() / (space.gram[(a, a)].sqrt() * v_norm))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let alpha: Vec<f64> = ah.iter().zip(&alpha_bar).map(|(a, b)| a + b).collect();
    let moving_constraints = (0..np).map(|k| moving_constraint_terms(space, &cd, k, &v, opts.fd_step)).collect();
    let energy = energy_from_cloud(space, &cd, &alpha, &c, &v, eps, field);
    let coercivity = asm.quadratic_form().coercivity();
    let mut sol = CorrectionSolution {
        eps,
        alpha_hat: ah,
        alpha_bar,
        alpha,
        v_coeffs: c.iter().cloned().collect(),
        v_norm,
        iterations: trace.iterations,
        step_trace: trace.steps,
        q_inv_norm,
        f_norm: f.norm(),
        omega_norm: trace.omega.norm(),
        residual_norm: residual.norm(),
        coercivity,
        constraint_violation,
        constraint_rhs: constraint_rhs.iter().cloned().collect(),
        moving_constraints,
        energy,
        mc_warnings: asm.mc_warnings,
        multipliers: MultiplierReport { peaks: vec![], diagonal_deviation: vec![], max_off_diagonal: 0.0 },
        space: space.summary(),
    };
    sol.multipliers = lagrange_multipliers(space, &sol)?;
    Ok(sol)
}

/// `(D f, D Q D)` with `D = diag(1/√A, …, 1, …)`, so that `ᾱ` is measured in `D^{2,2}` units.
fn scaled_system(asm: &Assembled, scale: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let qf = asm.quadratic_form();
    let lf = asm.linear_form();
    let np = scale.len();
    let m = asm.q_vv.nrows();
    let mut q = qf.full();
    let mut f = DVector::zeros(np + m);
    for i in 0..np + m {
        let si = if i < np { scale[i] } else { 1.0 };
        f[i] = si * if i < np { lf.alpha[i] } else { lf.v[i - np] };
        for j in 0..np + m {
            let sj = if j < np { scale[j] } else { 1.0 };
            q[(i, j)] *= si * sj;
        }
    }
    (f, q)
}

/// `⟨∂θτ, v⟩ = Σ wᵢ ∂θ(Δ²τ)(xᵢ) v(xᵢ)` by central differences in `θ` on the fixed cloud.
fn moving_constraint_terms(space: &GalerkinSpace, cd: &CloudData, k: usize, v: &[f64], h: f64) -> Vec<Vec<f64>> {
    let dim = &space.dim;
    let n = dim.n();
    let lam = space.lambdas[k];
    let center = &space.centers[k];
    let disp = cd.cloud.disp_to(center);
    let tags: Vec<Tag> = std::iter::once(Tag::Value).chain(std::iter::once(Tag::DLambda)).chain((0..n).map(Tag::DCenter)).collect();
    let integral = |mu: f64, shift: Option<(usize, f64)>, tag: Tag| -> f64 {
        let e = Entry { peak: k, center: center.clone(), mu, tag };
        let mut d = vec![0.0; n];
        (0..cd.len())
            .map(|i| {
                d.copy_from_slice(&disp[i * n..(i + 1) * n]);
                if let Some((ax, s)) = shift {
                    d[ax] -= s;
                }
                cd.w[i] * e.bilaplacian_disp(dim, &d) * v[i]
            })
            .sum()
    };
    let mut out = Vec::with_capacity(n + 1);
    let dl = h * lam;
    out.push(tags.iter().map(|&t| (integral(lam + dl, None, t) - integral(lam - dl, None, t)) / (2.0 * dl)).collect());
    let dy = h / lam;
    for ax in 0..n {
        out.push(
            tags.iter()
                .map(|&t| (integral(lam, Some((ax, dy)), t) - integral(lam, Some((ax, -dy)), t)) / (2.0 * dy))
                .collect(),
        );
    }
    out
}

/// Multipliers from `⟨I'(u), τ⟩ = Σ_σ μ_σ⟨σ, τ⟩` over the constraint functions.
pub fn lagrange_multipliers(space: &GalerkinSpace, solution: &CorrectionSolution) -> Result<MultiplierReport> {
    let idx = &space.constraint_idx;
    let nc = idx.len();
    if solution.constraint_rhs.len() != nc {
        return Err(ForgeError::InvalidArgument("solution does not belong to this space".into()));
    }
    let g = DMatrix::from_fn(nc, nc, |i, j| space.gram[(idx[i], idx[j])]);
    let rhs = DVector::from_column_slice(&solution.constraint_rhs);
    let mu = g.clone().cholesky().ok_or_else(|| ForgeError::Singular("multiplier system".into()))?.solve(&rhs);
    let n = space.dim.n();
    let per = nc / space.peaks();
    let spec = &space.quadrature;
    let a_const = crate::constants::a_closed_form(&space.dim);
    let f1 = f_constant(&space.dim, 1.0, spec)?;
    let g1 = g_constant(&space.dim, 1.0, spec)?;
    let mut diagonal_deviation = Vec::with_capacity(nc);
    for r in 0..nc {
        let lam = space.lambdas[r / per];
        let expected = match r % per {
            0 => a_const,
            1 => f1 / (lam * lam),
            _ => g1 * lam * lam,
        };
        diagonal_deviation.push(g[(r, r)] / expected - 1.0);
    }
    let mut max_off_diagonal: f64 = 0.0;
    for i in 0..nc {
        for j in 0..nc {
            if i != j {
                max_off_diagonal = max_off_diagonal.max(g[(i, j)].abs() / (g[(i, i)] * g[(j, j)]).sqrt());
            }
        }
    }
    let peaks = (0..space.peaks())
        .map(|k| PeakMultipliers { a: mu[k * per], b: mu[k * per + 1], c: (0..n).map(|i| mu[k * per + 2 + i]).collect() })
        .collect();
    Ok(MultiplierReport { peaks, diagonal_deviation, max_off_diagonal })
}

/// Reduced gradients of `J(y, λ) = I(Σαⱼ U_{yʲ,λⱼ} + v(y, λ))` at the solved point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedGradients {
    /// `∂J/∂λ_k`.
    pub lambda: Vec<f64>,
    /// `∂J/∂yᵏ_i`.
    pub y: Vec<Vec<f64>>,
    /// The multiplier part `−Σ μ_τ ⟨∂τ, v⟩` included above, for reference.
    pub lambda_constraint_part: Vec<f64>,
    pub y_constraint_part: Vec<Vec<f64>>,
}

/// Exact discrete derivatives of the reduced energy.
///
/// Moving `λ_k` or `yᵏ` moves both the bubble and the constraint space of
/// `v`; the second effect enters through the multipliers.
pub fn reduced_gradients(space: &GalerkinSpace, solution: &CorrectionSolution) -> Result<ReducedGradients> {
    let n = space.dim.n();
    let nc = space.constraint_idx.len();
    let per = nc / space.peaks();
    let mult = &solution.multipliers;
    let mut out = ReducedGradients { lambda: vec![], y: vec![], lambda_constraint_part: vec![], y_constraint_part: vec![] };
    for k in 0..space.peaks() {
        let m = &mult.peaks[k];
        let mu: Vec<f64> = std::iter::once(m.a).chain(std::iter::once(m.b)).chain(m.c.iter().cloned()).collect();
        let shift = |param: usize| -> f64 { -mu.iter().zip(&solution.moving_constraints[k][param]).map(|(a, b)| a * b).sum::<f64>() };
        let ak = solution.alpha[k];
        let lp = shift(0);
        out.lambda.push(ak * solution.constraint_rhs[k * per + 1] + lp);
        out.lambda_constraint_part.push(lp);
        let yp: Vec<f64> = (0..n).map(|i| shift(1 + i)).collect();
        out.y.push((0..n).map(|i| ak * solution.constraint_rhs[k * per + 2 + i] + yp[i]).collect());
        out.y_constraint_part.push(yp);
    }
    Ok(out)
}

/// `I_ε(Σαⱼ Uⱼ + v)` with `v = Σ c_m ψ_m`.
pub fn energy_value(space: &GalerkinSpace, alpha: &[f64], v_coeffs: &[f64], eps: f64, field: &KField) -> Result<f64> {
    if alpha.len() != space.peaks() || v_coeffs.len() != space.basis_size() {
        return Err(ForgeError::InvalidArgument("weights or coefficients do not match the space".into()));
    }
    let cd = CloudData::new(space, field);
    let c = DVector::from_column_slice(v_coeffs);
    let v = cd.v_values(&c);
    Ok(energy_from_cloud(space, &cd, alpha, &c, &v, eps, field))
}

fn energy_from_cloud(space: &GalerkinSpace, cd: &CloudData, alpha: &[f64], c: &DVector<f64>, v: &[f64], eps: f64, field: &KField) -> f64 {
    let dim = &space.dim;
    let ts = dim.two_star();
    let np = space.peaks();
    let u_idx: Vec<usize> = (0..np).map(|k| space.constraint(k, Tag::Value)).collect();
    let inner = space.dictionary_basis_inner() * c;
    let mut quad = c.norm_squared();
    for j in 0..np {
        quad += 2.0 * alpha[j] * inner[u_idx[j]];
        for l in 0..np {
            quad += alpha[j] * alpha[l] * space.gram[(u_idx[j], u_idx[l])];
        }
    }
    let mut power = 0.0;
    for j in 0..np {
        let k0 = baseline(field, j);
        let own = cd.sum(|i| (cd.k[i] - k0) * dim.pow_2star(cd.u[j][i]));
        power += alpha[j].powf(ts) * ((1.0 + eps * k0) * space.gram[(u_idx[j], u_idx[j])] + eps * own);
    }
    let w: Vec<f64> = (0..cd.len()).map(|i| (0..np).map(|j| alpha[j] * cd.u[j][i]).sum()).collect();
    if np == 2 {
        let d = dist2(&space.centers[0], &space.centers[1]).sqrt();
        let (l0, l1) = (space.lambdas[0], space.lambdas[1]);
        let rule = TwoCenterRule::from_spec(dim, d, [1.0 / l0, 1.0 / l1], &space.quadrature);
        power += rule.integrate(|r1, r2| {
            let a = alpha[0] * crate::bubble::profile(dim, l0, r1 * r1);
            let b = alpha[1] * crate::bubble::profile(dim, l1, r2 * r2);
            interaction_power(ts, a, b)
        });
        power += eps * cd.sum(|i| cd.k[i] * interaction_power(ts, alpha[0] * cd.u[0][i], alpha[1] * cd.u[1][i]));
    }
    // The first-order part 2*∫w^(2*−1)v is mostly ⟨Uⱼ, v⟩, taken from the Gram matrix.
    let first: f64 = (0..np).map(|j| alpha[j].powf(ts - 1.0) * inner[u_idx[j]]).sum::<f64>()
        + cd.sum(|i| {
            let cross = if np == 2 { interaction_power(ts - 1.0, alpha[0] * cd.u[0][i], alpha[1] * cd.u[1][i]) } else { 0.0 };
            cross * v[i]
        });
    power += ts * first;
    power += cd.sum(|i| {
        let second = energy_remainder(ts, w[i], v[i]);
        second + eps * cd.k[i] * (second + ts * w[i].powf(ts - 1.0) * v[i])
    });
    0.5 * quad - power / ts
}

/// `|w + v|^q − w^q − q w^(q−1) v` for `w > 0`.
fn energy_remainder(q: f64, w: f64, v: f64) -> f64 {
    let x = v / w;
    let wq = w.powf(q);
    if x.abs() < 1e-3 {
        let c2 = q * (q - 1.0) / 2.0;
        let c3 = c2 * (q - 2.0) / 3.0;
        let c4 = c3 * (q - 3.0) / 4.0;
        return wq * x * x * (c2 + x * (c3 + x * c4));
    }
    wq * ((1.0 + x).abs().powf(q) - 1.0 - q * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_linear_form_is_fixed_at_origin() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let f = DVector::zeros(2);
        let t = fixed_point(&f, &q, |w| w.map(|x| x * x), 1e-10, 50).unwrap();
        assert_eq!(t.iterations, 1);
        assert_eq!(t.omega.norm(), 0.0);
    }

    #[test]
    fn contraction_converges_to_the_root() {
        // 2ω + ω² = −f has the root ω = −1 + √(1 − f) for f = 0.5.
        let q = DMatrix::from_element(1, 1, 2.0);
        let f = DVector::from_element(1, 0.5);
        let t = fixed_point(&f, &q, |w| w.map(|x| x * x), 1e-12, 50).unwrap();
        assert!((t.omega[0] - (-1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        for w in t.steps.windows(2).skip(1) {
            assert!(w[1] < 0.9 * w[0]);
        }
    }

    #[test]
    fn runaway_iteration_reports_divergence() {
        let q = DMatrix::from_element(1, 1, 1.0);
        let f = DVector::from_element(1, 1.0);
        match fixed_point(&f, &q, |w| w.map(|x| 3.0 * x * x), 1e-12, 50) {
            Err(ForgeError::Divergence { trace }) => assert!(trace.len() >= 4),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
