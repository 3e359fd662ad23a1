use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubble::{dist2, Dimension};
use crate::error::Result;
use crate::integrate::{axial_power_moments, CloudSpec, SampleCloud, TwoCenterRule};
use crate::kprofile::KField;

use super::dictionary::{radial_triplet, Tag};
use super::space::{group_sites, GalerkinSpace};

/// `(a + b)^q − a^q` without cancellation when `b ≪ a`.
#[inline]
pub(crate) fn power_increment(q: f64, a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        return b.powf(q);
    }
    a.powf(q) * (q * (b / a).ln_1p()).exp_m1()
}

/// `(a + b)^p − a^p − b^p` for nonnegative `a`, `b`.
#[inline]
pub(crate) fn interaction_power(p: f64, a: f64, b: f64) -> f64 {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    if b <= 0.0 {
        return 0.0;
    }
    power_increment(p, a, b) - b.powf(p)
}

/// `N(w + δ) − N(w) − p w^(p−1) δ` with `N(s) = |s|^(p−1)s` and `w > 0`.
#[inline]
pub(crate) fn taylor_remainder(p: f64, w: f64, delta: f64) -> f64 {
    if w <= 0.0 {
        return (delta.abs().powf(p - 1.0)) * delta;
    }
    let q = delta / w;
    let wp = w.powf(p);
    if q.abs() < 1e-3 {
        let c2 = p * (p - 1.0) / 2.0;
        let c3 = c2 * (p - 2.0) / 3.0;
        let c4 = c3 * (p - 3.0) / 4.0;
        let c5 = c4 * (p - 4.0) / 5.0;
        return wp * q * q * (c2 + q * (c3 + q * (c4 + q * c5)));
    }
    let s = 1.0 + q;
    wp * (s.signum() * s.abs().powf(p) - 1.0 - p * q)
}

/// `α̂ⱼ = (1 + εK(zʲ))^(−(n−4)/8)`, the maximizer of `½α²A − (α^(2*)/2*)(1+εK(zʲ))A`.
pub fn alpha_hat(dim: &Dimension, field: &KField, eps: f64, peaks: usize) -> Vec<f64> {
    (0..peaks).map(|j| (1.0 + eps * baseline(field, j)).powf(-(dim.nf() - 4.0) / 8.0)).collect()
}

pub(crate) fn baseline(field: &KField, j: usize) -> f64 {
    field.profiles.get(j).map(|p| p.k0).unwrap_or(0.0)
}

/// Everything the Monte Carlo parts of the forms need, evaluated once on a
/// seeded cloud drawn from the two-bubble mixture.
pub(crate) struct CloudData {
    pub cloud: SampleCloud,
    pub w: Vec<f64>,
    pub k: Vec<f64>,
    /// `U_j` per peak.
    pub u: Vec<Vec<f64>>,
    /// Dictionary values, `points × entries`.
    pub phi: DMatrix<f64>,
    /// Basis values, `points × basis`.
    pub psi: DMatrix<f64>,
    /// `M_j = Σ aᵢ|xᵢ − zʲᵢ|^β` per peak, the unwindowed model of `K − K0ⱼ`.
    pub kmodel: Vec<Vec<f64>>,
    /// `∫M_k U_k^(2*−1) τ` for the constraint functions of peak `k`, by
    /// deterministic quadrature; `None` when the quadrature did not converge.
    pub own: Vec<Option<Vec<f64>>>,
}

impl CloudData {
    pub fn new(space: &GalerkinSpace, field: &KField) -> Self {
        let dim = &space.dim;
        let q = &space.quadrature;
        let spec = if space.peaks() == 2 {
            CloudSpec { centers: [space.centers[0].clone(), space.centers[1].clone()], lambdas: [space.lambdas[0], space.lambdas[1]] }
        } else {
            CloudSpec::single(space.centers[0].clone(), space.lambdas[0])
        };
        let cloud = SampleCloud::new(dim, &spec, q.mc_samples, q.seed);
        let npts = cloud.len();
        let n = dim.n();
        let mut phi = DMatrix::zeros(npts, space.dictionary.len());
        for site in group_sites(&space.dictionary) {
            let disp = cloud.disp_to(&site.center);
            for i in 0..npts {
                let d = &disp[i * n..(i + 1) * n];
                let (vals, _) = radial_triplet(dim, site.mu, d.iter().map(|v| v * v).sum());
                for &a in &site.members {
                    phi[(i, a)] = match space.dictionary[a].tag {
                        Tag::Value => vals[0],
                        Tag::DLambda => vals[1],
                        Tag::DCenter(ax) => vals[2] * d[ax],
                    };
                }
            }
        }
        let k = k_values(&cloud, field);
        let u = (0..space.peaks()).map(|j| phi.column(space.constraint(j, Tag::Value)).iter().cloned().collect()).collect();
        let psi = &phi * &space.basis;
        let np = space.peaks().min(field.profiles.len());
        let kmodel = (0..np)
            .map(|j| {
                let pr = &field.profiles[j];
                let disp = cloud.disp_to(&pr.z);
                (0..npts)
                    .map(|i| disp[i * n..(i + 1) * n].iter().zip(&pr.a).map(|(d, a)| a * d.abs().powf(pr.beta)).sum())
                    .collect()
            })
            .collect();
        // Far from its critical point the unwindowed model is large where K is not, and the split would cancel.
        let own = (0..np)
            .map(|j| {
                let pr = &field.profiles[j];
                let near = dist2(&space.centers[j], &pr.z).sqrt() <= 0.5 * pr.r0;
                if near { own_model_integrals(space, field, j).ok() } else { None }
            })
            .collect();
        Self { w: cloud.weights().to_vec(), cloud, k, u, phi, psi, kmodel, own }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    /// `Σ wᵢ gᵢ` with an error estimate.
    pub fn integrate(&self, g: &[f64], rel_tol: f64) -> crate::integrate::McEstimate {
        self.cloud.estimate(g, rel_tol)
    }

    pub fn sum(&self, g: impl Fn(usize) -> f64) -> f64 {
        (0..self.len()).map(|i| self.w[i] * g(i)).sum()
    }

    /// `v` at every point for basis coefficients `c`.
    pub fn v_values(&self, c: &DVector<f64>) -> Vec<f64> {
        if c.is_empty() {
            return vec![0.0; self.len()];
        }
        (&self.psi * c).iter().cloned().collect()
    }
}

/// `∫M_k U_k^(2*−1) τ` for `τ = U_k, ∂λU_k, ∂y₁U_k, …`.
///
/// Each term `aᵢ|xᵢ − zᵢ|^β` depends on one coordinate, so the integrals
/// reduce to axial-transverse quadrature; against `∂y_jU_k` only the `j` term
/// survives by parity.
pub(crate) fn own_model_integrals(space: &GalerkinSpace, field: &KField, k: usize) -> Result<Vec<f64>> {
    let dim = &space.dim;
    let n = dim.n();
    let pr = &field.profiles[k];
    let lam = space.lambdas[k];
    let g = |r2: f64| {
        let (t, _) = radial_triplet(dim, lam, r2);
        let up = dim.pow_p(t[0]);
        [up * t[0], up * t[1], up * t[2]]
    };
    let mut out = vec![0.0; n + 2];
    for i in 0..n {
        let s = space.centers[k][i] - pr.z[i];
        let m = axial_power_moments(dim, pr.beta, s, 1.0 / lam, g, &space.quadrature)?;
        out[0] += pr.a[i] * m[0][0];
        out[1] += pr.a[i] * m[1][0];
        out[2 + i] = pr.a[i] * m[2][1];
    }
    Ok(out)
}

pub(crate) fn k_values(cloud: &SampleCloud, field: &KField) -> Vec<f64> {
    let n = cloud.dim();
    let disps: Vec<Vec<f64>> = field.profiles.iter().map(|p| cloud.disp_to(&p.z)).collect();
    (0..cloud.len())
        .map(|i| {
            let refs: Vec<&[f64]> = disps.iter().map(|d| &d[i * n..(i + 1) * n]).collect();
            field.value_from_disps(&refs)
        })
        .collect()
}

/// Two-center integrals against the constraint functions of one peak `k`:
/// `∫R τ` and `∫D_k U_l τ` for `l = k, other`, where `R = ŵ^p − Σ(α̂ⱼUⱼ)^p` and
/// `D_k = ŵ^(p−1) − (α̂_kU_k)^(p−1)`.
#[derive(Debug, Clone)]
pub(crate) struct PeakInteraction {
    /// Indexed by constraint slot `U, ∂λU, ∂y₁U, …`.
    pub rc: Vec<f64>,
    pub d_own: Vec<f64>,
    pub d_other: Vec<f64>,
}

pub(crate) fn peak_interaction(space: &GalerkinSpace, alpha: &[f64], k: usize) -> PeakInteraction {
    let dim = &space.dim;
    let n = dim.n();
    let p = dim.p();
    let l = 1 - k;
    let (yk, yl) = (&space.centers[k], &space.centers[l]);
    let (lk, ll) = (space.lambdas[k], space.lambdas[l]);
    let d = dist2(yk, yl).sqrt();
    let rule = TwoCenterRule::from_spec(dim, d, [1.0 / lk, 1.0 / ll], &space.quadrature);
    let e: Vec<f64> = if rule.is_coincident() { vec![0.0; n] } else { yl.iter().zip(yk).map(|(b, a)| (b - a) / d).collect() };
    let (ak, al) = (alpha[k], alpha[l]);
    let m = rule.moments_many::<9>(|r1, r2| {
        let (t, _) = radial_triplet(dim, lk, r1 * r1);
        let ul = crate::bubble::profile(dim, ll, r2 * r2);
        let (a, b) = (ak * t[0], al * ul);
        let rc = interaction_power(p, a, b);
        let dk = power_increment(p - 1.0, a, b);
        [rc * t[0], rc * t[1], rc * t[2], dk * t[0] * t[0], dk * t[0] * t[1], dk * t[0] * t[2], dk * ul * t[0], dk * ul * t[1], dk * ul * t[2]]
    });
    let pick = |base: usize| -> Vec<f64> {
        let mut out = vec![m[base].m0, m[base + 1].m0];
        out.extend((0..n).map(|i| m[base + 2].first(e[i])));
        out
    };
    PeakInteraction { rc: pick(0), d_own: pick(3), d_other: pick(6) }
}

/// Standard error, relative to `∫|g|`, above which an MC entry is flagged.
const MC_WARN: f64 = 1e-2;

/// `c_τ` with `Δ²τ = c_τ U^(2*−2) τ`.
fn c_tau(dim: &Dimension, tag: Tag) -> f64 {
    match tag {
        Tag::Value => 1.0,
        _ => dim.p(),
    }
}

/// Linear and quadratic parts of the energy expansion about `Σα̂ⱼUⱼ`, tested
/// against every constraint function and every basis element.
#[derive(Debug, Clone)]
pub(crate) struct Assembled {
    pub eps: f64,
    pub alpha_hat: Vec<f64>,
    pub f_cons: DVector<f64>,
    pub f_v: DVector<f64>,
    /// `L_τ[U_l]`, constraints × peaks.
    pub l_cons_alpha: DMatrix<f64>,
    /// `L_τ[ψ_m]`, constraints × basis.
    pub l_cons_v: DMatrix<f64>,
    pub q_vv: DMatrix<f64>,
    /// Constraint rows of the `U_k` directions.
    pub alpha_rows: Vec<usize>,
    pub mc_warnings: usize,
}

pub(crate) fn assemble(space: &GalerkinSpace, field: &KField, eps: f64, ah: &[f64], cd: &CloudData) -> Assembled {
    let dim = &space.dim;
    let p = dim.p();
    let np = space.peaks();
    let npts = cd.len();
    let nc = space.constraint_idx.len();
    let per = nc / np;
    let m = space.basis_size();
    let k0: Vec<f64> = (0..np).map(|j| baseline(field, j)).collect();
    let g_ab = space.dictionary_basis_inner();
    let uidx: Vec<usize> = (0..np).map(|j| space.constraint(j, Tag::Value)).collect();

    // Pointwise pieces.
    let w_hat: Vec<f64> = (0..npts).map(|i| (0..np).map(|j| ah[j] * cd.u[j][i]).sum()).collect();
    let rc: Vec<f64> = (0..npts)
        .map(|i| if np == 2 { interaction_power(p, ah[0] * cd.u[0][i], ah[1] * cd.u[1][i]) } else { 0.0 })
        .collect();
    let dk: Vec<Vec<f64>> = (0..np)
        .map(|k| {
            (0..npts)
                .map(|i| if np == 2 { power_increment(p - 1.0, ah[k] * cd.u[k][i], ah[1 - k] * cd.u[1 - k][i]) } else { 0.0 })
                .collect()
        })
        .collect();
    let f1: Vec<f64> = (0..npts)
        .map(|i| {
            let own: f64 = (0..np).map(|j| ah[j].powf(p) * (cd.k[i] - k0[j]) * cd.u[j][i].powf(p)).sum();
            eps * (own + cd.k[i] * rc[i])
        })
        .collect();
    let wk: Vec<Vec<f64>> = (0..np)
        .map(|k| {
            (0..npts)
                .map(|i| eps * (ah[k].powf(p - 1.0) * (cd.k[i] - k0[k]) * cd.u[k][i].powf(p - 1.0) + cd.k[i] * dk[k][i]))
                .collect()
        })
        .collect();
    let inter: Vec<PeakInteraction> = if np == 2 { (0..2).map(|k| peak_interaction(space, ah, k)).collect() } else { vec![] };
    let gcoef: Vec<f64> = (0..np).map(|j| ah[j] - ah[j].powf(p) * (1.0 + eps * k0[j])).collect();

    let mut mc_warnings = 0;
    let mut f_cons = DVector::zeros(nc);
    let mut l_cons_alpha = DMatrix::zeros(nc, np);
    let mut l_cons_v = DMatrix::zeros(nc, m);
    let mut scratch = vec![0.0; npts];
    for (r, &c) in space.constraint_idx.iter().enumerate() {
        let k = r / per;
        let slot = r % per;
        let tag = space.dictionary[c].tag;
        let tau = cd.phi.column(c);
        let lin = 1.0 - p * ah[k].powf(p - 1.0) * (1.0 + eps * k0[k]) / c_tau(dim, tag);
        let mut f = (0..np).map(|j| gcoef[j] * space.gram[(uidx[j], c)]).sum::<f64>();
        if np == 2 {
            f -= inter[k].rc[slot];
        }
        // The own-peak model part is integrated deterministically; only the rest is sampled.
        let own = cd.own.get(k).and_then(|o| o.as_ref()).map(|o| o[slot]);
        let own_weight = eps * ah[k].powf(p);
        for i in 0..npts {
            let sub = if own.is_some() { own_weight * cd.kmodel[k][i] * cd.u[k][i].powf(p) } else { 0.0 };
            scratch[i] = (f1[i] - sub) * tau[i];
        }
        let mut est = cd.integrate(&scratch, space.quadrature.rel_tol);
        let exact_part = own.map_or(0.0, |o| own_weight * o);
        est.value += exact_part;
        // Odd integrands vanish exactly, so precision is judged against the
        // absolute integral plus the deterministic parts of the entry.
        if est.std_error > MC_WARN * (cd.sum(|i| scratch[i].abs()) + f.abs() + exact_part.abs()) {
            mc_warnings += 1;
        }
        f_cons[r] = f - est.value;
        for l in 0..np {
            let mut v = space.gram[(uidx[l], c)] * lin;
            if np == 2 {
                v -= p * if l == k { inter[k].d_own[slot] } else { inter[k].d_other[slot] };
            }
            if l == k && own.is_some() {
                let wt = eps * ah[k].powf(p - 1.0);
                v -= p * (cd.sum(|i| (wk[k][i] - wt * cd.kmodel[k][i] * cd.u[k][i].powf(p - 1.0)) * cd.u[k][i] * tau[i])
                    + wt * own.unwrap_or(0.0));
            } else {
                v -= p * cd.sum(|i| wk[k][i] * cd.u[l][i] * tau[i]);
            }
            l_cons_alpha[(r, l)] = v;
        }
        for i in 0..npts {
            scratch[i] = (dk[k][i] + wk[k][i]) * tau[i];
        }
        for mm in 0..m {
            let col = cd.psi.column(mm);
            l_cons_v[(r, mm)] = g_ab[(c, mm)] * lin - p * cd.sum(|i| scratch[i] * col[i]);
        }
    }
    // The α-α block is symmetric in exact arithmetic; the two subtraction routes differ at quadrature level.
    let alpha_rows: Vec<usize> = (0..np).map(|k| k * per).collect();
    if np == 2 {
        let a = l_cons_alpha[(alpha_rows[0], 1)];
        let b = l_cons_alpha[(alpha_rows[1], 0)];
        l_cons_alpha[(alpha_rows[0], 1)] = 0.5 * (a + b);
        l_cons_alpha[(alpha_rows[1], 0)] = 0.5 * (a + b);
    }
    let mut f_v = DVector::zeros(m);
    for mm in 0..m {
        let col = cd.psi.column(mm);
        let gram_part: f64 = (0..np).map(|j| gcoef[j] * g_ab[(uidx[j], mm)]).sum();
        f_v[mm] = gram_part - cd.sum(|i| (rc[i] + f1[i]) * col[i]);
    }
    let weight: Vec<f64> = (0..npts).map(|i| cd.w[i] * p * (1.0 + eps * cd.k[i]) * w_hat[i].powf(p - 1.0)).collect();
    let mut weighted = cd.psi.clone();
    for i in 0..npts {
        let s = weight[i];
        weighted.row_mut(i).scale_mut(s);
    }
    let mut q_vv = DMatrix::<f64>::identity(m, m) - cd.psi.transpose() * weighted;
    q_vv = 0.5 * (&q_vv + q_vv.transpose());
    Assembled { eps, alpha_hat: ah.to_vec(), f_cons, f_v, l_cons_alpha, l_cons_v, q_vv, alpha_rows, mc_warnings }
}

impl Assembled {
    /// Exact remainder `DR(δ)` tested against constraints and basis elements,
    /// `δ = Σᾱ_lU_l + v`.
    pub fn remainder(&self, space: &GalerkinSpace, cd: &CloudData, alpha_bar: &[f64], v: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let p = space.dim.p();
        let np = space.peaks();
        let npts = cd.len();
        let eps = self.eps;
        let t: Vec<f64> = (0..npts)
            .map(|i| {
                let w: f64 = (0..np).map(|j| self.alpha_hat[j] * cd.u[j][i]).sum();
                let delta: f64 = (0..np).map(|j| alpha_bar[j] * cd.u[j][i]).sum::<f64>() + v[i];
                -cd.w[i] * (1.0 + eps * cd.k[i]) * taylor_remainder(p, w, delta)
            })
            .collect();
        let tv = DVector::from_vec(t);
        let dr_cons = DVector::from_iterator(
            space.constraint_idx.len(),
            space.constraint_idx.iter().map(|&c| cd.phi.column(c).dot(&tv)),
        );
        let dr_v = cd.psi.transpose() * &tv;
        (dr_cons, dr_v)
    }
}

/// The linear form `f_ε` split into its `ᾱ` and `v` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
    pub mc_warnings: usize,
}

/// The quadratic form `Q_ε` in blocks, with `v` in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub aa: DMatrix<f64>,
    pub av: DMatrix<f64>,
    pub vv: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn full(&self) -> DMatrix<f64> {
        let (np, m) = (self.aa.nrows(), self.vv.nrows());
        let mut q = DMatrix::zeros(np + m, np + m);
        q.view_mut((0, 0), (np, np)).copy_from(&self.aa);
        q.view_mut((0, np), (np, m)).copy_from(&self.av);
        q.view_mut((np, 0), (m, np)).copy_from(&self.av.transpose());
        q.view_mut((np, np), (m, m)).copy_from(&self.vv);
        q
    }

    /// `max|Q − Qᵀ|/max|Q|`.
    pub fn asymmetry(&self) -> f64 {
        let q = self.full();
        (&q - q.transpose()).amax() / q.amax()
    }

    /// Smallest eigenvalue of the `v`-block.
    pub fn coercivity(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.vv.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl Assembled {
    pub fn linear_form(&self) -> LinearForm {
        LinearForm {
            alpha: self.alpha_rows.iter().map(|&r| self.f_cons[r]).collect(),
            v: self.f_v.iter().cloned().collect(),
            mc_warnings: self.mc_warnings,
        }
    }

    pub fn quadratic_form(&self) -> QuadraticForm {
        let np = self.alpha_rows.len();
        let aa = DMatrix::from_fn(np, np, |k, l| self.l_cons_alpha[(self.alpha_rows[k], l)]);
        let av = DMatrix::from_fn(np, self.q_vv.nrows(), |k, m| self.l_cons_v[(self.alpha_rows[k], m)]);
        QuadraticForm { aa, av, vv: self.q_vv.clone() }
    }
}

pub fn assemble_linear_form(space: &GalerkinSpace, eps: f64, field: &KField, alpha_hat: &[f64]) -> LinearForm {
    let cd = CloudData::new(space, field);
    assemble(space, field, eps, alpha_hat, &cd).linear_form()
}

pub fn assemble_quadratic_form(space: &GalerkinSpace, eps: f64, field: &KField, alpha_hat: &[f64]) -> QuadraticForm {
    let cd = CloudData::new(space, field);
    assemble(space, field, eps, alpha_hat, &cd).quadratic_form()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_increments_match_direct_evaluation() {
        let p = 5.0;
        for (a, b) in [(1.0f64, 0.5f64), (2.0, 1e-3), (0.3, 4.0)] {
            let direct = (a + b).powf(p) - a.powf(p) - b.powf(p);
            assert!((interaction_power(p, a, b) / direct - 1.0).abs() < 1e-12);
            let inc = (a + b).powf(p - 1.0) - a.powf(p - 1.0);
            assert!((power_increment(p - 1.0, a, b) / inc - 1.0).abs() < 1e-12);
        }
        // Far below the resolution of the direct difference.
        let tiny = interaction_power(p, 1.0, 1e-12);
        assert!((tiny / (p * 1e-12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn taylor_remainder_branches_agree() {
        let p = 5.0;
        let w = 2.0;
        for delta in [1e-6, -3e-4, 0.01, -0.5, -3.0] {
            let exact = {
                let u: f64 = w + delta;
                u.abs().powf(p - 1.0) * u - w.powf(p) - p * w.powf(p - 1.0) * delta
            };
            let r = taylor_remainder(p, w, delta);
            assert!((r - exact).abs() <= 1e-9 * exact.abs().max(1e-300) + 1e-13, "{delta}: {r} vs {exact}");
        }
    }
}
