use serde::{Deserialize, Serialize};

use crate::bubble::Dimension;
use crate::error::{ForgeError, Result};

/// `L_ε = ε^e` with `e = β₁β₂/(β₁β₂ − (n−4)(β₁+β₂)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleLaw {
    pub exponent: f64,
    pub value: f64,
}

impl ScaleLaw {
    /// `λ_k = t_k L_ε^(1/β_k)`.
    pub fn lambda(&self, t: f64, beta: f64) -> f64 {
        t * self.value.powf(1.0 / beta)
    }
}

/// The scale at which `ε/λ^β` and the interaction `ε₁₂` balance.
pub fn l_eps(eps: f64, beta1: f64, beta2: f64, dim: &Dimension) -> Result<ScaleLaw> {
    if !(eps > 0.0) {
        return Err(ForgeError::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let prod = beta1 * beta2;
    let denom = prod - dim.k() * (beta1 + beta2);
    if denom.abs() <= 1e-12 * prod.abs().max(1.0) {
        return Err(ForgeError::DegenerateBalance);
    }
    let exponent = prod / denom;
    Ok(ScaleLaw { exponent, value: eps.powf(exponent) })
}

fn check_t(t: [f64; 2]) -> Result<()> {
    if t.iter().any(|&v| !(v > 0.0)) {
        return Err(ForgeError::InvalidArgument(format!("t must be positive, got {t:?}")));
    }
    Ok(())
}

/// `g_k(t) = t_k^(−β_k) − m_k (t₁t₂)^(−(n−4)/2)`.
pub fn g_map(t: [f64; 2], m: [f64; 2], beta: [f64; 2], dim: &Dimension) -> Result<[f64; 2]> {
    check_t(t)?;
    let inter = (t[0] * t[1]).powf(-dim.k());
    Ok([t[0].powf(-beta[0]) - m[0] * inter, t[1].powf(-beta[1]) - m[1] * inter])
}

/// Jacobian of [`g_map`], row `k` holding `∂g_k/∂t₁, ∂g_k/∂t₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian {
    pub matrix: [[f64; 2]; 2],
    pub det: f64,
}

impl Jacobian {
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let [[a, b], [c, d]] = self.matrix;
        if self.det == 0.0 || !self.det.is_finite() {
            return None;
        }
        Some([(d * rhs[0] - b * rhs[1]) / self.det, (a * rhs[1] - c * rhs[0]) / self.det])
    }
}

pub fn jac_g(t: [f64; 2], m: [f64; 2], beta: [f64; 2], dim: &Dimension) -> Result<Jacobian> {
    check_t(t)?;
    let k = dim.k();
    let inter = (t[0] * t[1]).powf(-k);
    let mut matrix = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let cross = k * m[r] * inter / t[c];
            matrix[r][c] = if r == c { -beta[r] * t[r].powf(-beta[r] - 1.0) + cross } else { cross };
        }
    }
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    Ok(Jacobian { matrix, det })
}

/// `(β₁β₂ − (β₁+β₂)(n−4)/2)·m₁m₂/(t₁t₂)^(n−3)`, the determinant at a root of `g`.
pub fn root_determinant(t: [f64; 2], m: [f64; 2], beta: [f64; 2], dim: &Dimension) -> f64 {
    (beta[0] * beta[1] - (beta[0] + beta[1]) * dim.k()) * m[0] * m[1] / (t[0] * t[1]).powf(dim.nf() - 3.0)
}

/// An axis-aligned rectangle `[lo₀, hi₀] × [lo₁, hi₁]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(ForgeError::InvalidArgument(format!("empty box {lo:?} .. {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new([lo, lo], [hi, hi])
    }

    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        (0..2).all(|i| {
            let s = slack * (self.hi[i] - self.lo[i]);
            p[i] >= self.lo[i] - s && p[i] <= self.hi[i] + s
        })
    }

    fn at(&self, u: f64, v: f64) -> [f64; 2] {
        [self.lo[0] + u * (self.hi[0] - self.lo[0]), self.lo[1] + v * (self.hi[1] - self.lo[1])]
    }

    fn quarters(&self) -> [Rect; 4] {
        let c = self.at(0.5, 0.5);
        [
            Rect { lo: self.lo, hi: c },
            Rect { lo: [c[0], self.lo[1]], hi: [self.hi[0], c[1]] },
            Rect { lo: [self.lo[0], c[1]], hi: [c[0], self.hi[1]] },
            Rect { lo: c, hi: self.hi },
        ]
    }
}

/// Newton's method with backtracking on `|g|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub root: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
    pub residual_trace: Vec<f64>,
}

fn sup(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

pub fn newton_g(start: [f64; 2], m: [f64; 2], beta: [f64; 2], dim: &Dimension, max_iter: usize) -> Result<NewtonReport> {
    let mut t = start;
    let mut g = g_map(t, m, beta, dim)?;
    let mut trace = vec![sup(g)];
    for it in 1..=max_iter {
        let j = jac_g(t, m, beta, dim)?;
        let d = j.solve([-g[0], -g[1]]).ok_or_else(|| ForgeError::NewtonFailure(format!("singular Jacobian at {t:?}")))?;
        let norm0 = g[0].hypot(g[1]);
        let mut s = 1.0;
        let mut accepted = None;
        while s > 1e-12 {
            let cand = [t[0] + s * d[0], t[1] + s * d[1]];
            if cand[0] > 0.0 && cand[1] > 0.0 {
                let gc = g_map(cand, m, beta, dim)?;
                if gc[0].hypot(gc[1]) <= (1.0 - 1e-4 * s) * norm0 || sup(gc) == 0.0 {
                    accepted = Some((cand, gc));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((cand, gc)) = accepted else {
            // No descent left: either converged to round-off or stuck.
            if sup(g) <= 1e-13 {
                return Ok(NewtonReport { root: t, residual: sup(g), iterations: it, residual_trace: trace });
            }
            return Err(ForgeError::NewtonFailure(format!("line search stalled at {t:?}, |g| = {:e}", sup(g))));
        };
        let step = sup([cand[0] - t[0], cand[1] - t[1]]);
        t = cand;
        g = gc;
        trace.push(sup(g));
        if sup(g) <= 1e-14 || step <= 1e-15 * sup(t) {
            return Ok(NewtonReport { root: t, residual: sup(g), iterations: it, residual_trace: trace });
        }
    }
    Err(ForgeError::NewtonFailure(format!("no convergence in {max_iter} iterations; |g| trace {trace:?}")))
}

/// Grid certificate that `g` has exactly one zero in the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessScan {
    pub resolution: usize,
    /// Cells on which both components of `g` change sign.
    pub candidate_cells: Vec<Rect>,
    /// Distinct zeros found by refining the candidate cells.
    pub roots: Vec<[f64; 2]>,
}

fn sign_change(vals: &[f64]) -> bool {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

fn cell_is_candidate(cell: &Rect, f: &impl Fn([f64; 2]) -> Result<[f64; 2]>) -> Result<bool> {
    let mut g1 = [0.0; 4];
    let mut g2 = [0.0; 4];
    for (i, (u, v)) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)].into_iter().enumerate() {
        let g = f(cell.at(u, v))?;
        g1[i] = g[0];
        g2[i] = g[1];
    }
    Ok(sign_change(&g1) && sign_change(&g2))
}

/// Refines one cell: Newton from its center must land inside it, otherwise
/// the candidate quarters are tried, down to `depth` levels.
fn refine_cell(
    cell: &Rect,
    depth: usize,
    m: [f64; 2],
    beta: [f64; 2],
    dim: &Dimension,
    roots: &mut Vec<[f64; 2]>,
) -> Result<()> {
    if let Ok(r) = newton_g(cell.at(0.5, 0.5), m, beta, dim, 60) {
        if r.residual <= 1e-12 && cell.contains(r.root, 1e-9) {
            let scale = sup(r.root).max(1.0);
            if !roots.iter().any(|q| sup([q[0] - r.root[0], q[1] - r.root[1]]) <= 1e-9 * scale) {
                roots.push(r.root);
            }
            return Ok(());
        }
    }
    if depth == 0 {
        return Ok(());
    }
    let f = |t: [f64; 2]| g_map(t, m, beta, dim);
    for q in cell.quarters() {
        if cell_is_candidate(&q, &f)? {
            refine_cell(&q, depth - 1, m, beta, dim, roots)?;
        }
    }
    Ok(())
}

pub fn uniqueness_scan(m: [f64; 2], beta: [f64; 2], dim: &Dimension, bx: &Rect, resolution: usize) -> Result<UniquenessScan> {
    let h = [(bx.hi[0] - bx.lo[0]) / resolution as f64, (bx.hi[1] - bx.lo[1]) / resolution as f64];
    let mut nodes = vec![[0.0; 2]; (resolution + 1) * (resolution + 1)];
    for j in 0..=resolution {
        for i in 0..=resolution {
            nodes[j * (resolution + 1) + i] = g_map([bx.lo[0] + i as f64 * h[0], bx.lo[1] + j as f64 * h[1]], m, beta, dim)?;
        }
    }
    let mut candidate_cells = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].map(|(a, b)| nodes[b * (resolution + 1) + a]);
            if sign_change(&corners.map(|g| g[0])) && sign_change(&corners.map(|g| g[1])) {
                let lo = [bx.lo[0] + i as f64 * h[0], bx.lo[1] + j as f64 * h[1]];
                candidate_cells.push(Rect { lo, hi: [lo[0] + h[0], lo[1] + h[1]] });
            }
        }
    }
    let mut roots = Vec::new();
    for cell in &candidate_cells {
        refine_cell(cell, 8, m, beta, dim, &mut roots)?;
    }
    Ok(UniquenessScan { resolution, candidate_cells, roots })
}

/// The certified zero of `g` in a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRoot {
    pub t: [f64; 2],
    pub m: [f64; 2],
    pub beta: [f64; 2],
    pub residual: f64,
    pub newton: NewtonReport,
    pub jacobian: Jacobian,
    /// The determinant from the closed product formula, for comparison.
    pub root_determinant: f64,
    pub scan: UniquenessScan,
}

/// Start of the Newton iteration: the symmetric root for the geometric means of `m` and `β`.
pub fn symmetric_guess(m: [f64; 2], beta: [f64; 2], dim: &Dimension) -> f64 {
    let e = dim.nf() - 4.0 - 0.5 * (beta[0] + beta[1]);
    if e.abs() < 1e-12 {
        1.0
    } else {
        (m[0] * m[1]).sqrt().powf(1.0 / e)
    }
}

/// Solves `g(t) = 0` in `bx` and certifies uniqueness on a `64 × 64` grid.
pub fn solve_reduced(m: [f64; 2], beta: [f64; 2], dim: &Dimension, bx: &Rect) -> Result<ReducedRoot> {
    if m.iter().any(|&v| !(v > 0.0)) {
        return Err(ForgeError::InvalidArgument(format!("m must be positive, got {m:?}")));
    }
    let s = symmetric_guess(m, beta, dim).clamp(bx.lo[0].max(bx.lo[1]), bx.hi[0].min(bx.hi[1]));
    let scan = uniqueness_scan(m, beta, dim, bx, 64)?;
    match scan.roots.len() {
        0 => return Err(ForgeError::NoRoot),
        1 => {}
        k => {
            return Err(ForgeError::MultipleRoots { count: k, cells: scan.candidate_cells.iter().map(|c| [c.lo, c.hi]).collect() })
        }
    }
    let newton = newton_g([s, s], m, beta, dim, 100)?;
    let t = newton.root;
    if !bx.contains(t, 0.0) {
        return Err(ForgeError::NoRoot);
    }
    let scale = sup(t).max(1.0);
    let other = scan.roots[0];
    if sup([other[0] - t[0], other[1] - t[1]]) > 1e-9 * scale {
        return Err(ForgeError::MultipleRoots { count: 2, cells: scan.candidate_cells.iter().map(|c| [c.lo, c.hi]).collect() });
    }
    let residual = sup(g_map(t, m, beta, dim)?);
    Ok(ReducedRoot {
        t,
        m,
        beta,
        residual,
        jacobian: jac_g(t, m, beta, dim)?,
        root_determinant: root_determinant(t, m, beta, dim),
        newton,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim6() -> Dimension {
        Dimension::new(6).unwrap()
    }

    #[test]
    fn scale_law_arithmetic() {
        let d = dim6();
        assert!((l_eps(0.1, 1.5, 1.5, &d).unwrap().exponent + 3.0).abs() < 1e-12);
        assert!((l_eps(0.1, 1.2, 1.8, &d).unwrap().exponent + 2.16 / 0.84).abs() < 1e-12);
        assert!(matches!(l_eps(0.1, 2.0, 2.0, &d), Err(ForgeError::DegenerateBalance)));
    }

    #[test]
    fn g_arithmetic() {
        let d = dim6();
        assert_eq!(g_map([1.0, 1.0], [1.0, 1.0], [1.3, 1.7], &d).unwrap(), [0.0, 0.0]);
        let g = g_map([4.0, 4.0], [1.0, 1.0], [1.5, 1.5], &d).unwrap();
        assert!((g[0] - 0.0625).abs() < 1e-15 && (g[1] - 0.0625).abs() < 1e-15);
        assert!(g_map([0.0, 1.0], [1.0, 1.0], [1.5, 1.5], &d).is_err());
    }

    #[test]
    fn root_determinant_arithmetic() {
        assert!((root_determinant([1.0, 1.0], [1.0, 1.0], [1.5, 1.5], &dim6()) + 0.75).abs() < 1e-15);
    }
}
