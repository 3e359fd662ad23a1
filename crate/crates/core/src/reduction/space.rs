use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bubble::{dist2, Dimension};
use crate::error::{ForgeError, Result};
use crate::integrate::{QuadratureSpec, TwoCenterRule};

use super::dictionary::{radial_triplet, DictSpec, Entry, Kind, Tag};

const MAX_CONDITION: f64 = 1e12;

fn kind_index(k: Kind) -> usize {
    match k {
        Kind::Value => 0,
        Kind::DLambda => 1,
        Kind::Center => 2,
    }
}

/// `⟨φ_a, φ_b⟩ = ∫Δ²φ_a·φ_b` for every `a` centered at `ca` (scale `mu_a`) and
/// every `b` centered at `cb`, returned row-major as `[a][b]`.
pub(crate) fn site_block(
    dim: &Dimension,
    (ca, mu_a, tags_a): (&[f64], f64, &[Tag]),
    (cb, mu_b, tags_b): (&[f64], f64, &[Tag]),
    spec: &QuadratureSpec,
) -> Vec<Vec<f64>> {
    let n = dim.n();
    let d = dist2(ca, cb).sqrt();
    let rule = TwoCenterRule::from_spec(dim, d, [1.0 / mu_a, 1.0 / mu_b], spec);
    let e: Vec<f64> = if rule.is_coincident() {
        vec![0.0; n]
    } else {
        cb.iter().zip(ca).map(|(b, a)| (b - a) / d).collect()
    };
    let d = rule.d;
    let m = rule.moments_many::<9>(|r1, r2| {
        let (a2, b2) = (r1 * r1, r2 * r2);
        let bil = radial_triplet(dim, mu_a, a2).1;
        let phi = radial_triplet(dim, mu_b, b2).0;
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = bil[i] * phi[j];
            }
        }
        out
    });
    tags_a
        .iter()
        .map(|ta| {
            tags_b
                .iter()
                .map(|tb| {
                    let mm = &m[3 * kind_index(ta.kind()) + kind_index(tb.kind())];
                    match (ta.axis(), tb.axis()) {
                        (None, None) => mm.m0,
                        (Some(i), None) => mm.first(e[i]),
                        (None, Some(j)) => mm.second(e[j], d),
                        (Some(i), Some(j)) => mm.pair(n, e[i], e[j], i == j, d),
                    }
                })
                .collect()
        })
        .collect()
}

/// Distinct (center, scale) pairs of a dictionary with the entries living there.
#[derive(Debug, Clone)]
pub(crate) struct Site {
    pub center: Vec<f64>,
    pub mu: f64,
    pub members: Vec<usize>,
}

pub(crate) fn group_sites(entries: &[Entry]) -> Vec<Site> {
    let mut sites: Vec<Site> = Vec::new();
    for (a, e) in entries.iter().enumerate() {
        match sites.iter_mut().find(|s| s.mu == e.mu && s.center == e.center) {
            Some(s) => s.members.push(a),
            None => sites.push(Site { center: e.center.clone(), mu: e.mu, members: vec![a] }),
        }
    }
    sites
}

/// Well-separated sites are resolved by the base rule; nearby ones get [`gram_spec`].
fn pair_spec(s: &Site, t: &Site, spec: &QuadratureSpec) -> QuadratureSpec {
    if dist2(&s.center, &t.center).sqrt() * s.mu.min(t.mu) > 20.0 {
        spec.clone()
    } else {
        gram_spec(spec)
    }
}

fn gram_matrix(dim: &Dimension, entries: &[Entry], spec: &QuadratureSpec) -> DMatrix<f64> {
    let sites = group_sites(entries);
    let tags: Vec<Vec<Tag>> = sites.iter().map(|s| s.members.iter().map(|&a| entries[a].tag).collect()).collect();
    let nd = entries.len();
    let mut g = DMatrix::zeros(nd, nd);
    for (si, s) in sites.iter().enumerate() {
        for (ti, t) in sites.iter().enumerate().skip(si) {
            let block = site_block(dim, (&s.center, s.mu, &tags[si]), (&t.center, t.mu, &tags[ti]), &pair_spec(s, t, spec));
            for (ia, &a) in s.members.iter().enumerate() {
                for (ib, &b) in t.members.iter().enumerate() {
                    let v = block[ia][ib];
                    if si == ti {
                        g[(a, b)] += 0.5 * v;
                        g[(b, a)] += 0.5 * v;
                    } else {
                        g[(a, b)] = v;
                        g[(b, a)] = v;
                    }
                }
            }
        }
    }
    g
}

/// Nearby centers at unequal scales need 1.5× the default nodes for ~1e−10 Gram accuracy.
pub(crate) fn gram_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        radial_nodes: spec.radial_nodes * 3 / 2,
        transverse_nodes: spec.transverse_nodes * 3 / 2,
        ..spec.clone()
    }
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Discretization of the constrained correction space.
///
/// `basis` holds, column by column, the dictionary coefficients of functions
/// `ψ_m` that are orthonormal in `D^{2,2}` and orthogonal to every constraint
/// function.
#[derive(Debug, Clone)]
pub struct GalerkinSpace {
    pub dim: Dimension,
    pub centers: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub dict_spec: DictSpec,
    pub quadrature: QuadratureSpec,
    pub dictionary: Vec<Entry>,
    /// Entries removed by thinning.
    pub dropped: Vec<Entry>,
    pub gram: DMatrix<f64>,
    /// Dictionary indices of the constraint functions, peak by peak in the
    /// order `U, ∂λU, ∂y₁U, …, ∂y_nU`.
    pub constraint_idx: Vec<usize>,
    pub basis: DMatrix<f64>,
    /// Condition number of the unit-diagonal Gram matrix after thinning.
    pub condition: f64,
    /// Largest `|⟨τ_c, ψ_m⟩|/‖τ_c‖` over constraints and basis elements.
    pub constraint_defect: f64,
}

/// Summary of a space suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub peaks: usize,
    pub dictionary_size: usize,
    pub dropped: usize,
    pub constraints: usize,
    pub basis_size: usize,
    pub condition: f64,
    pub constraint_defect: f64,
    pub dict_spec: DictSpec,
}

pub fn build_space(
    dim: &Dimension,
    centers: &[Vec<f64>],
    lambdas: &[f64],
    dict: &DictSpec,
    spec: &QuadratureSpec,
) -> Result<GalerkinSpace> {
    if centers.is_empty() || centers.len() > 2 || centers.len() != lambdas.len() {
        return Err(ForgeError::InvalidArgument("one or two peaks with one scale each".into()));
    }
    if let Some(&l) = lambdas.iter().find(|&&l| !(l > 0.0)) {
        return Err(ForgeError::NonPositiveScale(l));
    }
    spec.validate()?;
    let ncons = DictSpec::constraints_per_peak(dim);
    let mut dictionary: Vec<Entry> = Vec::new();
    for (j, (y, &l)) in centers.iter().zip(lambdas).enumerate() {
        dictionary.extend(dict.entries(dim, j, y, l));
    }
    let mut is_cons: Vec<bool> = Vec::new();
    for _ in centers {
        let per = dictionary.len() / centers.len();
        is_cons.extend((0..per).map(|i| i < ncons));
    }
    let mut gram = gram_matrix(dim, &dictionary, spec);
    let mut dropped = Vec::new();
    let (ghat, scale, cond) = loop {
        let scale: Vec<f64> = (0..gram.nrows()).map(|a| 1.0 / gram[(a, a)].sqrt()).collect();
        let s = DVector::from_vec(scale.clone());
        let ghat = DMatrix::from_fn(gram.nrows(), gram.ncols(), |a, b| gram[(a, b)] * s[a] * s[b]);
        let cond = condition(&ghat);
        if cond <= MAX_CONDITION {
            break (ghat, scale, cond);
        }
        let mut worst = (0, 0, 0.0f64);
        for a in 0..ghat.nrows() {
            for b in a + 1..ghat.ncols() {
                let c = ghat[(a, b)].abs();
                if c > worst.2 && !(is_cons[a] && is_cons[b]) {
                    worst = (a, b, c);
                }
            }
        }
        let victim = if !is_cons[worst.1] { worst.1 } else { worst.0 };
        if is_cons[victim] || gram.nrows() <= ncons * centers.len() + 1 {
            return Err(ForgeError::IllConditioned(cond));
        }
        log::debug!("thinning dictionary entry {victim} (correlation {:.6})", worst.2);
        dropped.push(dictionary.remove(victim));
        is_cons.remove(victim);
        gram = gram.remove_row(victim).remove_column(victim);
    };
    let nd = dictionary.len();
    let constraint_idx: Vec<usize> = (0..nd).filter(|&a| is_cons[a]).collect();
    let m = constraint_idx.len();

    // Null space of the constraint rows from a full SVD of the zero-padded square.
    let mut c = DMatrix::zeros(nd, nd);
    for (r, &a) in constraint_idx.iter().enumerate() {
        c.set_row(r, &ghat.row(a));
    }
    let svd = c.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| ForgeError::Singular("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..nd).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    if svd.singular_values[order[m - 1]] <= 1e-12 * smax {
        return Err(ForgeError::Singular("constraint functions are linearly dependent".into()));
    }
    let z = DMatrix::from_fn(nd, nd - m, |a, k| v_t[(order[m + k], a)]);
    let h = z.transpose() * &ghat * &z;
    let eig = SymmetricEigen::new(h);
    let emax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-10 * emax).collect();
    let mut b = DMatrix::zeros(nd - m, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        b.set_column(col, &(eig.eigenvectors.column(k) / eig.eigenvalues[k].sqrt()));
    }
    let bhat = &z * b;
    let defect_m = &ghat * &bhat;
    let constraint_defect = constraint_idx
        .iter()
        .flat_map(|&a| defect_m.row(a).iter().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    let basis = DMatrix::from_fn(nd, keep.len(), |a, k| bhat[(a, k)] * scale[a]);
    Ok(GalerkinSpace {
        dim: *dim,
        centers: centers.to_vec(),
        lambdas: lambdas.to_vec(),
        dict_spec: dict.clone(),
        quadrature: spec.clone(),
        dictionary,
        dropped,
        gram,
        constraint_idx,
        basis,
        condition: cond,
        constraint_defect,
    })
}

impl GalerkinSpace {
    pub fn peaks(&self) -> usize {
        self.centers.len()
    }

    pub fn basis_size(&self) -> usize {
        self.basis.ncols()
    }

    /// Dictionary index of a constraint function of peak `k`.
    pub fn constraint(&self, k: usize, tag: Tag) -> usize {
        let per = DictSpec::constraints_per_peak(&self.dim);
        let slot = match tag {
            Tag::Value => 0,
            Tag::DLambda => 1,
            Tag::DCenter(i) => 2 + i,
        };
        self.constraint_idx[k * per + slot]
    }

    /// `⟨φ_a, ψ_m⟩` for every dictionary entry and basis element.
    pub fn dictionary_basis_inner(&self) -> DMatrix<f64> {
        &self.gram * &self.basis
    }

    /// `⟨φ, φ_a⟩` for an arbitrary bubble-family function against every entry.
    pub fn inner_row(&self, entry: &Entry) -> Vec<f64> {
        let mut row = vec![0.0; self.dictionary.len()];
        for site in group_sites(&self.dictionary) {
            let tags: Vec<Tag> = site.members.iter().map(|&a| self.dictionary[a].tag).collect();
            let block = site_block(
                &self.dim,
                (&entry.center, entry.mu, &[entry.tag]),
                (&site.center, site.mu, &tags),
                &pair_spec(&Site { center: entry.center.clone(), mu: entry.mu, members: vec![] }, &site, &self.quadrature),
            );
            for (i, &a) in site.members.iter().enumerate() {
                row[a] = block[0][i];
            }
        }
        row
    }

    pub fn summary(&self) -> SpaceSummary {
        SpaceSummary {
            peaks: self.peaks(),
            dictionary_size: self.dictionary.len(),
            dropped: self.dropped.len(),
            constraints: self.constraint_idx.len(),
            basis_size: self.basis_size(),
            condition: self.condition,
            constraint_defect: self.constraint_defect,
            dict_spec: self.dict_spec.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{a_closed_form, f_constant, g_constant};

    fn dim6() -> Dimension {
        Dimension::new(6).unwrap()
    }

    #[test]
    fn single_peak_space_has_n_plus_two_constraints() {
        let dim = dim6();
        let spec = QuadratureSpec::default();
        let s = build_space(&dim, &[vec![0.0; 6]], &[20.0], &DictSpec::default(), &spec).unwrap();
        assert_eq!(s.constraint_idx.len(), 8);
        assert!(s.constraint_defect <= 1e-10, "defect {}", s.constraint_defect);
        assert_eq!(s.basis_size() + 8 + s.dropped.len(), 24);
    }

    #[test]
    fn gram_diagonal_matches_structure_constants() {
        let dim = dim6();
        let spec = QuadratureSpec::default();
        let lam = 20.0;
        let s = build_space(&dim, &[vec![0.0; 6]], &[lam], &DictSpec::default(), &spec).unwrap();
        let a = a_closed_form(&dim);
        let g = |t| s.gram[(s.constraint(0, t), s.constraint(0, t))];
        assert!((g(Tag::Value) / a - 1.0).abs() < 1e-9);
        let f = f_constant(&dim, 1.0, &spec).unwrap();
        assert!((g(Tag::DLambda) * lam * lam / f - 1.0).abs() < 1e-9);
        let gc = g_constant(&dim, 1.0, &spec).unwrap();
        assert!((g(Tag::DCenter(3)) / (lam * lam) / gc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basis_is_orthonormal_and_symmetric_gram() {
        let dim = dim6();
        let spec = QuadratureSpec::default();
        let mut y2 = vec![0.0; 6];
        y2[0] = 0.5;
        let s = build_space(&dim, &[vec![0.0; 6], y2], &[20.0, 20.0], &DictSpec::default(), &spec).unwrap();
        assert_eq!(s.constraint_idx.len(), 16);
        let gram_sym = (&s.gram - s.gram.transpose()).amax() / s.gram.amax();
        assert!(gram_sym < 1e-12);
        let eye = s.basis.transpose() * &s.gram * &s.basis;
        let id = DMatrix::<f64>::identity(eye.nrows(), eye.ncols());
        assert!((eye - id).amax() < 1e-8);
        assert!(s.constraint_defect <= 1e-10, "defect {}", s.constraint_defect);
    }

    #[test]
    fn inner_row_reproduces_gram_rows() {
        // The row is integrated in the opposite order, so it agrees to quadrature accuracy only.
        let dim = dim6();
        let spec = QuadratureSpec::default();
        let s = build_space(&dim, &[vec![0.0; 6]], &[10.0], &DictSpec::default(), &spec).unwrap();
        for a in [0, 1, 4, 12, 20] {
            let row = s.inner_row(&s.dictionary[a]);
            for (b, v) in row.iter().enumerate() {
                let g = s.gram[(a, b)];
                assert!((v - g).abs() <= 1e-8 * s.gram[(a, a)].sqrt() * s.gram[(b, b)].sqrt(), "{a},{b}: {v} vs {g}, diag {} {}", s.gram[(a, a)], s.gram[(b, b)]);
            }
        }
    }
}
