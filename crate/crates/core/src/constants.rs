//! Named constants of the expansions: A, E, F, G, C_{n,β}, D_{n,β}, C₀, C₁.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::bubble::{profile, profile_dcenter_factor, profile_dlambda, Dimension};
use crate::error::{ForgeError, Result};
use crate::integrate::{integrate_radial_scaled, sphere_moment, QuadratureSpec, TwoCenterRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    /// `∫U^(2*)` by radial quadrature.
    pub a: f64,
    /// `C_N^(2*)|S^(n−1)|·½B(n/2, n/2)`.
    pub a_closed: f64,
    /// `∫|ΔU|²`, computed from the closed-form Laplacian.
    pub e: f64,
    /// `λ²⟨∂λU, ∂λU⟩` at λ = 1.
    pub f: f64,
    /// `λ^(−2)⟨∂yᵢU, ∂yᵢU⟩` at λ = 1.
    pub g: f64,
    /// `F` and `G` recomputed at λ = 7.
    pub f_check: f64,
    pub g_check: f64,
}

pub fn a_closed_form(dim: &Dimension) -> f64 {
    let n = dim.nf();
    dim.pow_2star(dim.c_n()) * Dimension::sphere_area(dim.n()) * 0.5 * beta(n / 2.0, n / 2.0)
}

/// `∫U^(2*−1)` for a unit bubble.
pub fn p1_closed_form(dim: &Dimension) -> f64 {
    dim.pow_p(dim.c_n()) * Dimension::sphere_area(dim.n()) * 0.5 * beta(dim.nf() / 2.0, 2.0)
}

/// Far-separation limit `C_N·∫U^(2*−1)/(2*−1)` of the fitted interaction constant `C₀`.
pub fn c0_asymptote(dim: &Dimension) -> f64 {
    dim.c_n() * p1_closed_form(dim) / dim.p()
}

fn area(dim: &Dimension) -> f64 {
    Dimension::sphere_area(dim.n())
}

pub fn f_constant(dim: &Dimension, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    let p = dim.p();
    let v = integrate_radial_scaled(
        |r| {
            let r2 = r * r;
            let dl = profile_dlambda(dim, lambda, r2);
            p * dim.pow_pm1(profile(dim, lambda, r2)) * dl * dl
        },
        dim,
        spec,
        1.0 / lambda,
    )?;
    Ok(lambda * lambda * area(dim) * v)
}

pub fn g_constant(dim: &Dimension, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    let p = dim.p();
    let v = integrate_radial_scaled(
        |r| {
            let r2 = r * r;
            let h = profile_dcenter_factor(dim, lambda, r2);
            p * dim.pow_pm1(profile(dim, lambda, r2)) * h * h * r2 / dim.nf()
        },
        dim,
        spec,
        1.0 / lambda,
    )?;
    Ok(area(dim) * v / (lambda * lambda))
}

pub fn structure_constants(dim: &Dimension, spec: &QuadratureSpec) -> Result<StructureConstants> {
    let a_closed = a_closed_form(dim);
    let a = area(dim) * integrate_radial_scaled(|r| dim.pow_2star(profile(dim, 1.0, r * r)), dim, spec, 1.0)?;
    if ((a - a_closed) / a_closed).abs() > 1e-8 {
        return Err(ForgeError::Disagreement { what: "A".into(), closed: a_closed, quadrature: a });
    }
    let e = area(dim)
        * integrate_radial_scaled(
            |r| crate::bubble::bubble_laplacian_radial(dim, 1.0, r).powi(2),
            dim,
            spec,
            1.0,
        )?;
    Ok(StructureConstants {
        a,
        a_closed,
        e,
        f: f_constant(dim, 1.0, spec)?,
        g: g_constant(dim, 1.0, spec)?,
        f_check: f_constant(dim, 7.0, spec)?,
        g_check: g_constant(dim, 7.0, spec)?,
    })
}

fn check_beta(dim: &Dimension, beta_: f64) -> Result<()> {
    if !(beta_ > 1.0 && beta_ < dim.nf() - 4.0) {
        return Err(ForgeError::InvalidArgument(format!("beta = {beta_} outside (1, {})", dim.n() - 4)));
    }
    Ok(())
}

fn memo(key: (&str, usize, f64, &QuadratureSpec), compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
    static TABLE: OnceLock<Mutex<HashMap<(String, usize, u64, u64), f64>>> = OnceLock::new();
    let mut h = std::collections::hash_map::DefaultHasher::new();
    serde_json::to_string(key.3).unwrap_or_default().hash(&mut h);
    let k = (key.0.to_string(), key.1, key.2.to_bits(), h.finish());
    let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = table.lock().expect("constants table poisoned").get(&k) {
        return Ok(*v);
    }
    let v = compute()?;
    table.lock().expect("constants table poisoned").insert(k, v);
    Ok(v)
}

/// The signed reduced integral behind `∫K U^(2*−1)∂λU = c·Σaᵢ/λ^(β+1)` for a
/// bubble centered at the critical point. It is negative for every admissible β.
pub fn c_n_beta_signed(dim: &Dimension, beta_: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_beta(dim, beta_)?;
    let n = dim.nf();
    memo(("c_signed", dim.n(), beta_, spec), || {
        let radial = integrate_radial_scaled(
            |r| r.powf(beta_) * (1.0 - r * r) / (1.0 + r * r).powf(n + 1.0),
            dim,
            spec,
            1.0,
        )?;
        Ok(dim.pow_2star(dim.c_n()) * dim.k() * sphere_moment(dim, beta_)? * area(dim) * radial)
    })
}

/// The positive constant `C_{n,β}`: the magnitude of [`c_n_beta_signed`].
pub fn c_n_beta(dim: &Dimension, beta_: f64, spec: &QuadratureSpec) -> Result<f64> {
    let v = c_n_beta_signed(dim, beta_, spec)?.abs();
    debug_assert!(v > 0.0);
    Ok(v)
}

/// `D_{n,β}` from `(n−4)β·C_N^(2*)·E|ω₁|^β·|S^(n−1)|·∫r^(β+n−1)/(1+r²)^(n+1) dr`.
pub fn d_n_beta(dim: &Dimension, beta_: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_beta(dim, beta_)?;
    let n = dim.nf();
    memo(("d", dim.n(), beta_, spec), || {
        let radial = integrate_radial_scaled(|r| r.powf(beta_) / (1.0 + r * r).powf(n + 1.0), dim, spec, 1.0)?;
        let v = (n - 4.0) * beta_ * dim.pow_2star(dim.c_n()) * sphere_moment(dim, beta_)? * area(dim) * radial;
        if !(v > 0.0) {
            return Err(ForgeError::InvalidArgument(format!("D_(n,beta) = {v} is not positive")));
        }
        Ok(v)
    })
}

/// `D_{n,β}` by direct linearization of `∂_{yᵢ}(1/2*)∫K U^(2*)` in the offset:
/// `β(β−1)/2*·C_N^(2*)·E|ω₁|^(β−2)·|S^(n−1)|·∫r^(β+n−3)/(1+r²)^n dr`.
pub fn d_n_beta_linearized(dim: &Dimension, beta_: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_beta(dim, beta_)?;
    let n = dim.nf();
    let radial = integrate_radial_scaled(|r| r.powf(beta_ - 2.0) / (1.0 + r * r).powf(n), dim, spec, 1.0)?;
    Ok(beta_ * (beta_ - 1.0) / dim.two_star()
        * dim.pow_2star(dim.c_n())
        * sphere_moment(dim, beta_ - 2.0)?
        * area(dim)
        * radial)
}

/// `min(β, (n+4)/2)`.
pub fn theta(dim: &Dimension, beta_: f64) -> f64 {
    beta_.min((dim.nf() + 4.0) / 2.0)
}

/// Fitted interaction constants.
///
/// `c1` is the magnitude of the B.4 prefactor; `c1_orientation` records the
/// sign of the axial component relative to `yᵏ − yˡ` as measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionConstants {
    pub c0: f64,
    pub c0_max_rel_dev: f64,
    pub c1: f64,
    pub c1_orientation: f64,
    pub c1_max_rel_dev: f64,
}

/// `C₀` and `C₁` as fitted prefactors of the two-bubble interaction sweeps
/// (n-dimensional, unit separation, λ ∈ {10, 20, 40, 80}).
pub fn interaction_constants(dim: &Dimension, spec: &QuadratureSpec) -> Result<InteractionConstants> {
    let grid = [10.0, 20.0, 40.0, 80.0];
    let b2 = crate::lab::verify_lemma_b2(dim, 1.0, &grid, &[1.0, 2.0, 4.0, 8.0], spec)?;
    let b4 = crate::lab::verify_lemma_b4(dim, 1.0, &grid, spec)?;
    let c0s: Vec<f64> = b2
        .lambda_fit
        .samples
        .iter()
        .map(|&(l, v)| -2.0 * v * l / ((dim.nf() - 4.0) * crate::bubble::eps12(dim, l, l)))
        .collect();
    let e = (dim.nf() - 2.0) / (dim.nf() - 4.0);
    // The B.4 sweep displaces the first bubble by −e₁ from the second.
    let c1s: Vec<f64> = b4
        .fit
        .samples
        .iter()
        .map(|&(l, v)| v / (-(l * l) * crate::bubble::eps12(dim, l, l).powf(e)))
        .collect();
    let spread = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (m, xs.iter().map(|x| (x / m - 1.0).abs()).fold(0.0, f64::max))
    };
    let (c0, c0_dev) = spread(&c0s);
    let (c1_signed, c1_dev) = spread(&c1s);
    if c0_dev > 0.05 || c1_dev > 0.05 {
        return Err(ForgeError::Fit(format!(
            "interaction constants unstable across the λ grid: C0 {c0s:?}, C1 {c1s:?}"
        )));
    }
    Ok(InteractionConstants {
        c0,
        c0_max_rel_dev: c0_dev,
        c1: c1_signed.abs(),
        c1_orientation: c1_signed.signum(),
        c1_max_rel_dev: c1_dev,
    })
}

/// Unspecified positive exponents of the error terms; `None` until measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorExponents {
    pub tau: Option<f64>,
    pub tau1: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
}

/// Constants of the two-term reduced model for a pair of peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionModel {
    pub c_n_beta: [f64; 2],
    pub d_n_beta: [f64; 2],
    pub c0: f64,
    pub c1: f64,
    /// Coefficient `κ_k` of `ε₁₂/|z¹−z²|^(n−4)` in `λ_k ∂J/∂λ_k`.
    pub kappa: [f64; 2],
    /// `d_k = κ_k/(C_{n,β_k}|z¹−z²|^(n−4))`.
    pub dk: [f64; 2],
    /// `d_k/C₀`.
    pub consistency: [f64; 2],
    pub mk: [f64; 2],
    pub theta_j: [f64; 2],
    pub sum_a: [f64; 2],
    pub beta: [f64; 2],
    pub separation: f64,
    pub error_exponents: ErrorExponents,
}

impl ExpansionModel {
    /// Model with `κ_k = (2*−1)(n−4)/2·C₀` from the far-separation limit of `C₀`.
    pub fn analytic(dim: &Dimension, field: &crate::kprofile::KField, spec: &QuadratureSpec) -> Result<Self> {
        let c0 = c0_asymptote(dim);
        let kappa = dim.p() * dim.k() * c0;
        Self::with_kappa(dim, field, [kappa; 2], c0, (dim.nf() - 4.0) * c0, spec)
    }

    pub fn with_kappa(
        dim: &Dimension,
        field: &crate::kprofile::KField,
        kappa: [f64; 2],
        c0: f64,
        c1: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        if field.profiles.len() != 2 {
            return Err(ForgeError::InvalidArgument("expansion model needs two profiles".into()));
        }
        let sep = field.separation();
        let beta = [field.profiles[0].beta, field.profiles[1].beta];
        let sum_a = [field.profiles[0].sum_a(), field.profiles[1].sum_a()];
        let c = [c_n_beta(dim, beta[0], spec)?, c_n_beta(dim, beta[1], spec)?];
        let d = [d_n_beta(dim, beta[0], spec)?, d_n_beta(dim, beta[1], spec)?];
        let sep_pow = sep.powf(dim.nf() - 4.0);
        let dk = [kappa[0] / (c[0] * sep_pow), kappa[1] / (c[1] * sep_pow)];
        let mk = [-dk[0] / sum_a[0], -dk[1] / sum_a[1]];
        Ok(Self {
            c_n_beta: c,
            d_n_beta: d,
            c0,
            c1,
            kappa,
            dk,
            consistency: [dk[0] / c0, dk[1] / c0],
            mk,
            theta_j: [theta(dim, beta[0]), theta(dim, beta[1])],
            sum_a,
            beta,
            separation: sep,
            error_exponents: ErrorExponents::default(),
        })
    }

    /// Two-term prediction of `∂J/∂λ_k`.
    pub fn grad_lambda(&self, dim: &Dimension, eps: f64, lambda: [f64; 2], k: usize) -> f64 {
        let e12 = crate::bubble::eps12(dim, lambda[0], lambda[1]);
        eps * self.c_n_beta[k] * self.sum_a[k] * lambda[k].powf(-self.beta[k] - 1.0)
            + self.kappa[k] * e12 / (lambda[k] * self.separation.powf(dim.nf() - 4.0))
    }
}

/// One row of the exported constants table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub name: String,
    pub n: usize,
    pub beta: Option<f64>,
    pub value: f64,
    pub method: String,
    pub cross_check: f64,
    pub rel_dev: f64,
}

impl ConstantRow {
    fn new(name: &str, n: usize, beta_: Option<f64>, value: f64, method: &str, cross: f64) -> Self {
        Self {
            name: name.into(),
            n,
            beta: beta_,
            value,
            method: method.into(),
            cross_check: cross,
            rel_dev: if cross != 0.0 { (value / cross - 1.0).abs() } else { value.abs() },
        }
    }
}

/// Every constant with its cross-check, for dimension `dim` and each β.
pub fn constants_table(dim: &Dimension, betas: &[f64], spec: &QuadratureSpec) -> Result<Vec<ConstantRow>> {
    let n = dim.n();
    let s = structure_constants(dim, spec)?;
    let mut rows = vec![
        ConstantRow::new("A", n, None, s.a, "radial quadrature", s.a_closed),
        ConstantRow::new("E", n, None, s.e, "radial quadrature of |ΔU|²", s.a),
        ConstantRow::new("F", n, None, s.f, "radial quadrature, λ=1", s.f_check),
        ConstantRow::new("G", n, None, s.g, "radial quadrature, λ=1", s.g_check),
        ConstantRow::new("F/G", n, None, s.f, "ratio", s.g),
        ConstantRow::new("C0_asymptote", n, None, c0_asymptote(dim), "closed form C_N·P1/(2*−1)", c0_asymptote(dim)),
    ];
    for &b in betas {
        let c = c_n_beta(dim, b, spec)?;
        let refined = c_n_beta(dim, b, &spec.refined())?;
        rows.push(ConstantRow::new("C_n_beta", n, Some(b), c, "sphere moment × radial quadrature", refined));
        let d = d_n_beta(dim, b, spec)?;
        let lin = d_n_beta_linearized(dim, b, spec)?;
        rows.push(ConstantRow::new("D_n_beta", n, Some(b), d, "sphere moment × radial quadrature", lin));
        rows.push(ConstantRow::new("theta", n, Some(b), theta(dim, b), "min(β,(n+4)/2)", theta(dim, b)));
    }
    Ok(rows)
}

pub fn write_constants_csv<W: std::io::Write>(rows: &[ConstantRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "n", "beta", "value", "method", "cross_check", "rel_dev"])?;
    for r in rows {
        wr.write_record([
            r.name.clone(),
            r.n.to_string(),
            r.beta.map(|b| b.to_string()).unwrap_or_default(),
            format!("{:e}", r.value),
            r.method.clone(),
            format!("{:e}", r.cross_check),
            format!("{:e}", r.rel_dev),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Single-bubble and cross-bubble inner products of the constraint span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityTable {
    pub a: f64,
    /// `⟨U,∂λU⟩`, `⟨U,∂y₁U⟩`, `⟨∂λU,∂y₁U⟩` for one bubble.
    pub single: [f64; 3],
    pub lambdas: Vec<f64>,
    /// Per λ: `⟨U₁,U₂⟩`, `λ⟨U₁,∂λU₂⟩`, `λ²⟨∂λU₁,∂λU₂⟩` at unit separation.
    pub cross: Vec<[f64; 3]>,
    /// Fitted λ-exponents of the three cross entries.
    pub cross_exponents: [f64; 3],
}

pub fn orthogonality_table(dim: &Dimension, lambdas: &[f64], spec: &QuadratureSpec) -> Result<OrthogonalityTable> {
    let p = dim.p();
    let a = a_closed_form(dim);
    // Single bubble at λ = 3 centered away from the origin.
    let lam = 3.0;
    let rule = TwoCenterRule::from_spec(dim, 0.0, [1.0 / lam; 2], spec);
    let u_dl = rule.integrate(|r, _| dim.pow_p(profile(dim, lam, r * r)) * profile_dlambda(dim, lam, r * r));
    let u_dy = rule
        .moments(|r, _| dim.pow_p(profile(dim, lam, r * r)) * profile_dcenter_factor(dim, lam, r * r))
        .first(1.0);
    let dl_dy = rule
        .moments(|r, _| {
            let u = profile(dim, lam, r * r);
            p * dim.pow_pm1(u) * profile_dlambda(dim, lam, r * r) * profile_dcenter_factor(dim, lam, r * r)
        })
        .first(1.0);
    let mut cross = Vec::new();
    for &l in lambdas {
        let rule = TwoCenterRule::from_spec(dim, 1.0, [1.0 / l; 2], spec);
        let [uu, udl, dldl] = rule.integrate_many(|r1, r2| {
            let (a2, b2) = (r1 * r1, r2 * r2);
            let u1 = profile(dim, l, a2);
            [
                dim.pow_p(u1) * profile(dim, l, b2),
                dim.pow_p(u1) * profile_dlambda(dim, l, b2),
                p * dim.pow_pm1(u1) * profile_dlambda(dim, l, a2) * profile_dlambda(dim, l, b2),
            ]
        });
        cross.push([uu, l * udl, l * l * dldl]);
    }
    let mut exps = [0.0; 3];
    for (k, e) in exps.iter_mut().enumerate() {
        let samples: Vec<(f64, f64)> = lambdas.iter().zip(&cross).map(|(&l, c)| (l, c[k].abs())).collect();
        *e = crate::lab::fit_power_law(&samples)?.exponent;
    }
    Ok(OrthogonalityTable { a, single: [u_dl, u_dy, dl_dy], lambdas: lambdas.to_vec(), cross, cross_exponents: exps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    // Frozen mpmath values (50-digit arithmetic).
    const A5: f64 = 325.676_381_145_579_17;
    const A6: f64 = 3_888.617_302_542_933;
    const A8: f64 = 427_486.753_794_936_4;
    const FG6: f64 = 2_777.583_787_530_666_5;

    #[test]
    fn structure_constants_match_oracle() {
        for (n, a_ref) in [(5, A5), (6, A6), (8, A8)] {
            let d = Dimension::new(n).unwrap();
            let s = structure_constants(&d, &spec()).unwrap();
            assert!((s.a / a_ref - 1.0).abs() < 1e-10, "n={n}");
            assert!((s.e / s.a - 1.0).abs() < 1e-10, "n={n}");
            assert!((s.f / s.f_check - 1.0).abs() < 1e-8);
            assert!((s.g / s.g_check - 1.0).abs() < 1e-8);
        }
        let s = structure_constants(&Dimension::new(6).unwrap(), &spec()).unwrap();
        assert!((s.f / FG6 - 1.0).abs() < 1e-9 && (s.g / FG6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn c_and_d_constants() {
        let d = Dimension::new(6).unwrap();
        let signed = [-251.4232, -266.7893, -281.6323, -297.1926, -314.4760];
        let mut prev = 0.0;
        for (b, s) in [1.1, 1.3, 1.5, 1.7, 1.9].iter().zip(signed) {
            let c = c_n_beta(&d, *b, &spec()).unwrap();
            assert!((c + s).abs() < 1e-3, "beta={b}: {c}");
            assert!(c > prev);
            prev = c;
            assert!(c_n_beta_signed(&d, *b, &spec()).unwrap() < 0.0);
        }
        assert!((c_n_beta(&d, 1.5, &spec()).unwrap() - 281.632_299_623_469_5).abs() < 1e-8);
        let dn = d_n_beta(&d, 1.5, &spec()).unwrap();
        assert!((dn / 1267.34534830561 - 1.0).abs() < 1e-10);
        assert!((d_n_beta_linearized(&d, 1.5, &spec()).unwrap() / dn - 1.0).abs() < 1e-8);
        assert!(c_n_beta(&d, 2.0, &spec()).is_err());
    }

    #[test]
    fn theta_caps() {
        let d6 = Dimension::new(6).unwrap();
        assert_eq!(theta(&d6, 1.5), 1.5);
        assert_eq!(theta(&d6, 7.0), 5.0);
        assert_eq!(theta(&Dimension::new(5).unwrap(), 4.5), 4.5);
    }

    #[test]
    fn c0_asymptote_value() {
        let d = Dimension::new(6).unwrap();
        assert!((c0_asymptote(&d) / 1_944.308_651_271_466_5 - 1.0).abs() < 1e-12);
        assert!((p1_closed_form(&d) / 2_196.101_491_156_065 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_expected_columns() {
        let d = Dimension::new(6).unwrap();
        let rows = constants_table(&d, &[1.5], &spec()).unwrap();
        let mut buf = Vec::new();
        write_constants_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("name,n,beta,value,method,cross_check,rel_dev"));
        assert!(rows.iter().all(|r| r.rel_dev < 1e-6), "{rows:?}");
    }
}
