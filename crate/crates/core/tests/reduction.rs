use peakforge::constants::{a_closed_form, g_constant, ExpansionModel};
use peakforge::reduction::*;
use peakforge::{Dimension, KField, KProfile, QuadratureSpec};

fn dim6() -> Dimension {
    Dimension::new(6).unwrap()
}

fn axis_point(x0: f64) -> Vec<f64> {
    let mut y = vec![0.0; 6];
    y[0] = x0;
    y
}

fn pair_space(d: f64, lambdas: [f64; 2]) -> GalerkinSpace {
    build_space(&dim6(), &[axis_point(0.0), axis_point(d)], &lambdas, &DictSpec::default(), &QuadratureSpec::default()).unwrap()
}

fn single_space(lambda: f64) -> GalerkinSpace {
    build_space(&dim6(), &[axis_point(0.0)], &[lambda], &DictSpec::default(), &QuadratureSpec::default()).unwrap()
}

fn profiles(d: f64, k0: f64) -> KField {
    let dim = dim6();
    KField::new(vec![
        KProfile::symmetric(&dim, axis_point(0.0), 1.5, k0).unwrap(),
        KProfile::symmetric(&dim, axis_point(d), 1.5, k0).unwrap(),
    ])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn peak_sub_block_of_pair_gram_matches_single_space() {
    let pair = pair_space(2.0, [20.0, 20.0]);
    let single = single_space(20.0);
    assert_eq!(single.constraint_idx.len(), 8);
    assert!(pair.constraint_defect <= 1e-10 && single.constraint_defect <= 1e-10);
    // With the second family removed only peak-0 entries remain; their Gram block is the single space's.
    let own: Vec<usize> = (0..pair.dictionary.len()).filter(|&a| pair.dictionary[a].peak == 0).collect();
    assert_eq!(own.len(), single.dictionary.len());
    for (i, &a) in own.iter().enumerate() {
        assert_eq!(pair.dictionary[a], single.dictionary[i]);
        for (j, &b) in own.iter().enumerate() {
            let s = single.gram[(i, j)];
            let scale = (single.gram[(i, i)] * single.gram[(j, j)]).sqrt();
            assert!((pair.gram[(a, b)] - s).abs() <= 1e-8 * scale, "entry ({a},{b})");
        }
    }
}

#[test]
fn exact_bubble_annihilates_the_linear_form() {
    let s = single_space(20.0);
    let lf = assemble_linear_form(&s, 0.0, &KField::new(vec![]), &[1.0]);
    assert!(norm(&lf.v) <= 1e-12, "{:?}", lf.v);
    assert!(lf.alpha[0].abs() <= 1e-12);
}

#[test]
fn far_pair_linear_form_decays_with_interaction() {
    // λ-doubling at fixed separation divides ε₁₂ = (λ₁λ₂)^(−1) by 4.
    let empty = KField::new(vec![]);
    let f = |lam: f64| {
        let s = pair_space(20.0, [lam, lam]);
        let lf = assemble_linear_form(&s, 0.0, &empty, &[1.0, 1.0]);
        let a = a_closed_form(&dim6());
        (lf.alpha.iter().map(|x| x * x / a).sum::<f64>() + lf.v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    };
    let (f1, f2) = (f(40.0), f(80.0));
    let exponent = (f1 / f2).ln() / 4f64.ln();
    assert!(exponent >= 1.0, "measured exponent {exponent}");
}

#[test]
fn linear_form_moves_linearly_in_eps() {
    let s = pair_space(1.0, [40.0, 40.0]);
    let field = profiles(1.0, 0.0);
    let f0 = assemble_linear_form(&s, 0.0, &field, &[1.0, 1.0]);
    let diff = |eps: f64| {
        let fe = assemble_linear_form(&s, eps, &field, &[1.0, 1.0]);
        let d: Vec<f64> = fe.v.iter().zip(&f0.v).map(|(a, b)| a - b).collect();
        norm(&d)
    };
    let slope = (diff(2e-2) / diff(1e-2)).ln() / 2f64.ln();
    assert!((slope - 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn quadratic_form_structure_for_separated_pair() {
    let s = pair_space(10.0, [20.0, 20.0]);
    let q = assemble_quadratic_form(&s, 0.0, &KField::new(vec![]), &[1.0, 1.0]);
    assert!(q.coercivity() > 0.0);
    assert!(q.asymmetry() <= 1e-10);
    let a = a_closed_form(&dim6());
    let p = dim6().p();
    for k in 0..2 {
        assert!((q.aa[(k, k)] / ((1.0 - p) * a) - 1.0).abs() < 1e-3, "{}", q.aa[(k, k)]);
    }
    assert!(q.aa[(0, 1)].abs() < 1e-3 * a);
}

#[test]
fn correction_obeys_the_fixed_point_bound_and_constraints() {
    let s = pair_space(10.0, [20.0, 20.0]);
    let sol = solve_correction(&s, 0.0, &KField::new(vec![])).unwrap();
    assert!(sol.omega_norm <= 1.2 * sol.q_inv_norm * sol.f_norm);
    assert!(sol.constraint_violation <= 1e-10);
    assert!(sol.residual_norm <= 1e-10 * sol.f_norm.max(1e-300));
    for w in sol.step_trace.windows(2).skip(1) {
        assert!(w[1] < 0.9 * w[0], "{:?}", sol.step_trace);
    }
    let dump = serde_json::to_string(&sol).unwrap();
    let back: CorrectionSolution = serde_json::from_str(&dump).unwrap();
    assert_eq!(back.v_coeffs, sol.v_coeffs);
}

/// Maximizer of `½α² − α^(2*)(1+κ)/2*`: bisection on its derivative `α − (1+κ)α^(2*−1)`.
fn weight_oracle(ts: f64, kappa: f64) -> f64 {
    let dg = |a: f64| a - (1.0 + kappa) * a.powf(ts - 1.0);
    let (mut lo, mut hi) = (0.5, 1.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn eps_sweep_of_the_correction() {
    let dim = dim6();
    let s = pair_space(1.0, [40.0, 40.0]);
    let field = profiles(1.0, 0.5);
    let base = solve_correction(&s, 0.0, &field).unwrap();
    let mut dv = vec![];
    for eps in [1e-2, 2e-2] {
        let sol = solve_correction(&s, eps, &field).unwrap();
        let d: Vec<f64> = sol.v_coeffs.iter().zip(&base.v_coeffs).map(|(a, b)| a - b).collect();
        dv.push(norm(&d));
        let oracle = weight_oracle(dim.two_star(), eps * 0.5);
        assert!((oracle / sol.alpha_hat[0] - 1.0).abs() < 1e-12, "oracle {oracle} vs {}", sol.alpha_hat[0]);
        let a = a_closed_form(&dim);
        for j in 0..2 {
            assert!((sol.alpha[j] - oracle).abs() <= 1.2 * sol.omega_norm / a.sqrt());
        }
    }
    let slope = (dv[1] / dv[0]).ln() / 2f64.ln();
    assert!((slope - 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn multipliers_vanish_for_an_exact_bubble() {
    let s = single_space(20.0);
    let sol = solve_correction(&s, 0.0, &KField::new(vec![])).unwrap();
    let m = &sol.multipliers.peaks[0];
    assert_eq!((m.a, m.b), (0.0, 0.0));
    assert!(m.c.iter().all(|&c| c == 0.0));
}

#[test]
fn multiplier_diagonal_and_scaling() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let mut ratios = vec![];
    for lam in [20.0, 40.0] {
        let s = pair_space(2.0, [lam, lam]);
        let sol = solve_correction(&s, 0.0, &KField::new(vec![])).unwrap();
        let r = &sol.multipliers;
        assert!(r.diagonal_deviation.iter().all(|d| d.abs() <= 1e-6), "{:?}", r.diagonal_deviation);
        let gy = s.gram[(s.constraint(0, Tag::DCenter(1)), s.constraint(0, Tag::DCenter(1)))];
        assert!((gy / (g_constant(&dim, 1.0, &spec).unwrap() * lam * lam) - 1.0).abs() <= 1e-6);
        // B_k = O(λ_k ε₁₂) with ε₁₂ = λ^(−2) here.
        ratios.push(r.peaks[0].b.abs() / (lam * lam.powi(-2)));
    }
    assert!(ratios[1] / ratios[0] < 2.0 && ratios[1] / ratios[0] > 0.5, "{ratios:?}");
}

#[test]
fn transverse_gradients_vanish_by_symmetry() {
    let s = pair_space(1.0, [40.0, 40.0]);
    let sol = solve_correction(&s, 1e-2, &profiles(1.0, 0.0)).unwrap();
    let g = reduced_gradients(&s, &sol).unwrap();
    // The interaction and K remainders are sampled, and the sampler has no transverse mirror symmetry.
    for k in 0..2 {
        let axial = g.y[k][0].abs();
        for i in 1..6 {
            assert!(g.y[k][i].abs() <= 1e-3 * axial, "peak {k} axis {i}: {} vs {axial}", g.y[k][i]);
        }
    }
}

#[test]
fn gradients_match_finite_differences_of_the_solved_energy() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let field = profiles(1.0, 0.0);
    let eps = 2e-2;
    let lam = 40.0;
    let solve = |l0: f64, y0: f64| {
        let s = build_space(&dim, &[axis_point(y0), axis_point(1.0)], &[l0, lam], &DictSpec::default(), &spec).unwrap();
        let sol = solve_correction(&s, eps, &field).unwrap();
        (s, sol)
    };
    let (s, sol) = solve(lam, 0.0);
    let g = reduced_gradients(&s, &sol).unwrap();
    let h = 1e-3 * lam;
    let fd_l = (solve(lam + h, 0.0).1.energy - solve(lam - h, 0.0).1.energy) / (2.0 * h);
    let hy = 1e-3 / lam;
    let fd_y = (solve(lam, hy).1.energy - solve(lam, -hy).1.energy) / (2.0 * hy);
    assert!((g.lambda[0] / fd_l - 1.0).abs() < 2e-3, "{} vs {fd_l}", g.lambda[0]);
    assert!((g.y[0][0] / fd_y - 1.0).abs() < 2e-3, "{} vs {fd_y}", g.y[0][0]);
}

#[test]
fn scale_gradient_changes_sign_across_the_balance_scale() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let eps = 4e-3;
    let field = profiles(1.0, 0.0);
    let model = ExpansionModel::analytic(&dim, &field, &spec).unwrap();
    // Balance of εC Σa λ^(−β−1) against κ λ^(−3) at unit separation.
    let lam_star = (model.kappa[0] / (-eps * model.c_n_beta[0] * model.sum_a[0])).powf(1.0 / (3.0 - 2.5));
    let grads: Vec<f64> = [0.5 * lam_star, 2.0 * lam_star]
        .iter()
        .map(|&l| {
            let s = pair_space(1.0, [l, l]);
            let sol = solve_correction(&s, eps, &field).unwrap();
            let g = reduced_gradients(&s, &sol).unwrap().lambda[0];
            let pred = model.grad_lambda(&dim, eps, [l, l], 0);
            assert!(g.signum() == pred.signum(), "{l}: {g} vs {pred}");
            g
        })
        .collect();
    assert!(grads[0] * grads[1] < 0.0, "{grads:?}");
}

#[test]
fn scale_gradient_agrees_with_the_two_term_model() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let field = profiles(1.0, 0.0);
    let model = ExpansionModel::analytic(&dim, &field, &spec).unwrap();
    // At λ = 40 the next interaction order is still visible; at the pipeline scale it is not.
    for (lam, eps, tol) in [(40.0, 0.0, 1e-2), (62500.0, 4e-3, 1e-6)] {
        let s = pair_space(1.0, [lam, lam]);
        let sol = solve_correction(&s, eps, &field).unwrap();
        let g = reduced_gradients(&s, &sol).unwrap();
        let pred = model.grad_lambda(&dim, eps, [lam, lam], 0);
        assert!((g.lambda[0] / pred - 1.0).abs() < tol, "λ={lam}: {} vs {pred}", g.lambda[0]);
    }
}

#[test]
fn energy_of_bubbles() {
    let dim = dim6();
    let a = a_closed_form(&dim);
    let empty = KField::new(vec![]);
    let s = single_space(20.0);
    let zeros = vec![0.0; s.basis_size()];
    let j = energy_value(&s, &[1.0], &zeros, 0.0, &empty).unwrap();
    assert!((j / (a / 3.0) - 1.0).abs() < 1e-9, "{j}");
    assert!((j - 1296.2).abs() < 0.1);
    let ts = dim.two_star();
    for alpha in [0.8, 1.1, 1.3] {
        let j = energy_value(&s, &[alpha], &zeros, 0.0, &empty).unwrap();
        let exact = (alpha * alpha / 2.0 - alpha.powf(ts) / ts) * a;
        assert!((j / exact - 1.0).abs() < 1e-9, "{alpha}: {j} vs {exact}");
    }
    // Two far bubbles: the excess over 2·A/3 decays like λ^(−(n−4)).
    let dev = |lam: f64| {
        let s = pair_space(5.0, [lam, lam]);
        let zeros = vec![0.0; s.basis_size()];
        (energy_value(&s, &[1.0, 1.0], &zeros, 0.0, &empty).unwrap() - 2.0 * a / 3.0).abs()
    };
    let (d1, d2, d3) = (dev(20.0), dev(40.0), dev(80.0));
    for (x, y) in [(d1, d2), (d2, d3)] {
        let slope = (x / y).ln() / 2f64.ln();
        assert!((slope / 2.0 - 1.0).abs() < 0.1, "slope {slope}");
    }
}
