use peakforge::constants::ExpansionModel;
use peakforge::reduced::*;
use peakforge::{Dimension, ForgeError, KField, KProfile, QuadratureSpec};
use proptest::prelude::*;

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn unit_box() -> Rect {
    Rect::square(-1.0, 1.0).unwrap()
}

fn t_box() -> Rect {
    Rect::square(0.25, 4.0).unwrap()
}

/// Root of g for equal β by the ratio substitution `t₁/t₂ = (m₁/m₂)^(−1/β)`.
fn ratio_root(m: [f64; 2], beta: f64, n: usize) -> [f64; 2] {
    let k = (n as f64 - 4.0) / 2.0;
    let r = (m[0] / m[1]).powf(-1.0 / beta);
    // t₁^(−β) = m₁ (t₁²/r)^(−k)  ⇒  t₁^(2k−β) = m₁ r^k.
    let t1 = (m[0] * r.powf(k)).powf(1.0 / (2.0 * k - beta));
    [t1, t1 / r]
}

#[test]
fn scale_law_balances_both_terms() {
    let d = dim(6);
    for eps in [8e-3, 4e-3, 2e-3] {
        let law = l_eps(eps, 1.5, 1.5, &d).unwrap();
        assert!((law.exponent + 3.0).abs() < 1e-14);
        let lam = law.lambda(1.0, 1.5);
        assert!((lam * eps * eps - 1.0).abs() < 1e-12);
        // ε/λ^β and ε₁₂ = λ^(−2) both equal ε⁴ at t = 1.
        assert!((eps / lam.powf(1.5) / eps.powi(4) - 1.0).abs() < 1e-12);
        assert!((lam.powi(-2) / eps.powi(4) - 1.0).abs() < 1e-12);
    }
    assert!((l_eps(0.1, 1.2, 1.8, &d).unwrap().exponent + 2.571428571428571).abs() < 1e-12);
    assert!(matches!(l_eps(0.1, 2.0, 2.0, &d), Err(ForgeError::DegenerateBalance)));
}

#[test]
fn asymmetric_root_matches_ratio_substitution() {
    let d = dim(6);
    let t = [2f64.powf(4.0 / 3.0), 2f64.powf(2.0 / 3.0)];
    let g = g_map(t, [1.0, 2.0], [1.5, 1.5], &d).unwrap();
    assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12, "{g:?}");
    assert_eq!(ratio_root([1.0, 2.0], 1.5, 6).map(|v| (v * 1e12).round()), t.map(|v| (v * 1e12).round()));
    let r = solve_reduced([1.0, 2.0], [1.5, 1.5], &d, &t_box()).unwrap();
    assert!((r.t[0] - t[0]).abs() < 1e-10 && (r.t[1] - t[1]).abs() < 1e-10, "{:?}", r.t);
    assert!(r.residual <= 1e-12);
    assert_eq!(r.scan.roots.len(), 1);
}

#[test]
fn symmetric_roots() {
    let d = dim(6);
    for (m, t) in [(1.0, 1.0), (2.0, 4.0)] {
        let r = solve_reduced([m, m], [1.5, 1.5], &d, &t_box()).unwrap();
        assert!((r.t[0] - t).abs() <= 1e-12 * t && (r.t[1] - t).abs() <= 1e-12 * t, "{:?}", r.t);
    }
}

#[test]
fn jacobian_closed_form_and_differences() {
    let d = dim(6);
    let (m, beta) = ([1.0, 2.0], [1.5, 1.5]);
    let r = solve_reduced(m, beta, &d, &t_box()).unwrap();
    assert!((r.jacobian.det / r.root_determinant - 1.0).abs() < 1e-10);
    assert!(r.jacobian.det < 0.0);
    let at_one = jac_g([1.0, 1.0], [1.0, 1.0], beta, &d).unwrap();
    assert!((at_one.det + 0.75).abs() < 1e-14);
    // Central differences, away from the root as well.
    for t in [r.t, [0.7, 2.2]] {
        let j = jac_g(t, m, beta, &d).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[c] += h;
            tm[c] -= h;
            let (gp, gm) = (g_map(tp, m, beta, &d).unwrap(), g_map(tm, m, beta, &d).unwrap());
            for row in 0..2 {
                let fd = (gp[row] - gm[row]) / (2.0 * h);
                assert!((fd - j.matrix[row][c]).abs() < 1e-6, "({row},{c}): {fd} vs {}", j.matrix[row][c]);
            }
        }
    }
}

#[test]
fn root_outside_the_box_is_reported() {
    let d = dim(6);
    let bx = Rect::square(2.0, 3.0).unwrap();
    assert!(matches!(solve_reduced([1.0, 1.0], [1.5, 1.5], &d, &bx), Err(ForgeError::NoRoot)));
}

#[test]
fn degrees_of_reference_maps() {
    let d = dim(6);
    assert_eq!(brouwer_degree(Ok, &unit_box(), 8).unwrap().degree, 1);
    assert_eq!(brouwer_degree(|p| Ok([p[0], -p[1]]), &unit_box(), 8).unwrap().degree, -1);
    let g = brouwer_degree(|t| g_map(t, [1.0, 1.0], [1.5, 1.5], &d), &t_box(), 16).unwrap();
    assert_eq!(g.degree, -1);
    assert!((g.total_winding / (2.0 * std::f64::consts::PI) + 1.0).abs() <= 1e-6);
    assert!(g.min_boundary_norm > 0.0);
    let json = serde_json::to_string(&g).unwrap();
    assert_eq!(serde_json::from_str::<DegreeResult>(&json).unwrap(), g);
}

#[test]
fn degree_is_stable_under_box_enlargement_and_shear() {
    let d = dim(6);
    let g = |t: [f64; 2]| g_map(t, [1.0, 2.0], [1.5, 1.5], &d);
    for bx in [t_box(), Rect::square(0.1, 8.0).unwrap()] {
        assert_eq!(brouwer_degree(g, &bx, 16).unwrap().degree, -1);
    }
    for bx in [unit_box(), Rect::square(-3.0, 3.0).unwrap()] {
        assert_eq!(brouwer_degree(|p| Ok([p[0], -p[1]]), &bx, 8).unwrap().degree, -1);
    }
    // Composition with the orientation-preserving shear (u, v) ↦ (u + v/2, v).
    let sheared = |p: [f64; 2]| Ok([p[0] + 0.5 * p[1], p[1]]);
    assert_eq!(brouwer_degree(sheared, &unit_box(), 8).unwrap().degree, 1);
    // The same shear about the root of g, on a box around the root.
    let r = [2f64.powf(4.0 / 3.0), 2f64.powf(2.0 / 3.0)];
    let shear_g = |p: [f64; 2]| g([r[0] + (p[0] - r[0]) + 0.5 * (p[1] - r[1]), p[1]]);
    let bx = Rect::new([r[0] - 0.5, r[1] - 0.5], [r[0] + 0.5, r[1] + 0.5]).unwrap();
    assert_eq!(brouwer_degree(shear_g, &bx, 16).unwrap().degree, -1);
}

#[test]
fn boundary_zero_makes_the_degree_undefined() {
    let d = dim(6);
    // The root (1, 1) of the symmetric map sits on the edge t₁ = 1.
    let bx = Rect::new([1.0, 0.5], [2.0, 2.0]).unwrap();
    let r = brouwer_degree(|t| g_map(t, [1.0, 1.0], [1.5, 1.5], &d), &bx, 4);
    assert!(matches!(r, Err(ForgeError::DegreeUndefined(_))), "{r:?}");
}

fn pipeline_field(d: &Dimension) -> KField {
    let mut z2 = vec![0.0; 6];
    z2[0] = 2.5;
    KField::new(vec![
        KProfile::symmetric(d, vec![0.0; 6], 1.5, 0.0).unwrap(),
        KProfile::symmetric(d, z2, 1.5, 0.0).unwrap(),
    ])
}

#[test]
fn model_source_reproduces_the_reduced_root() {
    let d = dim(6);
    let spec = QuadratureSpec::default();
    let field = pipeline_field(&d);
    let model = ExpansionModel::analytic(&d, &field, &spec).unwrap();
    let p = solve_full_reduced(&d, &field, 4e-3, &model, &GradientSource::Model, &ReducedBox::default()).unwrap();
    let root = solve_reduced(model.mk, model.beta, &d, &t_box()).unwrap();
    assert_eq!(p.t, root.t);
    assert!(p.x.iter().flatten().all(|&v| v == 0.0));
    let deg = reduced_degree(&d, &field, &p, &model, &GradientSource::Model, &ReducedBox::default(), 16).unwrap();
    assert_eq!((deg.offset.degree, deg.scale.degree, deg.degree), (1, -1, -1));
}

#[test]
fn full_source_offsets_shrink_with_eps() {
    let d = dim(6);
    let spec = QuadratureSpec::default();
    let field = pipeline_field(&d);
    let model = ExpansionModel::analytic(&d, &field, &spec).unwrap();
    let src = GradientSource::full(spec);
    let bx = ReducedBox::default();
    let sizes: Vec<f64> = [8e-3, 4e-3]
        .iter()
        .map(|&eps| {
            let p = solve_full_reduced(&d, &field, eps, &model, &src, &bx).unwrap();
            // The two-term model is exact at this scale up to quadrature.
            assert!((p.t[0] / p.model_root.t[0] - 1.0).abs() < 1e-6, "{:?}", p.t);
            assert!((p.t[0] / p.t[1] - 1.0).abs() < 1e-6, "{:?}", p.t);
            p.x.iter().map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max)
        })
        .collect();
    assert!(sizes[1] < sizes[0], "{sizes:?}");
    // x = λ(y − z) is the interaction-driven drift, of order 1/λ ∝ ε².
    assert!((sizes[0] / sizes[1] / 4.0 - 1.0).abs() < 0.05, "{sizes:?}");
}

#[test]
fn full_source_product_degree() {
    let d = dim(6);
    let spec = QuadratureSpec::default();
    let field = pipeline_field(&d);
    let model = ExpansionModel::analytic(&d, &field, &spec).unwrap();
    let src = GradientSource::full(spec);
    let bx = ReducedBox::default();
    let p = solve_full_reduced(&d, &field, 8e-3, &model, &src, &bx).unwrap();
    let deg = reduced_degree(&d, &field, &p, &model, &src, &bx, 2).unwrap();
    assert_eq!(deg.scale.degree, -1);
    assert!(deg.offset.min_alignment > 0.0);
    assert_eq!(deg.degree, -1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_closed_form_roots(n in 6usize..9, b in 0.05f64..0.9, m in 0.3f64..3.0) {
        let d = dim(n);
        let beta = 1.0 + b * (n as f64 - 5.5);
        let expect = m.powf(1.0 / (n as f64 - 4.0 - beta));
        let bx = Rect::square(expect / 4.0, expect * 4.0).unwrap();
        let r = solve_reduced([m, m], [beta, beta], &d, &bx).unwrap();
        prop_assert!((r.t[0] / expect - 1.0).abs() <= 1e-12 && (r.t[1] / expect - 1.0).abs() <= 1e-12);
        prop_assert!(r.residual <= 1e-12);
        let predicted = (beta * beta - 2.0 * beta * d.k()).signum();
        prop_assert_eq!(r.jacobian.det.signum(), predicted);
        prop_assert!((r.jacobian.det / r.root_determinant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_roots_match_ratio_substitution(b in 0.05f64..0.9, m1 in 0.3f64..3.0, m2 in 0.3f64..3.0) {
        let d = dim(6);
        let beta = 1.0 + 0.5 * b;
        let expect = ratio_root([m1, m2], beta, 6);
        let lo = expect[0].min(expect[1]) / 4.0;
        let hi = expect[0].max(expect[1]) * 4.0;
        let r = solve_reduced([m1, m2], [beta, beta], &d, &Rect::square(lo, hi).unwrap()).unwrap();
        for k in 0..2 {
            prop_assert!((r.t[k] / expect[k] - 1.0).abs() <= 1e-10, "{:?} vs {:?}", r.t, expect);
        }
    }
}
