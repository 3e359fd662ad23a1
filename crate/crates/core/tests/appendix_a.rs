use peakforge::constants::a_closed_form;
use peakforge::lab::*;
use peakforge::reduction::*;
use peakforge::{Dimension, KField, KProfile, QuadratureSpec};

fn dim6() -> Dimension {
    Dimension::new(6).unwrap()
}

#[test]
fn linear_estimates_hold_across_the_scale_sweep() {
    let r = verify_linear_bounds(&dim6(), &AppendixConfig::default(), &QuadratureSpec::default()).unwrap();
    assert!(r.verdict.passed(), "{:?}", r.verdict.failed_checks());
    // The interaction estimate holds with a strictly positive surplus exponent.
    assert!(r.interaction_surplus.unwrap() > 0.0);
    let ratios: Vec<f64> = r.rows.iter().filter(|x| x.estimate == "interaction_power").map(|x| x.max_ratio).collect();
    assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "{ratios:?}");
}

#[test]
fn anisotropic_estimate_vanishes_without_weight() {
    // K ≡ 0 everywhere: the K-weighted functional is identically zero.
    let dim = dim6();
    let cfg = AppendixConfig { lambdas: vec![10.0, 20.0, 40.0, 80.0], ..Default::default() };
    let s = cfg.space(&dim, 20.0, &QuadratureSpec::default()).unwrap();
    let lf = assemble_linear_form(&s, 0.5, &KField::new(vec![]), &[1.0, 1.0]);
    let lf0 = assemble_linear_form(&s, 0.0, &KField::new(vec![]), &[1.0, 1.0]);
    assert_eq!(lf, lf0);
}

#[test]
fn energy_balance_scales_linearly_in_eps_and_with_interaction() {
    let r = verify_energy_balance(&dim6(), &AppendixConfig::default(), &QuadratureSpec::default()).unwrap();
    assert!(r.verdict.passed(), "{:?}", r.verdict.failed_checks());
}

#[test]
fn energy_balance_for_constant_weight_matches_closed_form() {
    // A bubble far from the only critical point sees K ≡ K0 up to a negligible tail.
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let k0 = 0.7;
    let mut z = vec![0.0; 6];
    z[0] = 50.0;
    let field = KField::new(vec![KProfile::symmetric(&dim, z, 1.5, k0).unwrap()]);
    let s = build_space(&dim, &[vec![0.0; 6]], &[40.0], &DictSpec::default(), &spec).unwrap();
    let a = a_closed_form(&dim);
    let p = dim.p();
    let eps = 1e-2;
    for alpha in [0.9, 1.0, 1.1] {
        let b = assemble_linear_form(&s, eps, &field, &[alpha]).alpha[0];
        let exact = a * (alpha - alpha.powf(p) * (1.0 + eps * k0));
        assert!((b - exact).abs() <= 1e-9 * a, "{alpha}: {b} vs {exact}");
    }
    // At the stationary weight the balance vanishes.
    let ah = alpha_hat(&dim, &field, eps, 1);
    assert!(assemble_linear_form(&s, eps, &field, &ah).alpha[0].abs() <= 1e-12 * a);
}

#[test]
fn coercivity_on_separated_pairs() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let cfg = AppendixConfig { separation: 10.0, ..Default::default() };
    let s = cfg.space(&dim, 20.0, &spec).unwrap();
    let field = cfg.field(&dim).unwrap();
    let r0 = coercivity_spectrum(&s, 0.0, &field, 0.1).unwrap();
    assert!(r0.verdict.passed(), "{:?}", r0.verdict.failed_checks());
    assert!((r0.expected_diagonal[0] + 4.0).abs() < 1e-12);
    // The δ̂ shift is linear in ε.
    let shift = |eps: f64| (coercivity_spectrum(&s, eps, &field, 0.1).unwrap().delta_hat - r0.delta_hat).abs();
    let (s1, s2) = (shift(5e-3), shift(1e-2));
    assert!(s2 <= 1.0 * 1e-2, "{s2}");
    assert!((s2 / s1 / 2.0 - 1.0).abs() < 0.1, "{s1} {s2}");
}

#[test]
fn coercivity_decreases_as_peaks_approach() {
    let dim = dim6();
    let spec = QuadratureSpec::default();
    let mut last = f64::INFINITY;
    for d in [8.0, 4.0, 2.0, 1.25] {
        let cfg = AppendixConfig { separation: d, ..Default::default() };
        let s = cfg.space(&dim, 40.0, &spec).unwrap();
        let r = coercivity_spectrum(&s, 0.0, &cfg.field(&dim).unwrap(), 0.1).unwrap();
        assert!(r.delta_hat > 0.0 && r.delta_hat <= last, "d={d}: {}", r.delta_hat);
        last = r.delta_hat;
    }
}
