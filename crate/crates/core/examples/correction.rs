//! The correction problem for a well-separated pair: the fixed point, its
//! bound, the multipliers, and the reduced gradients.

use peakforge::lab::coercivity_spectrum;
use peakforge::reduction::{build_space, lagrange_multipliers, reduced_gradients, solve_correction, DictSpec};
use peakforge::{Dimension, KField, KProfile, QuadratureSpec};

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let spec = QuadratureSpec::default();
    let d = 4.0;
    let mut z2 = vec![0.0; 6];
    z2[0] = d;
    let field = KField::new(vec![KProfile::symmetric(&dim, vec![0.0; 6], 1.5, 0.5)?, KProfile::symmetric(&dim, z2.clone(), 1.5, 0.5)?]);
    let space = build_space(&dim, &[vec![0.0; 6], z2], &[40.0, 40.0], &DictSpec::default(), &spec)?;
    let s = space.summary();
    println!("space: {} dictionary entries, {} constraints, basis {}, condition {:.2e}", s.dictionary_size, s.constraints, s.basis_size, s.condition);

    for eps in [0.0, 1e-2, 2e-2] {
        let sol = solve_correction(&space, eps, &field)?;
        println!(
            "eps {eps:<5}: {} iterations, |omega| {:.3e} <= 1.2 |Q^-1||f| = {:.3e}, alpha {:?}, |v| {:.3e}",
            sol.iterations,
            sol.omega_norm,
            1.2 * sol.q_inv_norm * sol.f_norm,
            sol.alpha,
            sol.v_norm
        );
        let g = reduced_gradients(&space, &sol)?;
        println!("           dJ/dlambda {:?}, dJ/dy1 {:.3e}", g.lambda, g.y[0][0]);
        let m = lagrange_multipliers(&space, &sol)?;
        let worst = m.diagonal_deviation.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        println!("           multiplier Gram diagonal deviation {worst:.1e}");
    }
    let c = coercivity_spectrum(&space, 1e-2, &field, 0.1)?;
    println!("coercivity: delta_hat {:.6}, alpha diagonal / A {:?}", c.delta_hat, c.alpha_diagonal);
    Ok(())
}
