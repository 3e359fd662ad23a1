//! The reduced map in the balancing variables: roots, Jacobian sign,
//! uniqueness scan, and the Brouwer degree, first for the leading-order
//! model and then with gradients from the full correction solve.

use peakforge::constants::ExpansionModel;
use peakforge::reduced::{brouwer_degree, g_map, l_eps, reduced_degree, solve_full_reduced, solve_reduced, GradientSource, ReducedBox};
use peakforge::{Dimension, KField, KProfile, QuadratureSpec};

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let spec = QuadratureSpec::default();
    let bx = ReducedBox::default();

    for m in [[1.0, 1.0], [1.0, 2.0]] {
        let wide = peakforge::reduced::Rect::square(0.05, 40.0)?;
        let r = solve_reduced(m, [1.5, 1.5], &dim, &wide)?;
        println!("m = {m:?}: t* = {:?}, det Jac = {:.4} (formula {:.4}), {} sign-change cells", r.t, r.jacobian.det, r.root_determinant, r.scan.candidate_cells.len());
    }
    let deg = brouwer_degree(|t| g_map(t, [1.0, 1.0], [1.5, 1.5], &dim), &bx.t_box()?, 16)?;
    println!("deg(g, [0.25, 4]^2, 0) = {}", deg.degree);

    let mut z2 = vec![0.0; 6];
    z2[0] = 2.5;
    let field = KField::new(vec![KProfile::symmetric(&dim, vec![0.0; 6], 1.5, 0.0)?, KProfile::symmetric(&dim, z2, 1.5, 0.0)?]);
    let model = ExpansionModel::analytic(&dim, &field, &spec)?;
    let eps = 8e-3;
    println!("L_eps = {:.4e} at eps = {eps}", l_eps(eps, 1.5, 1.5, &dim)?.value);
    for source in [GradientSource::Model, GradientSource::full(spec.clone())] {
        let p = solve_full_reduced(&dim, &field, eps, &model, &source, &bx)?;
        let grid = if source == GradientSource::Model { 16 } else { 2 };
        let d = reduced_degree(&dim, &field, &p, &model, &source, &bx, grid)?;
        println!(
            "{} source: t = {:?}, |x| = {:.3e}, lambda = {:?}, degree {} = {} x {}",
            source.name(),
            p.t,
            p.x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
            p.lambda,
            d.degree,
            d.offset.degree,
            d.scale.degree
        );
    }
    Ok(())
}
