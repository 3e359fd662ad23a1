//! Structure constants, expansion constants, and the two-term reduced model.

use peakforge::constants::{constants_table, interaction_constants, orthogonality_table, ExpansionModel};
use peakforge::{Dimension, KField, KProfile, QuadratureSpec};

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let spec = QuadratureSpec::default();
    for row in constants_table(&dim, &[1.25, 1.5, 1.75], &spec)? {
        let beta = row.beta.map(|b| format!("{b}")).unwrap_or_default();
        println!("{:<14} {:>5} {:>22.14e}  cross-check dev {:.1e}", row.name, beta, row.value, row.rel_dev);
    }
    let ic = interaction_constants(&dim, &spec)?;
    println!("C0 = {:.6} (spread {:.1e}), |C1| = {:.6} with orientation {}", ic.c0, ic.c0_max_rel_dev, ic.c1, ic.c1_orientation);

    let t = orthogonality_table(&dim, &[10.0, 20.0, 40.0, 80.0], &spec)?;
    println!("single-bubble cross products / A: {:?}", t.single.map(|v| v / t.a));
    println!("cross-bubble exponents in lambda: {:?}", t.cross_exponents);

    let mut z2 = vec![0.0; 6];
    z2[0] = 2.5;
    let field = KField::new(vec![KProfile::symmetric(&dim, vec![0.0; 6], 1.5, 0.0)?, KProfile::symmetric(&dim, z2, 1.5, 0.0)?]);
    let model = ExpansionModel::analytic(&dim, &field, &spec)?;
    println!("model at separation 2.5: m = {:?}, d = {:?}, theta = {:?}", model.mk, model.dk, model.theta_j);
    Ok(())
}
