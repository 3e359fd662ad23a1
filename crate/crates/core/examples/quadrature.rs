//! The integration engines on integrals with known values.

use peakforge::bubble::profile;
use peakforge::constants::a_closed_form;
use peakforge::integrate::{integrate_mc, integrate_radial_scaled, integrate_two_center_scaled, sphere_moment, CloudSpec};
use peakforge::{Dimension, QuadratureSpec};

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let spec = QuadratureSpec::default();
    let area = Dimension::sphere_area(6);
    let a = a_closed_form(&dim);

    // A = ∫U^(2*) at a large scale, radially.
    let lam = 1e5;
    let radial = area * integrate_radial_scaled(|r| dim.pow_2star(profile(&dim, lam, r * r)), &dim, &spec, 1.0 / lam)?;
    println!("radial:      A = {radial:.12e} (closed form {a:.12e})");

    // ⟨U₁, U₂⟩ = ∫U₁^(2*−1)U₂ for two bubbles, by the two-center rule and by Monte Carlo.
    let (c1, mut c2) = (vec![0.0; 6], vec![0.0; 6]);
    c2[0] = 1.0;
    let l = 20.0;
    let f = |r1: f64, r2: f64| dim.pow_p(profile(&dim, l, r1 * r1)) * profile(&dim, l, r2 * r2);
    let tc = integrate_two_center_scaled(f, &c1, &c2, [1.0 / l; 2], &dim, &spec)?;
    let cloud = CloudSpec { centers: [c1.clone(), c2.clone()], lambdas: [l, l] };
    let mc = integrate_mc(
        |x| {
            let r1 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r2 = x.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            f(r1, r2)
        },
        &dim,
        &spec,
        &cloud,
    );
    println!("two-center:  <U1,U2> = {tc:.8e}");
    println!("Monte Carlo: <U1,U2> = {:.8e} ± {:.1e} ({} samples)", mc.value, mc.std_error, mc.samples);

    for beta in [1.25, 1.5, 1.75] {
        println!("sphere moment E|w1|^{beta} on S^5 = {:.10}", sphere_moment(&dim, beta)?);
    }
    Ok(())
}
