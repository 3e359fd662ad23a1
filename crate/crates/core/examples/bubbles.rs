//! The bubble family: closed-form values, the PDE residual, and scale covariance.

use peakforge::bubble::{bubble_residual, bubble_value, eps12, Bubble};
use peakforge::{Dimension, PeakAnsatz};

fn main() -> peakforge::Result<()> {
    for n in [5, 6, 8] {
        let dim = Dimension::new(n)?;
        let b = Bubble::new(vec![0.0; n], 2.0)?;
        let mut worst = 0.0f64;
        for i in 0..100 {
            let mut x = vec![0.0; n];
            x[0] = 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0) / b.lambda;
            let up = dim.pow_p(bubble_value(&dim, &b, &x)?);
            worst = worst.max((bubble_residual(&dim, &b, &x)? / up).abs());
        }
        println!("n={n}: 2* = {:.4}, C_N = {:.6}, max |Δ²U − U^(2*−1)|/U^(2*−1) = {worst:.2e}", dim.two_star(), dim.c_n());
    }

    // U_{0,λ}(x) = λ^((n−4)/2) U_{0,1}(λx).
    let dim = Dimension::new(6)?;
    let x = [0.3, -0.1, 0.0, 0.2, 0.0, 0.05];
    let lam = 7.5;
    let lhs = bubble_value(&dim, &Bubble::new(vec![0.0; 6], lam)?, &x)?;
    let scaled: Vec<f64> = x.iter().map(|v| lam * v).collect();
    let rhs = lam.powf(dim.k()) * bubble_value(&dim, &Bubble::new(vec![0.0; 6], 1.0)?, &scaled)?;
    println!("scale covariance: {lhs:.15e} vs {rhs:.15e}");

    let mut y2 = vec![0.0; 6];
    y2[0] = 1.0;
    let pair = PeakAnsatz::new([1.0, 1.0], [Bubble::new(vec![0.0; 6], 20.0)?, Bubble::new(y2, 40.0)?])?;
    println!("two-peak ansatz: eps12 = {:.4e} (= {:.4e}), value at midpoint {:.4e}", pair.eps12(&dim), eps12(&dim, 20.0, 40.0), pair.value(&dim, &[0.5, 0.0, 0.0, 0.0, 0.0, 0.0]));
    Ok(())
}
