//! The positivity check on a single bubble and on a deliberately dented profile.

use peakforge::pipeline::{positivity_check, AssembledSolution, PositivityConfig};
use peakforge::reduction::{Entry, Tag};
use peakforge::Dimension;

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let cfg = PositivityConfig::default();
    let bubble = |x0: f64, mu: f64| {
        let mut c = vec![0.0; 6];
        c[0] = x0;
        Entry { peak: 0, center: c, mu, tag: Tag::Value }
    };
    let single = AssembledSolution::new(&dim, vec![(1.0, bubble(0.0, 3.0))])?;
    let dented = AssembledSolution::new(&dim, vec![(1.0, bubble(0.0, 1.0)), (-10.0, bubble(5.0, 1.0))])?;
    for (name, u) in [("single bubble", single), ("dented", dented)] {
        let r = positivity_check(&u, &cfg, 1)?;
        println!("{name}: {} over {} points, min u = {:.3e}, |u^-|_(2*) = {:.3e}", if r.verdict.passed() { "PASS" } else { "FAIL" }, r.points, r.min_value, r.negative_norm);
        for w in r.witnesses.iter().take(3) {
            println!("  witness u({:.3?}) = {:.3e}", w.x, w.u);
        }
    }
    Ok(())
}
