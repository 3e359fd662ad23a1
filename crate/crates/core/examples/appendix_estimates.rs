//! Every appendix estimate checked by sweeps and scaling fits.
//!
//! Pass estimate ids (`a1 b3 ...`) to run a subset.

use peakforge::lab::{verify_lemma, LabConfig, LemmaId};
use peakforge::{Dimension, QuadratureSpec};

fn main() -> peakforge::Result<()> {
    let dim = Dimension::new(6)?;
    let spec = QuadratureSpec::default();
    let cfg = LabConfig::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ids: Vec<LemmaId> =
        if args.is_empty() { LemmaId::ALL.to_vec() } else { args.iter().map(|a| a.parse()).collect::<peakforge::Result<_>>()? };
    for id in ids {
        let v = verify_lemma(id, &dim, &cfg, &spec)?;
        println!("{} {id}", if v.passed() { "PASS" } else { "FAIL" });
        for c in &v.checks {
            println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(())
}
