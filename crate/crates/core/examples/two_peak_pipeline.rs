//! The full construction over the default ε sweep, written to a report directory.
//!
//! Usage: `cargo run --release --example two_peak_pipeline [out-dir]`

use peakforge::pipeline::{emit_report, run_pipeline, RunConfig};

fn main() -> peakforge::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "forge-out".into());
    let cfg = RunConfig::default();
    let report = run_pipeline(&cfg)?;
    for p in report.accepted() {
        println!(
            "eps {:.0e}: lambda {:.4e}, |y - z| {:.3e}, alpha {:.12}, |v| {:.3e}, degree {}, min u/U_peak {:.6}",
            p.eps,
            p.reduced.lambda[0],
            p.center_offsets[0],
            p.alpha[0],
            p.v_norm,
            p.degree.as_ref().map_or(0, |d| d.degree),
            p.positivity.min_relative
        );
    }
    for v in report.all_verdicts() {
        println!("{} {}", if v.passed() { "PASS" } else { "FAIL" }, v.name);
    }
    let files = emit_report(&report, std::path::Path::new(&dir))?;
    println!("wrote {} files to {dir}", files.len());
    Ok(())
}
