use std::fs;
use std::path::{Path, PathBuf};

use crate::constants::write_constants_csv;
use crate::error::Result;

use super::run::RunReport;

fn sweep_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "eps", "status", "t1", "t2", "lambda1", "lambda2", "offset1", "offset2", "alpha1", "alpha2", "v_norm",
        "residual_norm", "iterations", "degree", "min_u", "negative_norm",
    ])?;
    let e = |x: f64| format!("{x:e}");
    for p in &report.points {
        match (&p.report, &p.failure) {
            (Some(r), _) => w.write_record([
                e(p.eps),
                "ok".into(),
                e(r.reduced.t[0]),
                e(r.reduced.t[1]),
                e(r.reduced.lambda[0]),
                e(r.reduced.lambda[1]),
                e(r.center_offsets[0]),
                e(r.center_offsets[1]),
                e(r.alpha[0]),
                e(r.alpha[1]),
                e(r.v_norm),
                e(r.residual_norm),
                r.correction_iterations.to_string(),
                r.degree.as_ref().map(|d| d.degree.to_string()).unwrap_or_default(),
                e(r.positivity.min_value),
                e(r.positivity.negative_norm),
            ])?,
            (None, f) => {
                let status = f.as_ref().map_or("failed".to_string(), |f| format!("failed: {}", f.stage));
                let mut row = vec![e(p.eps), status];
                row.resize(16, String::new());
                w.write_record(row)?;
            }
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Every file of a report as `(name, bytes)`, in a fixed order.
pub fn render_report(report: &RunReport) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    files.push(("report.json".to_string(), json));
    files.push(("sweep.csv".to_string(), sweep_csv(report)?));
    let mut constants = Vec::new();
    write_constants_csv(&report.constants, &mut constants)?;
    files.push(("constants.csv".to_string(), constants));
    for v in report.all_verdicts() {
        let mut buf = Vec::new();
        v.write_csv(&mut buf)?;
        files.push((format!("verdict_{}.csv", v.name), buf));
    }
    Ok(files)
}

/// Writes the report files into `dir`, plus a `timing.json` sidecar that is
/// not part of the deterministic output. Either every file is written or none
/// is left behind.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = render_report(report)?;
    let mut timing = serde_json::to_vec_pretty(&report.timing)?;
    timing.push(b'\n');
    files.push(("timing.json".to_string(), timing));
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for (name, bytes) in &files {
            let tmp = dir.join(format!(".{name}.partial"));
            written.push(tmp.clone());
            fs::write(&tmp, bytes)?;
        }
        for (name, _) in &files {
            let tmp = dir.join(format!(".{name}.partial"));
            let path = dir.join(name);
            fs::rename(&tmp, &path)?;
            written.push(path);
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(files.iter().map(|(name, _)| dir.join(name)).collect()),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Reads back a `report.json`.
pub fn load_report(path: &Path) -> Result<RunReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
