use serde::{Deserialize, Serialize};

use super::ScalingFit;

/// One pass/fail sub-check with a human-readable measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    /// `|measured − target| ≤ tol`.
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        let passed = (measured - target).abs() <= tol;
        Self::new(name, passed, format!("measured {measured:.6}, target {target:.6} ± {tol}"))
    }
}

/// A row of a verifier's sample table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub series: String,
    pub abscissa: f64,
    pub value: f64,
    pub std_error: f64,
    #[serde(with = "nan_as_null")]
    pub fit: f64,
    #[serde(with = "nan_as_null")]
    pub residual: f64,
}

/// Raw rows have no fitted law; JSON has no NaN, so it travels as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl SampleRow {
    pub fn from_fit(series: &str, fit: &ScalingFit, std_errors: Option<&[f64]>) -> Vec<Self> {
        fit.samples
            .iter()
            .enumerate()
            .map(|(i, &(x, v))| {
                let f = fit.predict(x);
                Self {
                    series: series.into(),
                    abscissa: x,
                    value: v,
                    std_error: std_errors.map_or(0.0, |s| s[i]),
                    fit: f,
                    residual: v / f - 1.0,
                }
            })
            .collect()
    }

    pub fn raw(series: &str, abscissa: f64, value: f64, std_error: f64) -> Self {
        Self { series: series.into(), abscissa, value, std_error, fit: f64::NAN, residual: f64::NAN }
    }
}

/// Outcome of a verifier: its sub-checks and the full sample table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub checks: Vec<Check>,
    pub table: Vec<SampleRow>,
}

impl Verdict {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), checks: Vec::new(), table: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// CSV block: series, abscissa, value, s.e., fitted law, residual.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["verifier", "series", "abscissa", "value", "std_error", "fit", "residual"])?;
        for r in &self.table {
            wr.write_record([
                self.name.clone(),
                r.series.clone(),
                format!("{:e}", r.abscissa),
                format!("{:e}", r.value),
                format!("{:e}", r.std_error),
                format!("{:e}", r.fit),
                format!("{:e}", r.residual),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
