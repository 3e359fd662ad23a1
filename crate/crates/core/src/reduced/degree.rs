use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

use super::scale::Rect;

/// One boundary sample and the angle swept by the map since the previous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: [f64; 2],
    pub value: [f64; 2],
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub degree: i32,
    pub certificate: Vec<BoundarySample>,
    pub total_winding: f64,
    pub min_boundary_norm: f64,
    pub max_boundary_norm: f64,
}

/// Depth limit of the segment bisection; 2^-40 of a side is far below any useful scale.
const MAX_DEPTH: usize = 40;

/// Boundary values below this fraction of the largest one count as zeros.
const ZERO_FRACTION: f64 = 1e-12;

fn angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
}

struct Walker<F> {
    map: F,
    samples: Vec<BoundarySample>,
    evals: usize,
}

impl<F: FnMut([f64; 2]) -> Result<[f64; 2]>> Walker<F> {
    fn eval(&mut self, p: [f64; 2]) -> Result<[f64; 2]> {
        self.evals += 1;
        let v = (self.map)(p)?;
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(ForgeError::InvalidArgument(format!("map is not finite at {p:?}")));
        }
        Ok(v)
    }

    /// Walks from `(pa, fa)` to `(pb, fb)`, bisecting while the swept angle exceeds π/2.
    fn segment(&mut self, pa: [f64; 2], fa: [f64; 2], pb: [f64; 2], fb: [f64; 2], depth: usize) -> Result<()> {
        let inc = angle(fa, fb);
        if inc.abs() <= FRAC_PI_2 || depth == MAX_DEPTH || fa == [0.0, 0.0] || fb == [0.0, 0.0] {
            self.samples.push(BoundarySample { point: pb, value: fb, increment: inc });
            return Ok(());
        }
        let pm = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let fm = self.eval(pm)?;
        self.segment(pa, fa, pm, fm, depth + 1)?;
        self.segment(pm, fm, pb, fb, depth + 1)
    }
}

/// Degree of `map` on `bx` with respect to 0, by the winding number of the
/// image of the positively oriented boundary.
///
/// Each side is split into `grid_res` segments; a segment whose image turns
/// by more than π/2 is bisected until it does not.
pub fn brouwer_degree(
    map: impl FnMut([f64; 2]) -> Result<[f64; 2]>,
    bx: &Rect,
    grid_res: usize,
) -> Result<DegreeResult> {
    if grid_res == 0 {
        return Err(ForgeError::InvalidArgument("grid resolution must be positive".into()));
    }
    let [x0, y0] = bx.lo;
    let [x1, y1] = bx.hi;
    let corners = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let mut nodes = Vec::with_capacity(4 * grid_res);
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        for i in 0..grid_res {
            let s = i as f64 / grid_res as f64;
            nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    let mut w = Walker { map, samples: Vec::new(), evals: 0 };
    let values: Vec<[f64; 2]> = nodes.iter().map(|&p| w.eval(p)).collect::<Result<_>>()?;
    w.samples.push(BoundarySample { point: nodes[0], value: values[0], increment: 0.0 });
    for i in 0..nodes.len() {
        let j = (i + 1) % nodes.len();
        w.segment(nodes[i], values[i], nodes[j], values[j], 0)?;
    }
    // The closing sample repeats the start point.
    let norms: Vec<f64> = w.samples.iter().map(|s| s.value[0].hypot(s.value[1])).collect();
    let min_boundary_norm = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_boundary_norm = norms.iter().cloned().fold(0.0, f64::max);
    let unresolved = w.samples.iter().any(|s| s.increment.abs() > FRAC_PI_2);
    if min_boundary_norm <= ZERO_FRACTION * max_boundary_norm || unresolved {
        return Err(ForgeError::DegreeUndefined(min_boundary_norm));
    }
    let total_winding: f64 = w.samples.iter().map(|s| s.increment).sum();
    let degree = (total_winding / (2.0 * PI)).round();
    if (total_winding / (2.0 * PI) - degree).abs() > 1e-6 {
        return Err(ForgeError::DegreeUndefined(min_boundary_norm));
    }
    log::debug!("winding on {bx:?}: {} samples, {} evaluations", w.samples.len(), w.evals);
    Ok(DegreeResult { degree: degree as i32, certificate: w.samples, total_winding, min_boundary_norm, max_boundary_norm })
}

/// Degree of the identity-dominated offset block on `B_δ(0)`.
///
/// The straight-line homotopy to the identity has no boundary zero when
/// `⟨F(x), x⟩ > 0` on the sphere, so the degree is 1. The condition is
/// checked at the supplied boundary samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetCertificate {
    pub delta: f64,
    pub samples: usize,
    /// `min ⟨F(x), x⟩/δ²` over the samples.
    pub min_alignment: f64,
    pub degree: i32,
}

pub fn offset_degree(values: &[(Vec<f64>, Vec<f64>)], delta: f64) -> Result<OffsetCertificate> {
    if values.is_empty() {
        return Err(ForgeError::InvalidArgument("offset certificate needs boundary samples".into()));
    }
    let min_alignment = values
        .iter()
        .map(|(x, f)| x.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / (delta * delta))
        .fold(f64::INFINITY, f64::min);
    if !(min_alignment > 0.0) {
        return Err(ForgeError::DegreeUndefined(min_alignment));
    }
    Ok(OffsetCertificate { delta, samples: values.len(), min_alignment, degree: 1 })
}

/// `deg((f, g), Ω₁×Ω₂, 0) = deg(f, Ω₁, 0)·deg(g, Ω₂, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDegree {
    pub offset: OffsetCertificate,
    pub scale: DegreeResult,
    pub degree: i32,
}

impl ProductDegree {
    pub fn new(offset: OffsetCertificate, scale: DegreeResult) -> Self {
        let degree = offset.degree * scale.degree;
        Self { offset, scale, degree }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::square(-1.0, 1.0).unwrap()
    }

    #[test]
    fn linear_maps() {
        assert_eq!(brouwer_degree(Ok, &unit(), 4).unwrap().degree, 1);
        assert_eq!(brouwer_degree(|p| Ok([p[0], -p[1]]), &unit(), 4).unwrap().degree, -1);
        // z ↦ z², coarse grid forces refinement.
        let r = brouwer_degree(|p| Ok([p[0] * p[0] - p[1] * p[1], 2.0 * p[0] * p[1]]), &unit(), 1).unwrap();
        assert_eq!(r.degree, 2);
        assert!(r.certificate.iter().all(|s| s.increment.abs() <= FRAC_PI_2));
    }

    #[test]
    fn no_zero_inside() {
        let r = brouwer_degree(|p| Ok([p[0] + 3.0, p[1]]), &unit(), 8).unwrap();
        assert_eq!(r.degree, 0);
    }

    #[test]
    fn boundary_zero_rejected() {
        let e = brouwer_degree(|p| Ok([p[0] - 1.0, p[1]]), &unit(), 8).unwrap_err();
        assert!(matches!(e, ForgeError::DegreeUndefined(_)));
    }
}
