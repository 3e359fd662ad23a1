//! The finite-dimensional problem left after the reduction: scale law,
//! the map `g`, its zeros and their Brouwer degree.

mod degree;
mod full;
mod scale;

pub use degree::{brouwer_degree, offset_degree, BoundarySample, DegreeResult, OffsetCertificate, ProductDegree};
pub use full::{reduced_degree, solve_full_reduced, Evaluation, GradientSource, ReducedBox, ReducedPoint, ReducedSystem};
pub use scale::{
    g_map, jac_g, l_eps, newton_g, root_determinant, solve_reduced, symmetric_guess, uniqueness_scan, Jacobian, NewtonReport,
    Rect, ReducedRoot, ScaleLaw, UniquenessScan,
};
