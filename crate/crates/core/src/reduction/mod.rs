//! Galerkin discretization of the constrained correction problem and the
//! reduced gradients of the energy.

mod correction;
mod dictionary;
mod forms;
mod space;

pub use correction::{
    energy_value, fixed_point, lagrange_multipliers, reduced_gradients, solve_correction, solve_correction_with,
    CorrectionOptions, CorrectionSolution, FixedPointTrace, MultiplierReport, PeakMultipliers, ReducedGradients,
};
pub use dictionary::{DictSpec, Entry, Tag};
pub use forms::{alpha_hat, assemble_linear_form, assemble_quadratic_form, LinearForm, QuadraticForm};
pub use space::{build_space, GalerkinSpace, SpaceSummary};

pub(crate) use forms::{assemble, interaction_power, power_increment, CloudData};
