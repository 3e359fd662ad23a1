//! Empirical verification of the appendix estimates by quadrature and scaling fits.

mod appendix_a;
mod appendix_b;
mod fit;
mod suite;
mod verdict;

pub use appendix_a::{
    coercivity_spectrum, energy_balance, verify_energy_balance, verify_linear_bounds, AppendixConfig, BoundRow,
    CoercivityReport, EnergyBalanceReport, LinearBoundsReport,
};
pub use appendix_b::{
    lemma_b1_value, lemma_b2_pair, lemma_b3_value, lemma_b4_value, verify_lemma_b1, verify_lemma_b2,
    verify_lemma_b3, verify_lemma_b4, B1Report, B2Report, B3Report, B4Report,
};
pub use fit::{fit_power_law, ScalingFit};
pub use suite::{verify_coercivity, verify_lemma, CoercivityConfig, LabConfig, LemmaId};
pub use verdict::{Check, SampleRow, Verdict};
