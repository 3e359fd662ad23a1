//! Numerical construction and verification of two-peak solutions of
//! `Δ²u = (1 + εK(x)) u^(2*−1)` on `R^n`.

pub mod bubble;
pub mod constants;
pub mod error;
pub mod integrate;
pub mod kprofile;
pub mod lab;
pub mod pipeline;
pub mod reduced;
pub mod reduction;

pub use bubble::{Bubble, Dimension, PeakAnsatz, SearchBox};
pub use error::{ForgeError, Result};
pub use integrate::QuadratureSpec;
pub use kprofile::{KField, KProfile};
