//! Stability analysis of the optical spring acting on the antisymmetric
//! mechanical mode of a detuned dual-recycled interferometer.
//!
//! The pipeline is
//!
//! ```text
//! config / preset -> ModeParams -> DerivedCoefficients -> CharPoly -> RootReport
//!                                          |                  |
//!                                          |                  +-> Routh-Hurwitz verdict
//!                                          +-> perturbative roots, minimal detuning
//! ```
//!
//! All internal quantities are angular (rad/s); user-facing frequencies are
//! ordinary frequencies in Hz and are converted at the boundary.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod meanfield;
pub mod params;
pub mod poly;
pub mod stability;

pub use analysis::{analyze, AnalysisReport, SweepParam, SweepRow};
pub use dynamics::{
    characteristic_polynomial, derive_coefficients, susceptibility, CharPoly, DerivedCoefficients,
    SusceptibilitySample,
};
pub use error::{Error, Result};
pub use meanfield::{MeanFields, PhysicalConfig};
pub use params::{ModeParams, Preset, Topology};
pub use stability::{
    first_order_roots, min_detuning, routh_hurwitz, solve_roots, stability_boundary,
    zero_order_roots, PerturbativeRoots, RootReport, RouthHurwitz,
};
