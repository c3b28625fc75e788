//! Reduced Kähler-Ricci flow on model ends.
//!
//! Metrics are rotationally symmetric, `ω = φ(ρ)·ω_D + ψ(ρ)·√−1∂ρ∧∂̄ρ`, on
//! the complement of a divisor `D`; the divisor itself only enters through its
//! dimension, its Einstein constant and the twisting of the normal bundle.

pub mod ansatz;
pub mod decay;
pub mod error;
pub mod fd;
pub mod fit;
pub mod flow;
pub mod interp;
pub mod models;
pub mod rescaling;
pub mod series;

pub use ansatz::{
    cumulative_distance, curvature_components, curvature_norm_at, curvature_norm_profile, profile_from_potential,
    profile_from_potential_fn, radial_distance, ricci_coefficients, ricci_norm_profile, scalar_curvature,
    uniform_grid, BaseGeometry, CurvatureComponents, RadialProfile, RicciCoefficients,
};
pub use error::{Error, Result, SingularityKind};
