//! Milstein finite-difference schemes for the linear parabolic SPDE
//!
//! ```text
//! dv = -mu v_x dt + 1/2 v_xx dt - sqrt(rho) v_x dM_t
//! ```
//!
//! with drift-implicit (`theta`) and Itô-implicit (`sigma`) weighting, mean-square
//! Fourier stability analysis, mean-square error harnesses against the closed-form
//! solution, power-graded meshes for the absorbing-boundary problem and multilevel
//! Monte Carlo estimation of a CDO tranche spread leg.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`, which is what the harnesses and the CLI use.

pub mod credit;
pub mod error;
pub mod grid;
pub mod harness;
pub mod model;
pub mod operators;
pub mod scheme;
pub mod stability;

mod real;

pub use error::{Result, SpdeError};
pub use real::Real;

pub use credit::{GridKind, TrancheSpec};
pub use grid::Grid;
pub use harness::{BrownianPath, LevelEstimate, LevelLayout, StreamKey};
pub use model::ModelParams;
pub use operators::{Boundary, TridiagonalMatrix};
pub use scheme::{ItoVariant, SchemeParams, SolutionField, Stepper};
pub use stability::StabilityReport;

pub type ModelParams64 = model::ModelParams<f64>;
pub type Grid64 = grid::Grid<f64>;
pub type SchemeParams64 = scheme::SchemeParams<f64>;
pub type SolutionField64 = scheme::SolutionField<f64>;
pub type BrownianPath64 = harness::BrownianPath<f64>;
pub type TridiagonalMatrix64 = operators::TridiagonalMatrix<f64>;
pub type TrancheSpec64 = credit::TrancheSpec<f64>;
pub type LevelEstimate64 = harness::LevelEstimate<f64>;
pub type StabilityReport64 = stability::StabilityReport<f64>;

pub type ModelParams32 = model::ModelParams<f32>;
pub type Grid32 = grid::Grid<f32>;
pub type SchemeParams32 = scheme::SchemeParams<f32>;
pub type SolutionField32 = scheme::SolutionField<f32>;
