//! Numerics for abstract delay differential equations in the sun-star framework.
//!
//! The state space is `X = C([-h,0]; Y)` for a finite-dimensional `Y`. The crate
//! provides the shift semigroup and its adjoints, the sun dual `Y* × L¹` and the
//! sun-star states, weak* convolutions, a fixed-point solver for the abstract
//! integral equation, an independent method-of-steps solver, and the
//! Riemann–Stieltjes machinery that underlies the duality.

pub mod aie;
pub mod dde_bridge;
pub mod density;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod rs_integration;
pub mod scalar;
pub mod semigroup;
pub mod scenario;
pub mod sun_duality;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{lit, Norm, Real};

pub type HistoryF64 = sun_duality::HistoryX<f64>;
pub type HistoryF32 = sun_duality::HistoryX<f32>;
pub type NbvF64 = sun_duality::NbvFunction<f64>;
pub type NbvF32 = sun_duality::NbvFunction<f32>;
pub type SunStateF64 = sun_duality::SunState<f64>;
pub type SunStateF32 = sun_duality::SunState<f32>;
pub type SemigroupF64 = semigroup::SemigroupHandle<f64>;
pub type SemigroupF32 = semigroup::SemigroupHandle<f32>;
pub type RhsF64 = aie::RhsSpec<f64>;
pub type RhsF32 = aie::RhsSpec<f32>;
pub type TrajectoryF64 = aie::Trajectory<f64>;
pub type TrajectoryF32 = aie::Trajectory<f32>;
