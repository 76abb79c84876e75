//! The abstract integral equation: right-hand sides, weak* convolutions and
//! the windowed Picard solver.

mod convolution;
mod picard;
pub(crate) mod rhs;
pub(crate) mod trajectory;

pub use convolution::{
    convolution_bound_check, range_identity_check, variation_of_constants_psi, weakstar_convolve,
    weakstar_convolve_ell,
};
pub use picard::{
    perturbed_semigroup_t, picard_solve_aie, semigroup_property_residual, InitialIterate, PicardOptions, PicardReport,
};
pub use rhs::{validate_lipschitz, DelayTerm, GridHistory, HistorySample, RhsSpec, ScalarMap};
pub use trajectory::Trajectory;
