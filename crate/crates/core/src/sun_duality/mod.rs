//! The history space `X = C([-h,0]; Y)`, its dual, sun dual and sun-star
//! representations, the shift semigroup with its adjoints, and the resolvents.

mod history;
mod ops;
mod resolvent;
mod states;

pub use history::{shift_t0, HistoryX};
pub use ops::{
    adjoint_shift_t0star, delta_op, ell_op, iota, iota_inverse, j_embed, j_inverse, j_y_embed, kappa_embed,
    pair_sun_sunstar, pair_x_dual, pair_x_sun, shifted_pairing_split, sun_shift_t0sun, sun_shift_with,
    sunstar_shift, tail_nodes, translate_t1, KappaFunctional, RangeGate, SunShiftOptions,
};
pub use resolvent::{
    default_out_cells, resolvent_a0, resolvent_a0_pairing_exact, resolvent_a0star, resolvent_pairing_exact,
    ResolventA0Action, ResolventA0StarAction,
};
pub use states::{NbvFunction, SunStarState, SunState};

#[cfg(test)]
mod tests;
