//! Vector-valued functions of bounded variation and Riemann–Stieltjes integrals
//! with respect to a bilinear product.

mod bv;
mod integrate;
mod pairing;
mod partition;

pub use bv::{
    partition_variation, total_variation, variation_additivity_check, BvFunction, ClosureBv, Jump, StructureHint,
    StructuredBv, VariationLadder, VariationReport, VariationStatus, VecFn,
};
pub use integrate::{
    integration_by_parts_residual, rs_integrate, rs_sum_left, rs_sum_right, rs_vs_lebesgue, rs_vs_riemann,
    LadderSchedule, RsOptions, RsOutcome, RsPath, SumMode,
};
pub use pairing::{BilinearFn, BilinearPairing, PairingKind};
pub use partition::{TagRule, TaggedPartition};
