//! Random field generators. Each simulator is a pure function of its inputs
//! and a `u64` seed.

mod brown_resnick;
mod frechet;
mod gaussian;
mod mma;
mod points;

pub use brown_resnick::{
    sim_brown_resnick, sim_brown_resnick_lattice, BrMethod, BrSample, BrSimConfig,
    CauchyCorrelation,
};
pub use frechet::{frechet_cdf, sim_frechet_iid};
pub use gaussian::{
    pivoted_cholesky, sim_gaussian_increments, IncrementSampler, LowRankFactor, VariogramSpec,
    DEFAULT_JITTER,
};
pub use mma::{geometric_tail_bound, sim_mma, WeightSpec};
pub use points::{sim_point_field, CountRule, FieldSource};

