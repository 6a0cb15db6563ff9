//! Spatial extremogram: estimators, simulators and closed-form references
//! for the extremal dependence of random fields on lattices and on
//! Poisson-sampled points.

pub mod error;
pub mod field;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod normal;
pub mod oracles;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use field::{
    lag_grid, quantile, quantile_sorted, resolve_threshold, ExtremeSet, Lag, LatticeField,
    PointField, Region, Threshold, ThresholdRule,
};
pub use lattice::{lattice_ese, lattice_ese_by_distance, EseResult, EseRow};
pub use kernel::{kernel_ese, kernel_ese_isotropic, kernel_p_hat, kernel_tau_hat, KernelShape, KernelSpec, NuMode};
pub use inference::{
    clt_rate_check, mc_study, permutation_bands, BandResult, Data, Estimator, EstimatorConfig, McSummary,
    ModelConfig, RateCheck,
};
