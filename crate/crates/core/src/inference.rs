//! Permutation bands and the Monte Carlo harness.
//!
//! Every replicate and permutation draws from its own stream derived from
//! `(seed, tag, index)`, and results are reduced in index order, so outputs
//! are bitwise identical for any number of worker threads.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    quantile_sorted, resolve_threshold, ExtremeSet, Lag, LatticeField, PointField, Region, Threshold,
    ThresholdRule,
};
use crate::kernel::{kernel_ese_at, kernel_ese_isotropic_at, KernelSpec, NuMode};
use crate::lattice::{
    lattice_ese_at, lattice_ese_by_distance_at, pair_count, reference_level, EseResult, EseRow,
};
use crate::oracles;
use crate::rng::{derive_seed, derived_rng};
use crate::simulate::{
    sim_brown_resnick_lattice, sim_frechet_iid, sim_mma, sim_point_field, BrMethod, BrSimConfig,
    CountRule, FieldSource, VariogramSpec, WeightSpec,
};

pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Observations on a grid or at scattered points.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Lattice(LatticeField),
    Points(PointField),
}

impl Data {
    pub fn values(&self) -> &[f64] {
        match self {
            Data::Lattice(f) => f.values(),
            Data::Points(p) => p.values(),
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Ok(match self {
            Data::Lattice(f) => Data::Lattice(f.with_values(values)?),
            Data::Points(p) => Data::Points(p.with_values(values)?),
        })
    }
}

/// A 2-d grid as points at integer coordinates `(i, j)`, in a region of
/// unit cells centred on the sites, so `|S|` equals the number of sites.
pub fn lattice_as_points(field: &LatticeField) -> Result<PointField> {
    let dims = field.dims();
    if dims.len() != 2 {
        return Err(Error::invalid("only 2-d grids can be read as point fields"));
    }
    let locations = (0..dims[0])
        .flat_map(|i| (0..dims[1]).map(move |j| [i as f64, j as f64]))
        .collect();
    let region = Region::new(-0.5, dims[0] as f64 - 0.5, -0.5, dims[1] as f64 - 0.5)?;
    PointField::new(locations, field.values().to_vec(), region, Some(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Lattice estimate at each vector lag.
    Lattice { lags: Vec<Lag> },
    /// Lattice estimate pooled over lags of equal norm up to `max_dist`.
    LatticeByDistance { max_dist: f64 },
    Kernel {
        kernel: KernelSpec,
        nu: NuMode,
        lags: Vec<Lag>,
    },
    /// Kernel estimate averaged over 8 rotations per distance.
    KernelIsotropic {
        kernel: KernelSpec,
        nu: NuMode,
        distances: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub set_a: ExtremeSet,
    pub set_b: ExtremeSet,
    pub rule: ThresholdRule,
    pub estimator: Estimator,
}

impl EstimatorConfig {
    pub fn unit_sets(rule: ThresholdRule, estimator: Estimator) -> Self {
        Self {
            set_a: ExtremeSet::unit_ray(),
            set_b: ExtremeSet::unit_ray(),
            rule,
            estimator,
        }
    }

    pub fn estimate(&self, data: &Data) -> Result<EseResult> {
        let threshold = resolve_threshold(data.values(), self.rule)?;
        self.estimate_at(data, threshold)
    }

    fn estimate_at(&self, data: &Data, threshold: Threshold) -> Result<EseResult> {
        let (a, b) = (&self.set_a, &self.set_b);
        let reference = reference_level(self.rule);
        let as_points;
        let points = match (data, &self.estimator) {
            (Data::Lattice(f), Estimator::Lattice { lags }) => {
                return lattice_ese_at(f, a, b, threshold, reference, lags)
            }
            (Data::Lattice(f), Estimator::LatticeByDistance { max_dist }) => {
                return lattice_ese_by_distance_at(f, a, b, threshold, reference, *max_dist)
            }
            (Data::Points(_), Estimator::Lattice { .. } | Estimator::LatticeByDistance { .. }) => {
                return Err(Error::invalid("lattice estimator needs gridded data"))
            }
            (Data::Lattice(f), _) => {
                as_points = lattice_as_points(f)?;
                &as_points
            }
            (Data::Points(p), _) => p,
        };
        match &self.estimator {
            Estimator::Kernel { kernel, nu, lags } => {
                kernel_ese_at(points, a, b, threshold, reference, kernel, lags, *nu)
            }
            Estimator::KernelIsotropic {
                kernel,
                nu,
                distances,
            } => kernel_ese_isotropic_at(points, a, b, threshold, reference, kernel, distances, *nu),
            _ => unreachable!("lattice estimators handled above"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagBand {
    pub lag: Option<Lag>,
    pub distance: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    /// Pooled over all (permutation, lag) estimates.
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub n_perm: usize,
    /// Permutations dropped because the denominator vanished.
    pub dropped: usize,
    pub per_lag: Vec<LagBand>,
}

/// Fewest permutations accepted for a two-sided band at `level`: enough
/// that each tail holds 2.5 expected draws (100 at 95%).
pub fn min_permutations(level: f64) -> usize {
    (5.0 / (1.0 - level)).ceil() as usize
}

fn shuffled(values: &[f64], seed: u64, k: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.shuffle(&mut derived_rng(seed, "permutation", k as u64));
    v
}

/// Random-permutation bands: the values are shuffled over the fixed
/// locations `n_perm` times, the estimator is rerun at the original
/// threshold (a permutation leaves every order statistic unchanged), and the
/// `(1-level)/2` and `(1+level)/2` quantiles of all estimates form the band.
pub fn permutation_bands(
    data: &Data,
    config: &EstimatorConfig,
    n_perm: usize,
    level: f64,
    seed: u64,
) -> Result<BandResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let need = min_permutations(level);
    if n_perm < need {
        return Err(Error::TooFewPermutations {
            got: n_perm,
            need,
            level,
        });
    }
    let threshold = resolve_threshold(data.values(), config.rule)?;
    let runs: Vec<Result<EseResult>> = (0..n_perm)
        .into_par_iter()
        .map(|k| {
            let permuted = data.with_values(shuffled(data.values(), seed, k))?;
            config.estimate_at(&permuted, threshold)
        })
        .collect();
    let mut kept = Vec::with_capacity(n_perm);
    let mut dropped = 0;
    for r in runs {
        match r {
            Ok(res) => kept.push(res),
            Err(Error::DegenerateDenominator) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateDenominator);
    }
    let n_rows = kept[0].rows.len();
    let alpha = 1.0 - level;
    let mut pooled: Vec<f64> = kept.iter().flat_map(|r| r.rows.iter().map(|x| x.rho_hat)).collect();
    pooled.sort_by(f64::total_cmp);
    let per_lag = (0..n_rows)
        .map(|k| {
            let mut col: Vec<f64> = kept.iter().map(|r| r.rows[k].rho_hat).collect();
            col.sort_by(f64::total_cmp);
            LagBand {
                lag: kept[0].rows[k].lag.clone(),
                distance: kept[0].rows[k].distance,
                lo: quantile_sorted(&col, alpha / 2.0),
                hi: quantile_sorted(&col, 1.0 - alpha / 2.0),
            }
        })
        .collect();
    let (lo, hi) = if pooled.is_empty() {
        (0.0, 0.0)
    } else {
        (quantile_sorted(&pooled, alpha / 2.0), quantile_sorted(&pooled, 1.0 - alpha / 2.0))
    };
    Ok(BandResult {
        lo,
        hi,
        level,
        n_perm,
        dropped,
        per_lag,
    })
}

/// Data-generating model for Monte Carlo studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    FrechetIid {
        dims: Vec<usize>,
    },
    Mma {
        dims: Vec<usize>,
        weights: WeightSpec,
    },
    BrownResnickLattice {
        dims: Vec<usize>,
        vario: VariogramSpec,
        sim: BrSimConfig,
    },
    PointField {
        region: Region,
        count: CountRule,
        source: FieldSource,
    },
    /// Every value equal to `value` (degenerate; for diagnostics).
    Constant {
        dims: Vec<usize>,
        value: f64,
    },
}

impl ModelConfig {
    pub fn simulate(&self, seed: u64) -> Result<Data> {
        Ok(match self {
            ModelConfig::FrechetIid { dims } => Data::Lattice(sim_frechet_iid(dims, seed)?),
            ModelConfig::Mma { dims, weights } => Data::Lattice(sim_mma(dims, weights, seed)?),
            ModelConfig::BrownResnickLattice { dims, vario, sim } => {
                Data::Lattice(sim_brown_resnick_lattice(dims, vario, sim, seed)?.0)
            }
            ModelConfig::PointField {
                region,
                count,
                source,
            } => Data::Points(sim_point_field(region, count, source, seed)?),
            ModelConfig::Constant { dims, value } => {
                let n = dims.iter().product();
                Data::Lattice(LatticeField::new(dims.clone(), vec![*value; n])?)
            }
        })
    }

    /// The same model on an `n^d` grid, or on the square `[0, n]^2`.
    pub fn with_size(&self, n: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelConfig::FrechetIid { dims }
            | ModelConfig::Mma { dims, .. }
            | ModelConfig::BrownResnickLattice { dims, .. }
            | ModelConfig::Constant { dims, .. } => dims.iter_mut().for_each(|d| *d = n),
            ModelConfig::PointField { region, .. } => {
                *region = Region {
                    x0: 0.0,
                    x1: n as f64,
                    y0: 0.0,
                    y1: n as f64,
                };
            }
        }
        out
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelConfig::FrechetIid { dims }
            | ModelConfig::Mma { dims, .. }
            | ModelConfig::BrownResnickLattice { dims, .. }
            | ModelConfig::Constant { dims, .. } => dims.len(),
            ModelConfig::PointField { .. } => 2,
        }
    }

    /// `(limit, pre-asymptotic)` extremogram at one estimate row, when the
    /// model has a closed form for the configured sets and threshold rule.
    fn oracle_at(&self, config: &EstimatorConfig, row: &EseRow) -> (Option<f64>, Option<f64>) {
        let m = match config.rule {
            ThresholdRule::Quantile(q) => Some(1.0 / (1.0 - q)),
            ThresholdRule::Absolute(_) => None,
        };
        let rays = config.set_a.upper().is_infinite() && config.set_b.upper().is_infinite();
        let unit = config.set_a == ExtremeSet::unit_ray() && config.set_b == ExtremeSet::unit_ray();
        let lag = row.lag.clone().unwrap_or_else(|| Lag::new(vec![row.distance, 0.0]));
        match self {
            ModelConfig::Mma { dims, weights } if unit => {
                // Pooled rows average the per-lag values with weights n(h).
                let lags: Vec<(Lag, f64)> = match &row.lag {
                    Some(l) => vec![(l.clone(), 1.0)],
                    None => crate::field::lag_grid_ints(row.distance + 1e-9, dims.len())
                        .into_iter()
                        .filter(|h| {
                            let sq: i64 = h.iter().map(|v| v * v).sum();
                            ((sq as f64).sqrt() - row.distance).abs() < 1e-9
                                && h.iter().zip(dims.iter()).all(|(v, &n)| v.unsigned_abs() < n as u64)
                        })
                        .map(|h| {
                            let w = pair_count(dims, &h) as f64;
                            (Lag::from_ints(&h), w)
                        })
                        .collect(),
                };
                if lags.is_empty() {
                    return (None, None);
                }
                let total: f64 = lags.iter().map(|(_, w)| w).sum();
                let mut limit = 0.0;
                let mut pa = 0.0;
                for (h, w) in &lags {
                    let Ok(l) = oracles::mma_extremogram(weights, h, &config.set_a, &config.set_b) else {
                        return (None, None);
                    };
                    limit += w * l;
                    if let Some(m) = m {
                        match oracles::mma_pa_extremogram(weights, h, m) {
                            Ok(v) => pa += w * v.rho_pa,
                            Err(_) => return (Some(limit / total), None),
                        }
                    }
                }
                (Some(limit / total), m.map(|_| pa / total))
            }
            ModelConfig::BrownResnickLattice { vario, .. } if rays => {
                br_oracle(vario, &lag, config, m)
            }
            ModelConfig::PointField {
                source: FieldSource::BrownResnick { vario, config: sim },
                ..
            } if rays => {
                let v = match sim.method {
                    BrMethod::GaussianMax { base_corr, .. } => base_corr.limit_variogram(),
                    _ => *vario,
                };
                br_oracle(&v, &lag, config, m)
            }
            ModelConfig::FrechetIid { .. }
            | ModelConfig::PointField {
                source: FieldSource::FrechetIid,
                ..
            } if rays => {
                if row.distance == 0.0 {
                    return (None, None);
                }
                let pa = m.map(|m| -(-1.0 / (m * config.set_b.lower())).exp_m1());
                (Some(0.0), pa)
            }
            _ => (None, None),
        }
    }
}

fn br_oracle(vario: &VariogramSpec, lag: &Lag, config: &EstimatorConfig, m: Option<f64>) -> (Option<f64>, Option<f64>) {
    let (ca, cb) = (config.set_a.lower(), config.set_b.lower());
    let limit = oracles::br_extremogram(lag, vario, ca, cb).ok();
    let pa = m.and_then(|m| oracles::br_pa_extremogram(lag, vario, ca, cb, m).ok().map(|p| p.rho_pa));
    (limit, pa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub lag: Option<Lag>,
    pub distance: f64,
    pub mean: f64,
    /// Sample variance (divisor `n - 1`; 0 for a single replicate).
    pub variance: f64,
    /// 2.5, 25, 50, 75 and 97.5% quantiles.
    pub quantiles: [f64; 5],
    pub oracle_limit: Option<f64>,
    pub oracle_pa: Option<f64>,
}

pub const MC_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    pub n_reps: usize,
    pub n_usable: usize,
    /// Failed replicates by error code.
    pub failures: BTreeMap<String, usize>,
    pub model: ModelConfig,
    pub estimator: EstimatorConfig,
}

/// Runs `n_reps` simulate-then-estimate replicates and summarises each
/// estimate row. Replicates whose simulation or estimation fails are
/// excluded and counted by error code.
pub fn mc_study(model: &ModelConfig, config: &EstimatorConfig, n_reps: usize, seed: u64) -> Result<McSummary> {
    if n_reps < 2 {
        return Err(Error::invalid(format!("need at least 2 replicates, got {n_reps}")));
    }
    let runs: Vec<Result<EseResult>> = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let data = model.simulate(derive_seed(seed, "replicate", r as u64))?;
            config.estimate(&data)
        })
        .collect();
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut ok = Vec::with_capacity(n_reps);
    for r in runs {
        match r {
            Ok(res) => ok.push(res),
            Err(e) => *failures.entry(e.code().to_string()).or_default() += 1,
        }
    }
    let n_rows = ok.first().map_or(0, |r| r.rows.len());
    if ok.iter().any(|r| r.rows.len() != n_rows) {
        return Err(Error::invalid("replicates produced different numbers of estimate rows"));
    }
    let rows = (0..n_rows)
        .map(|k| {
            let template = &ok[0].rows[k];
            let mut col: Vec<f64> = ok.iter().map(|r| r.rows[k].rho_hat).collect();
            let (mean, variance) = mean_var(&col);
            col.sort_by(f64::total_cmp);
            let (oracle_limit, oracle_pa) = model.oracle_at(config, template);
            McRow {
                lag: template.lag.clone(),
                distance: template.distance,
                mean,
                variance,
                quantiles: MC_QUANTILES.map(|q| quantile_sorted(&col, q)),
                oracle_limit,
                oracle_pa,
            }
        })
        .collect();
    Ok(McSummary {
        rows,
        n_reps,
        n_usable: ok.len(),
        failures,
        model: model.clone(),
        estimator: config.clone(),
    })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// `n^d` for grids, `n^2` for point fields.
    pub size: f64,
    pub variance: f64,
    pub mean: f64,
    pub n_usable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub reference_distance: f64,
    pub table: Vec<RateRow>,
    /// Least-squares slope of `log variance` against `log size`; `None`
    /// with fewer than two sizes.
    pub slope: Option<f64>,
}

/// Variance of `rho_hat` at the row nearest `reference_distance`, for each
/// grid side `n` in `sizes`, and its log-log slope against `n^d`.
pub fn clt_rate_check(
    model: &ModelConfig,
    config: &EstimatorConfig,
    sizes: &[usize],
    n_reps: usize,
    reference_distance: f64,
    seed: u64,
) -> Result<RateCheck> {
    if sizes.is_empty() {
        return Err(Error::invalid("no sizes given"));
    }
    if let ThresholdRule::Absolute(_) = config.rule {
        return Err(Error::invalid("rate check needs a quantile rule so m does not depend on n"));
    }
    let d = model.dimension() as i32;
    let mut table = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let summary = mc_study(&model.with_size(n), config, n_reps, derive_seed(seed, "size", i as u64))?;
        let row = summary
            .rows
            .iter()
            .min_by(|a, b| {
                (a.distance - reference_distance)
                    .abs()
                    .total_cmp(&(b.distance - reference_distance).abs())
            })
            .ok_or(Error::EmptyInput)?;
        table.push(RateRow {
            n,
            size: (n as f64).powi(d),
            variance: row.variance,
            mean: row.mean,
            n_usable: summary.n_usable,
        });
    }
    let slope = loglog_slope(&table);
    Ok(RateCheck {
        reference_distance,
        table,
        slope,
    })
}

fn loglog_slope(table: &[RateRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|r| r.variance > 0.0)
        .map(|r| (r.size.ln(), r.variance.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}
