//! Empirical spatial extremogram on gridded data.
//!
//! For an integer lag `h` the estimate is
//!
//! ```text
//!            #{(s, t) : s - t = h, X_s / a_m in A, X_t / a_m in B} / n(h)
//! rho(h) =  --------------------------------------------------------------
//!                        #{s : X_s / a_m in A} / #sites
//! ```
//!
//! where `n(h) = prod_i (n_i - |h_i|)` counts the ordered pairs at lag `h`
//! that fit inside the grid (no wraparound). The denominator uses every site.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    lag_grid_ints, resolve_threshold, strides, ExtremeSet, Lag, LatticeField, Threshold,
    ThresholdRule,
};

/// One estimate: a vector lag, or a distance class when lags are pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EseRow {
    /// `None` for distance-pooled or rotation-averaged rows.
    pub lag: Option<Lag>,
    pub distance: f64,
    pub rho_hat: f64,
    /// Lattice: `n(h)`. Kernel: ordered pairs inside the kernel support.
    pub pair_count: u64,
    /// Pairs contributing to the numerator.
    pub exceed_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EseResult {
    pub rows: Vec<EseRow>,
    pub threshold: Threshold,
    pub set_a: ExtremeSet,
    pub set_b: ExtremeSet,
    /// `#{X_s / a_m in A} / #sites`.
    pub denom_rate: f64,
    pub n_sites: usize,
    /// `1 - q` for quantile rules: the level an independent field would show.
    pub reference_level: Option<f64>,
    /// Kernel estimator only: the denominator `p_hat(A)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EseResult {
    pub fn a_m(&self) -> f64 {
        self.threshold.a_m
    }

    pub fn m(&self) -> f64 {
        self.threshold.m
    }

    pub fn rho_hat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho_hat).collect()
    }
}

pub(crate) fn reference_level(rule: ThresholdRule) -> Option<f64> {
    match rule {
        ThresholdRule::Quantile(q) => Some(1.0 - q),
        ThresholdRule::Absolute(_) => None,
    }
}

/// Exceedance bookkeeping for one field and threshold.
struct Exceedances<'a> {
    dims: &'a [usize],
    strides: Vec<usize>,
    /// Grid coordinates of every site with `X_s / a_m` in A.
    a_sites: Vec<Vec<usize>>,
    in_b: Vec<bool>,
    n_sites: usize,
}

impl<'a> Exceedances<'a> {
    fn new(field: &'a LatticeField, a: &ExtremeSet, b: &ExtremeSet, a_m: f64) -> Self {
        let dims = field.dims();
        let st = strides(dims);
        let mut a_sites = Vec::new();
        let mut in_b = Vec::with_capacity(field.len());
        for (flat, &x) in field.values().iter().enumerate() {
            if a.contains_scaled(x, a_m) {
                let mut rem = flat;
                a_sites.push(
                    st.iter()
                        .map(|&s| {
                            let i = rem / s;
                            rem %= s;
                            i
                        })
                        .collect(),
                );
            }
            in_b.push(b.contains_scaled(x, a_m));
        }
        Self {
            dims,
            strides: st,
            a_sites,
            in_b,
            n_sites: field.len(),
        }
    }

    /// Ordered pairs with `s - t = h`, `s` in A, `t` in B.
    fn count(&self, h: &[i64]) -> u64 {
        let mut hits = 0;
        'sites: for s in &self.a_sites {
            let mut flat = 0usize;
            for ((&si, &hi), (&n, &st)) in s.iter().zip(h).zip(self.dims.iter().zip(&self.strides)) {
                let t = si as i64 - hi;
                if t < 0 || t >= n as i64 {
                    continue 'sites;
                }
                flat += t as usize * st;
            }
            if self.in_b[flat] {
                hits += 1;
            }
        }
        hits
    }
}

/// `n(h)`: ordered pairs at lag `h` inside the grid.
pub fn pair_count(dims: &[usize], h: &[i64]) -> u64 {
    dims.iter()
        .zip(h)
        .map(|(&n, &hi)| (n as i64 - hi.abs()).max(0) as u64)
        .product()
}

fn check_lag(dims: &[usize], lag: &Lag) -> Result<Vec<i64>> {
    let out_of_range = || Error::LagOutOfRange {
        lag: lag.offset().to_vec(),
        dims: dims.to_vec(),
    };
    let h = lag.as_ints().ok_or_else(out_of_range)?;
    if h.len() != dims.len() || h.iter().zip(dims).any(|(&hi, &n)| hi.unsigned_abs() >= n as u64) {
        return Err(out_of_range());
    }
    Ok(h)
}

pub fn lattice_ese(
    field: &LatticeField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    rule: ThresholdRule,
    lags: &[Lag],
) -> Result<EseResult> {
    let threshold = resolve_threshold(field.values(), rule)?;
    lattice_ese_at(field, a, b, threshold, reference_level(rule), lags)
}

/// [`lattice_ese`] with the threshold already resolved.
pub fn lattice_ese_at(
    field: &LatticeField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    threshold: Threshold,
    reference_level: Option<f64>,
    lags: &[Lag],
) -> Result<EseResult> {
    let ints: Vec<Vec<i64>> = lags
        .iter()
        .map(|l| check_lag(field.dims(), l))
        .collect::<Result<_>>()?;
    let ex = Exceedances::new(field, a, b, threshold.a_m);
    if ex.a_sites.is_empty() {
        return Err(Error::DegenerateDenominator);
    }
    let denom_rate = ex.a_sites.len() as f64 / ex.n_sites as f64;
    let rows = lags
        .iter()
        .zip(&ints)
        .map(|(lag, h)| {
            let hits = ex.count(h);
            let n_h = pair_count(field.dims(), h);
            EseRow {
                lag: Some(lag.clone()),
                distance: lag.norm(),
                rho_hat: (hits as f64 / n_h as f64) / denom_rate,
                pair_count: n_h,
                exceed_count: hits,
            }
        })
        .collect();
    Ok(EseResult {
        rows,
        threshold,
        set_a: *a,
        set_b: *b,
        denom_rate,
        n_sites: ex.n_sites,
        reference_level,
        p_hat: None,
        warnings: Vec::new(),
    })
}

/// Pools every integer lag of equal norm (up to `max_dist`) into one estimate:
/// summed exceedance pairs over summed `n(h)`. Lags that do not fit in the
/// grid are skipped.
pub fn lattice_ese_by_distance(
    field: &LatticeField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    rule: ThresholdRule,
    max_dist: f64,
) -> Result<EseResult> {
    if !(max_dist > 0.0) {
        return Err(Error::invalid(format!("max distance must be positive, got {max_dist}")));
    }
    let threshold = resolve_threshold(field.values(), rule)?;
    lattice_ese_by_distance_at(field, a, b, threshold, reference_level(rule), max_dist)
}

pub fn lattice_ese_by_distance_at(
    field: &LatticeField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    threshold: Threshold,
    reference_level: Option<f64>,
    max_dist: f64,
) -> Result<EseResult> {
    let dims = field.dims();
    let ex = Exceedances::new(field, a, b, threshold.a_m);
    if ex.a_sites.is_empty() {
        return Err(Error::DegenerateDenominator);
    }
    let denom_rate = ex.a_sites.len() as f64 / ex.n_sites as f64;
    // squared norm -> (hits, pairs)
    let mut classes: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for h in lag_grid_ints(max_dist, dims.len()) {
        if h.iter().zip(dims).any(|(&hi, &n)| hi.unsigned_abs() >= n as u64) {
            continue;
        }
        let sq: i64 = h.iter().map(|v| v * v).sum();
        let e = classes.entry(sq).or_default();
        e.0 += ex.count(&h);
        e.1 += pair_count(dims, &h);
    }
    let rows = classes
        .into_iter()
        .map(|(sq, (hits, pairs))| EseRow {
            lag: None,
            distance: (sq as f64).sqrt(),
            rho_hat: (hits as f64 / pairs as f64) / denom_rate,
            pair_count: pairs,
            exceed_count: hits,
        })
        .collect();
    Ok(EseResult {
        rows,
        threshold,
        set_a: *a,
        set_b: *b,
        denom_rate,
        n_sites: ex.n_sites,
        reference_level,
        p_hat: None,
        warnings: Vec::new(),
    })
}
