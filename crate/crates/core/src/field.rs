//! Domain types shared by every module: lattice and point fields, extreme
//! sets, lags and threshold rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations on the grid `{0, .., n_1 - 1} x .. x {0, .., n_d - 1}`,
/// stored in row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        validate_dims(&dims)?;
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(Error::invalid(format!(
                "{} values for grid {:?} ({} sites)",
                values.len(),
                dims,
                n
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "field values must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { dims, values })
    }

    /// Constructor for simulator output, where the invariants hold by construction.
    pub(crate) fn from_parts(dims: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.iter().product::<usize>());
        Self { dims, values }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major strides for the grid.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    /// Same grid, different values (length must match).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dims.clone(), values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::invalid(format!(
            "spatial dimension must be 1, 2 or 3, got {}",
            dims.len()
        )));
    }
    if dims.iter().any(|&n| n == 0) {
        return Err(Error::invalid(format!("grid side lengths must be positive: {dims:?}")));
    }
    Ok(())
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, x1, y0, y1 };
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::invalid("region bounds must be finite"));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::invalid(format!("region {r:?} has no area")));
        }
        Ok(r)
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x0: self.x0 + dx,
            x1: self.x1 + dx,
            y0: self.y0 + dy,
            y1: self.y1 + dy,
        }
    }
}

/// Values observed at scattered locations in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    locations: Vec<[f64; 2]>,
    values: Vec<f64>,
    region: Region,
    intensity_hint: Option<f64>,
}

impl PointField {
    pub fn new(
        locations: Vec<[f64; 2]>,
        values: Vec<f64>,
        region: Region,
        intensity_hint: Option<f64>,
    ) -> Result<Self> {
        if locations.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} locations but {} values",
                locations.len(),
                values.len()
            )));
        }
        // Re-validate in case the region was built by struct literal.
        let region = Region::new(region.x0, region.x1, region.y0, region.y1)?;
        if let Some(p) = locations.iter().find(|p| !region.contains(**p)) {
            return Err(Error::invalid(format!("location {p:?} outside region {region:?}")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "field values must be finite and nonnegative, got {bad}"
            )));
        }
        if let Some(nu) = intensity_hint {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(Error::invalid(format!("intensity must be positive, got {nu}")));
            }
        }
        Ok(Self {
            locations,
            values,
            region,
            intensity_hint,
        })
    }

    pub fn locations(&self) -> &[[f64; 2]] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn intensity_hint(&self) -> Option<f64> {
        self.intensity_hint
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.locations.clone(), values, self.region, self.intensity_hint)
    }
}

/// The interval `(lower, upper)` with `0 < lower < upper <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub struct ExtremeSet {
    lower: f64,
    upper: f64,
}

/// Serialized form: JSON has no infinity, so an unbounded set stores `null`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRepr {
    lower: f64,
    upper: Option<f64>,
}

impl From<ExtremeSet> for SetRepr {
    fn from(s: ExtremeSet) -> Self {
        Self {
            lower: s.lower,
            upper: s.upper.is_finite().then_some(s.upper),
        }
    }
}

impl TryFrom<SetRepr> for ExtremeSet {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<Self> {
        ExtremeSet::new(r.lower, r.upper.unwrap_or(f64::INFINITY))
    }
}

impl ExtremeSet {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && lower > 0.0) {
            return Err(Error::invalid(format!(
                "set lower bound must be positive and finite, got {lower}"
            )));
        }
        if upper.is_nan() || upper <= lower {
            return Err(Error::invalid(format!(
                "set upper bound must exceed lower bound {lower}, got {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The ray `(c, inf)`.
    pub fn ray(c: f64) -> Result<Self> {
        Self::new(c, f64::INFINITY)
    }

    /// `(1, inf)`, the tail-dependence set.
    pub fn unit_ray() -> Self {
        Self {
            lower: 1.0,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_ray(&self) -> bool {
        self.upper.is_infinite()
    }

    /// Strict membership of `x / a_m` in the set.
    #[inline]
    pub fn contains_scaled(&self, x: f64, a_m: f64) -> bool {
        x > self.lower * a_m && (self.upper.is_infinite() || x < self.upper * a_m)
    }
}

/// Spatial lag; integer-valued for lattice use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lag {
    offset: Vec<f64>,
}

impl Lag {
    pub fn new(offset: Vec<f64>) -> Self {
        Self { offset }
    }

    pub fn from_ints(offset: &[i64]) -> Self {
        Self {
            offset: offset.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn norm(&self) -> f64 {
        self.offset.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The offset as integers, if every component is integral.
    pub fn as_ints(&self) -> Option<Vec<i64>> {
        self.offset
            .iter()
            .map(|&v| {
                if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
                    Some(v as i64)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn neg(&self) -> Self {
        Self {
            offset: self.offset.iter().map(|v| -v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `a_m` is the empirical `q`-quantile, `m = 1 / (1 - q)`.
    Quantile(f64),
    /// `a_m` is fixed, `m` is the inverse empirical exceedance rate.
    Absolute(f64),
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Quantile(q) if q > 0.0 && q < 1.0 => Ok(()),
            ThresholdRule::Quantile(q) => Err(Error::invalid(format!(
                "quantile level must lie in (0, 1), got {q}"
            ))),
            ThresholdRule::Absolute(a) if a > 0.0 && a.is_finite() => Ok(()),
            ThresholdRule::Absolute(a) => Err(Error::invalid(format!(
                "absolute threshold must be positive, got {a}"
            ))),
        }
    }
}

/// A resolved threshold `a_m` together with the effective `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub a_m: f64,
    pub m: f64,
}

/// Type-7 (linear interpolation) quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Type-7 quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, q))
}

pub fn resolve_threshold(values: &[f64], rule: ThresholdRule) -> Result<Threshold> {
    rule.validate()?;
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    match rule {
        ThresholdRule::Quantile(q) => {
            let a_m = quantile(values, q).expect("nonempty");
            Ok(Threshold {
                a_m,
                m: 1.0 / (1.0 - q),
            })
        }
        ThresholdRule::Absolute(a) => {
            let hits = values.iter().filter(|&&v| v > a).count();
            if hits == 0 {
                return Err(Error::DegenerateThreshold { threshold: a });
            }
            Ok(Threshold {
                a_m: a,
                m: values.len() as f64 / hits as f64,
            })
        }
    }
}

/// Every nonzero integer lag with norm at most `max_dist`, ordered by norm and
/// then lexicographically. Both `h` and `-h` are present.
pub fn lag_grid(max_dist: f64, d: usize) -> Vec<Lag> {
    lag_grid_ints(max_dist, d)
        .iter()
        .map(|v| Lag::from_ints(v))
        .collect()
}

pub(crate) fn lag_grid_ints(max_dist: f64, d: usize) -> Vec<Vec<i64>> {
    if !(max_dist > 0.0) || !(1..=3).contains(&d) {
        return Vec::new();
    }
    let r = max_dist.floor() as i64;
    let max_sq = max_dist * max_dist;
    let mut out: Vec<(i64, Vec<i64>)> = Vec::new();
    let mut cur = vec![-r; d];
    loop {
        let sq: i64 = cur.iter().map(|v| v * v).sum();
        if sq > 0 && (sq as f64) <= max_sq + 1e-9 {
            out.push((sq, cur.clone()));
        }
        // odometer increment
        let mut k = d;
        loop {
            if k == 0 {
                out.sort();
                return out.into_iter().map(|(_, v)| v).collect();
            }
            k -= 1;
            if cur[k] < r {
                cur[k] += 1;
                break;
            }
            cur[k] = -r;
        }
    }
}
