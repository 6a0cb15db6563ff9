use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lag_grid_ints, strides, validate_dims, LatticeField};
use crate::rng::rng_from_seed;

use super::frechet::draw_frechet;

/// Tail mass targeted by the default geometric truncation radius.
const GEOMETRIC_TAIL_TARGET: f64 = 1e-12;

/// Weight function of a max-moving average `X_t = max_s w(s) Z_{t-s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// `w(s) = 1{||s|| <= radius}`; radius 1 gives the MMA(1) five-point cross on Z^2.
    IndicatorBall { radius: f64 },
    /// `w(s) = phi^||s||`, truncated at `truncation_radius` (default: smallest
    /// integer radius whose tail bound is below 1e-12).
    Geometric {
        phi: f64,
        truncation_radius: Option<f64>,
    },
    /// Finitely many positive weights keyed by integer offset.
    Explicit(BTreeMap<Vec<i64>, f64>),
}

impl WeightSpec {
    pub fn mma1() -> Self {
        WeightSpec::IndicatorBall { radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::IndicatorBall { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
                }
            }
            WeightSpec::Geometric {
                phi,
                truncation_radius,
            } => {
                if !(*phi > 0.0 && *phi < 1.0) {
                    return Err(Error::invalid(format!("phi must lie in (0, 1), got {phi}")));
                }
                if let Some(r) = truncation_radius {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(Error::invalid(format!("truncation radius must be >= 0, got {r}")));
                    }
                }
            }
            WeightSpec::Explicit(map) => {
                if map.is_empty() {
                    return Err(Error::invalid("explicit weight map is empty"));
                }
                let d = map.keys().next().map(Vec::len).unwrap_or(0);
                for (k, w) in map {
                    if k.len() != d {
                        return Err(Error::invalid("explicit weight offsets differ in dimension"));
                    }
                    if !(w.is_finite() && *w > 0.0) {
                        return Err(Error::invalid(format!("weight at {k:?} must be positive, got {w}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Truncation radius actually used for geometric weights in dimension `d`.
    pub fn geometric_radius(phi: f64, truncation_radius: Option<f64>, d: usize) -> f64 {
        truncation_radius.unwrap_or_else(|| {
            let mut r = 0usize;
            while geometric_tail_bound(phi, r as f64, d) >= GEOMETRIC_TAIL_TARGET {
                r += 1;
            }
            r as f64
        })
    }

    /// All `(offset, weight)` pairs with positive weight in `Z^d`.
    pub fn support(&self, d: usize) -> Result<Vec<(Vec<i64>, f64)>> {
        self.validate()?;
        let ball = |radius: f64| {
            let mut pts = vec![vec![0i64; d]];
            pts.extend(lag_grid_ints(radius, d));
            pts
        };
        let out = match self {
            WeightSpec::IndicatorBall { radius } => {
                ball(*radius).into_iter().map(|s| (s, 1.0)).collect()
            }
            WeightSpec::Geometric {
                phi,
                truncation_radius,
            } => {
                let r = Self::geometric_radius(*phi, *truncation_radius, d);
                ball(r)
                    .into_iter()
                    .map(|s| {
                        let n = norm(&s);
                        (s, phi.powf(n))
                    })
                    .collect()
            }
            WeightSpec::Explicit(map) => {
                if map.keys().next().map(Vec::len) != Some(d) {
                    return Err(Error::invalid(format!(
                        "explicit weights are not {d}-dimensional"
                    )));
                }
                map.iter().map(|(k, w)| (k.clone(), *w)).collect()
            }
        };
        Ok(out)
    }

    /// Total weight over the (truncated) support.
    pub fn total_weight(&self, d: usize) -> Result<f64> {
        Ok(self.support(d)?.iter().map(|(_, w)| w).sum())
    }
}

fn norm(s: &[i64]) -> f64 {
    (s.iter().map(|v| v * v).sum::<i64>() as f64).sqrt()
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// Upper bound on `sum_{||l|| > radius} phi^||l||` over `Z^d`.
///
/// Lattice points with `k-1 < ||l|| <= k` own disjoint unit cubes inside the
/// shell of radii `k-1-sqrt(d)/2 .. k+sqrt(d)/2`, so their count is at most
/// the shell volume; each weighs at most `phi^(k-1)`.
pub fn geometric_tail_bound(phi: f64, radius: f64, d: usize) -> f64 {
    let half_diag = (d as f64).sqrt() / 2.0;
    let vol = unit_ball_volume(d);
    let di = d as i32;
    let mut k = radius.floor() as i64 + 1;
    let mut total = 0.0;
    loop {
        let kf = k as f64;
        let outer = (kf + half_diag).powi(di);
        let inner = (kf - 1.0 - half_diag).max(0.0).powi(di);
        let term = vol * (outer - inner) * phi.powf(kf - 1.0);
        total += term;
        if term < 1e-40 || (term < total * 1e-17 && kf > radius + 10.0) {
            return total;
        }
        k += 1;
    }
}

/// Max-moving average over iid unit Fréchet noise. The noise lattice is padded
/// by the support radius on every side, so boundary sites see a full window.
pub fn sim_mma(dims: &[usize], weights: &WeightSpec, seed: u64) -> Result<LatticeField> {
    validate_dims(dims)?;
    let d = dims.len();
    let mut support = weights.support(d)?;
    support.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let pad = support
        .iter()
        .flat_map(|(s, _)| s.iter().map(|v| v.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);

    let noise_dims: Vec<usize> = dims.iter().map(|&n| n + 2 * pad).collect();
    let noise_strides = strides(&noise_dims);
    let n_noise: usize = noise_dims.iter().product();
    let mut rng = rng_from_seed(seed);
    let noise = draw_frechet(n_noise, &mut rng);
    let z_max = noise.iter().copied().fold(0.0, f64::max);

    // Z_{t-s} sits at flat index base(t) - sum_i s_i * stride_i.
    let shifts: Vec<(isize, f64)> = support
        .iter()
        .map(|(s, w)| {
            let off: isize = s
                .iter()
                .zip(&noise_strides)
                .map(|(&si, &st)| si as isize * st as isize)
                .sum();
            (-off, *w)
        })
        .collect();

    let out_strides = strides(dims);
    let n_out: usize = dims.iter().product();
    let mut values = Vec::with_capacity(n_out);
    let mut idx = vec![0usize; d];
    for flat in 0..n_out {
        let mut rem = flat;
        for i in 0..d {
            idx[i] = rem / out_strides[i];
            rem %= out_strides[i];
        }
        let base: usize = idx
            .iter()
            .zip(&noise_strides)
            .map(|(&t, &st)| (t + pad) * st)
            .sum();
        let mut best = 0.0f64;
        for &(shift, w) in &shifts {
            // Weights are sorted in decreasing order, so nothing further can win.
            if best >= w * z_max {
                break;
            }
            let z = noise[(base as isize + shift) as usize];
            let v = w * z;
            if v > best {
                best = v;
            }
        }
        values.push(best);
    }
    Ok(LatticeField::from_parts(dims.to_vec(), values))
}
