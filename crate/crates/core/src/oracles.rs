//! Closed-form extremograms for the reference models, both at the limit and
//! at a finite threshold ("pre-asymptotic", PA).
//!
//! All models have unit-scale Fréchet margins after normalisation; `m` is the
//! reciprocal exceedance probability the threshold is tuned to, and the PA
//! values take `a_m = m` unless a threshold is passed explicitly.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ExtremeSet, Lag};
use crate::normal;
use crate::simulate::{VariogramSpec, WeightSpec};

/// Extremogram at one lag for a finite `m`, alongside its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaValue {
    pub lag: Lag,
    pub m: f64,
    pub rho_pa: f64,
    pub rho_limit: f64,
    /// `m * P(X_0 > a_m c_A, X_h > a_m c_B)`.
    pub tau_pa: f64,
    /// `m * P(X_0 > a_m c_A)`.
    pub p_pa: f64,
}

fn check_m(m: f64) -> Result<()> {
    if m.is_finite() && m > 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("m must exceed 1, got {m}")))
    }
}

fn int_lag(h: &Lag) -> Result<Vec<i64>> {
    h.as_ints()
        .ok_or_else(|| Error::DomainError(format!("lag {:?} is not an integer vector", h.offset())))
}

fn require_unit_sets(a: &ExtremeSet, b: &ExtremeSet) -> Result<()> {
    if *a == ExtremeSet::unit_ray() && *b == ExtremeSet::unit_ray() {
        Ok(())
    } else {
        Err(Error::UnsupportedSets)
    }
}

/// `(sum_s w(s), sum_s min(w(s), w(h+s)))` over the (truncated) support.
fn weight_overlap(weights: &WeightSpec, h: &[i64]) -> Result<(f64, f64)> {
    let support = weights.support(h.len())?;
    let lookup: HashMap<&[i64], f64> = support.iter().map(|(s, w)| (s.as_slice(), *w)).collect();
    let mut total = 0.0;
    let mut overlap = 0.0;
    let mut shifted = vec![0i64; h.len()];
    for (s, w) in &support {
        total += w;
        for ((o, si), hi) in shifted.iter_mut().zip(s).zip(h) {
            *o = si + hi;
        }
        if let Some(&v) = lookup.get(shifted.as_slice()) {
            overlap += w.min(v);
        }
    }
    Ok((total, overlap))
}

/// Limit extremogram of a max-moving average for `A = B = (1, inf)`:
/// `sum_s min(w(s), w(h+s)) / sum_s w(s)`.
pub fn mma_extremogram(weights: &WeightSpec, h: &Lag, a: &ExtremeSet, b: &ExtremeSet) -> Result<f64> {
    require_unit_sets(a, b)?;
    let (total, overlap) = weight_overlap(weights, &int_lag(h)?)?;
    Ok(overlap / total)
}

/// `m (2/m - 1 + (1 - 1/m)^r)` evaluated without cancellation.
fn mma_pa_formula(m: f64, r: f64) -> f64 {
    2.0 + m * (r * (-1.0 / m).ln_1p()).exp_m1()
}

/// Finite-threshold extremogram of a max-moving average at the threshold with
/// `P(X <= a_m) = 1 - 1/m`, i.e. `a_m = -W / ln(1 - 1/m)` with `W = sum_s w(s)`.
/// The joint term depends only on `Q/W` with `Q = sum_s max(w(s), w(h+s))`.
pub fn mma_pa_extremogram(weights: &WeightSpec, h: &Lag, m: f64) -> Result<PaValue> {
    check_m(m)?;
    let (total, overlap) = weight_overlap(weights, &int_lag(h)?)?;
    let ratio = (2.0 * total - overlap) / total;
    let rho_pa = mma_pa_formula(m, ratio);
    let p_pa = 1.0;
    Ok(PaValue {
        lag: h.clone(),
        m,
        rho_pa,
        rho_limit: overlap / total,
        tau_pa: rho_pa * p_pa,
        p_pa,
    })
}

/// The MMA(1) display on `Z^2`: exponent 8/5 for `||h||` in {1, sqrt 2},
/// 9/5 for `||h|| = 2`, and `1/m` beyond.
pub fn mma1_pa_extremogram(h: &Lag, m: f64) -> Result<PaValue> {
    check_m(m)?;
    let hi = int_lag(h)?;
    if hi.len() != 2 {
        return Err(Error::DomainError("MMA(1) is defined on Z^2".into()));
    }
    let sq = hi[0] * hi[0] + hi[1] * hi[1];
    let (rho_pa, rho_limit) = match sq {
        0 => (1.0, 1.0),
        1 | 2 => (mma_pa_formula(m, 8.0 / 5.0), 0.4),
        4 => (mma_pa_formula(m, 9.0 / 5.0), 0.2),
        _ => (1.0 / m, 0.0),
    };
    Ok(PaValue {
        lag: h.clone(),
        m,
        rho_pa,
        rho_limit,
        tau_pa: rho_pa,
        p_pa: 1.0,
    })
}

/// Shell counts on `Z^2` for a lag `h`, keyed by squared norm `r^2 <= R^2`:
/// `p` counts `s` with `||s||^2 = r^2`; `q` counts `s` with
/// `min(||s||^2, ||h + s||^2) = r^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCounts {
    pub squared_norms: Vec<i64>,
    pub p: Vec<u64>,
    pub q: Vec<u64>,
}

pub fn lattice_counts(max_radius: f64, h: &Lag) -> Result<LatticeCounts> {
    if !(max_radius.is_finite() && max_radius >= 0.0) {
        return Err(Error::DomainError(format!("radius must be >= 0, got {max_radius}")));
    }
    let hi = int_lag(h)?;
    if hi.len() != 2 {
        return Err(Error::DomainError("lattice counts are defined on Z^2".into()));
    }
    let r2 = (max_radius * max_radius).floor() as i64;
    let reach = max_radius.floor() as i64;
    let mut p: BTreeMap<i64, u64> = BTreeMap::new();
    let mut q: BTreeMap<i64, u64> = BTreeMap::new();
    // Points within R of the origin or within R of -h.
    for x in (-reach - hi[0].abs())..=(reach + hi[0].abs()) {
        for y in (-reach - hi[1].abs())..=(reach + hi[1].abs()) {
            let a = x * x + y * y;
            let b = (x + hi[0]).pow(2) + (y + hi[1]).pow(2);
            if a <= r2 {
                *p.entry(a).or_default() += 1;
                q.entry(a).or_default();
            }
            let lo = a.min(b);
            if lo <= r2 {
                *q.entry(lo).or_default() += 1;
                p.entry(lo).or_default();
            }
        }
    }
    Ok(LatticeCounts {
        squared_norms: p.keys().copied().collect(),
        p: p.values().copied().collect(),
        q: q.values().copied().collect(),
    })
}

/// Geometric-weight MMA limit extremogram via shell counts:
/// `sum_r phi^r (2 p(r) - q(r)) / sum_r phi^r p(r)`, both truncated at the
/// same radius as the simulator's support.
pub fn geometric_mma_extremogram(phi: f64, truncation_radius: Option<f64>, h: &Lag) -> Result<f64> {
    let spec = WeightSpec::Geometric {
        phi,
        truncation_radius,
    };
    spec.validate()?;
    let radius = WeightSpec::geometric_radius(phi, truncation_radius, 2);
    let counts = lattice_counts(radius, h)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&sq, &p), &q) in counts.squared_norms.iter().zip(&counts.p).zip(&counts.q) {
        let w = phi.powf((sq as f64).sqrt());
        num += w * (2.0 * p as f64 - q as f64);
        den += w * p as f64;
    }
    Ok(num / den)
}

/// Bivariate Hüsler–Reiss distribution function with unit Fréchet margins:
/// `exp(-Phi(sqrt(delta) + ln(y2/y1) / (2 sqrt(delta))) / y1 - (same, y1 <-> y2) / y2)`.
pub fn husler_reiss_cdf(y1: f64, y2: f64, delta: f64) -> Result<f64> {
    if !(y1 > 0.0 && y2 > 0.0) || y1.is_nan() || y2.is_nan() {
        return Err(Error::DomainError(format!("arguments must be positive, got ({y1}, {y2})")));
    }
    if !(delta >= 0.0) || delta.is_infinite() {
        return Err(Error::DomainError(format!("delta must be finite and >= 0, got {delta}")));
    }
    Ok((-hr_exponent(y1, y2, delta)).exp())
}

/// Exponent measure `V(y1, y2)` of the Hüsler–Reiss law.
fn hr_exponent(y1: f64, y2: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 1.0 / y1.min(y2);
    }
    let s = delta.sqrt();
    let l = (y2 / y1).ln() / (2.0 * s);
    normal::cdf(s + l) / y1 + normal::cdf(s - l) / y2
}

fn check_levels(c_a: f64, c_b: f64) -> Result<()> {
    if c_a > 0.0 && c_b > 0.0 && c_a.is_finite() && c_b.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("set levels must be positive, got ({c_a}, {c_b})")))
    }
}

/// Limit extremogram of a Brown–Resnick field for `A = (c_A, inf)`,
/// `B = (c_B, inf)`:
/// `Phi_bar(s + l) + (c_A/c_B) Phi_bar(s - l)` with `s = sqrt(delta(h))`,
/// `l = ln(c_B/c_A) / (2s)`.
pub fn br_extremogram(h: &Lag, vario: &VariogramSpec, c_a: f64, c_b: f64) -> Result<f64> {
    vario.validate()?;
    check_levels(c_a, c_b)?;
    let delta = vario.at(h.offset());
    if delta == 0.0 {
        return Ok((c_a / c_b).min(1.0));
    }
    let s = delta.sqrt();
    let l = (c_b / c_a).ln() / (2.0 * s);
    Ok(normal::sf(s + l) + (c_a / c_b) * normal::sf(s - l))
}

/// Finite-threshold Brown–Resnick extremogram with `a_m = m`.
pub fn br_pa_extremogram(h: &Lag, vario: &VariogramSpec, c_a: f64, c_b: f64, m: f64) -> Result<PaValue> {
    br_pa_extremogram_at(h, vario, c_a, c_b, m, m)
}

/// Finite-threshold Brown–Resnick extremogram at an explicit threshold `a_m`:
/// `tau = m P(X_0 > a_m c_A, X_h > a_m c_B)`, `p = m P(X_0 > a_m c_A)`.
pub fn br_pa_extremogram_at(
    h: &Lag,
    vario: &VariogramSpec,
    c_a: f64,
    c_b: f64,
    a_m: f64,
    m: f64,
) -> Result<PaValue> {
    vario.validate()?;
    check_levels(c_a, c_b)?;
    check_m(m)?;
    if !(a_m > 0.0 && a_m.is_finite()) {
        return Err(Error::DomainError(format!("threshold must be positive, got {a_m}")));
    }
    let delta = vario.at(h.offset());
    let (y1, y2) = (a_m * c_a, a_m * c_b);
    // 1 - F(y1) - F(y2) + F(y1, y2), each term via expm1.
    let joint = -(-1.0 / y1).exp_m1() - (-1.0 / y2).exp_m1() + (-hr_exponent(y1, y2, delta)).exp_m1();
    let marginal = -(-1.0 / y1).exp_m1();
    let tau_pa = m * joint;
    let p_pa = m * marginal;
    Ok(PaValue {
        lag: h.clone(),
        m,
        rho_pa: tau_pa / p_pa,
        rho_limit: br_extremogram(h, vario, c_a, c_b)?,
        tau_pa,
        p_pa,
    })
}
