//! Grammars for the short strings accepted on the command line.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::field::{ExtremeSet, Lag, Region, ThresholdRule};
use crate::kernel::{KernelShape, NuMode};
use crate::simulate::WeightSpec;

fn num(tok: &str, what: &str) -> Result<f64> {
    let t = tok.trim();
    let v = match t {
        "inf" | "+inf" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("{what}: bad number {tok:?}")))?,
    };
    if v.is_nan() {
        return Err(Error::invalid(format!("{what}: NaN not allowed")));
    }
    Ok(v)
}

fn finite(tok: &str, what: &str) -> Result<f64> {
    let v = num(tok, what)?;
    if !v.is_finite() {
        return Err(Error::invalid(format!("{what}: {tok:?} must be finite")));
    }
    Ok(v)
}

fn count(tok: &str, what: &str) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{what}: bad count {tok:?}")))
}

/// `"lower,upper"` with `inf` allowed, or a single `"c"` for `(c, inf)`.
pub fn parse_set(s: &str) -> Result<ExtremeSet> {
    match s.split_once(',') {
        Some((lo, hi)) => ExtremeSet::new(finite(lo, "set")?, num(hi, "set")?),
        None => ExtremeSet::ray(finite(s, "set")?),
    }
}

/// `"q=0.97"` or `"abs=2.5"`.
pub fn parse_threshold(s: &str) -> Result<ThresholdRule> {
    let rule = match s.trim().split_once('=') {
        Some(("q", v)) => ThresholdRule::Quantile(finite(v, "threshold")?),
        Some(("abs", v)) => ThresholdRule::Absolute(finite(v, "threshold")?),
        _ => return Err(Error::invalid(format!("threshold must be q=<level> or abs=<value>, got {s:?}"))),
    };
    rule.validate()?;
    Ok(rule)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagsArg {
    /// A single number: every lag up to this norm.
    MaxDist(f64),
    /// A comma list of distances.
    Distances(Vec<f64>),
    /// `;`-separated vectors with `:`-separated components, e.g. `1:0;1:1`.
    Vectors(Vec<Lag>),
}

pub fn parse_lags(s: &str) -> Result<LagsArg> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::invalid("empty lag list"));
    }
    if s.contains(':') {
        let lags = s
            .split(';')
            .map(|v| {
                v.split(':')
                    .map(|c| finite(c, "lag"))
                    .collect::<Result<Vec<_>>>()
                    .map(Lag::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let d = lags[0].dim();
        if d > 3 || lags.iter().any(|l| l.dim() != d) {
            return Err(Error::invalid("lag vectors must share a dimension of at most 3"));
        }
        return Ok(LagsArg::Vectors(lags));
    }
    let vals = s
        .split(',')
        .map(|t| finite(t, "lag"))
        .collect::<Result<Vec<_>>>()?;
    if vals.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("lag distances must be nonnegative"));
    }
    if vals.len() == 1 {
        Ok(LagsArg::MaxDist(vals[0]))
    } else {
        Ok(LagsArg::Distances(vals))
    }
}

/// Comma list of `a..b` (half-open), `all`, or `equal:K` (K consecutive
/// windows of equal length; any remainder goes to the last one).
pub fn parse_windows(s: &str, n_times: usize) -> Result<Vec<Range<usize>>> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok == "all" {
            out.push(0..n_times);
        } else if let Some(k) = tok.strip_prefix("equal:") {
            let k = count(k, "windows")?;
            if k == 0 || k > n_times {
                return Err(Error::invalid(format!("cannot split {n_times} times into {k} windows")));
            }
            let len = n_times / k;
            for i in 0..k {
                let end = if i + 1 == k { n_times } else { (i + 1) * len };
                out.push(i * len..end);
            }
        } else if let Some((a, b)) = tok.split_once("..") {
            out.push(count(a, "windows")?..count(b, "windows")?);
        } else {
            return Err(Error::invalid(format!("bad window {tok:?}")));
        }
    }
    for w in &out {
        if w.start >= w.end || w.end > n_times {
            return Err(Error::WindowOutOfRange {
                start: w.start,
                end: w.end,
                n_times,
            });
        }
    }
    Ok(out)
}

/// `"plugin"` or `"known=<intensity>"`.
pub fn parse_nu(s: &str) -> Result<NuMode> {
    match s.trim().split_once('=') {
        None if s.trim() == "plugin" => Ok(NuMode::Plugin),
        Some(("known", v)) => {
            let nu = finite(v, "nu")?;
            if nu <= 0.0 {
                return Err(Error::invalid(format!("intensity must be positive, got {nu}")));
            }
            Ok(NuMode::Known(nu))
        }
        _ => Err(Error::invalid(format!("nu must be plugin or known=<value>, got {s:?}"))),
    }
}

pub fn parse_kernel(s: &str) -> Result<KernelShape> {
    match s.trim() {
        "box" => Ok(KernelShape::Box),
        "epanechnikov" | "epa" => Ok(KernelShape::Epanechnikov),
        other => Err(Error::invalid(format!("unknown kernel {other:?}"))),
    }
}

/// `mma1`, `ball:<radius>`, `geometric:<phi>[:<radius>]`, or explicit
/// `x,y=w;x,y=w;...`.
pub fn parse_weights(s: &str) -> Result<WeightSpec> {
    let s = s.trim();
    let spec = if s == "mma1" {
        WeightSpec::mma1()
    } else if let Some(r) = s.strip_prefix("ball:") {
        WeightSpec::IndicatorBall {
            radius: finite(r, "weights")?,
        }
    } else if let Some(rest) = s.strip_prefix("geometric:") {
        let (phi, radius) = match rest.split_once(':') {
            Some((p, r)) => (finite(p, "weights")?, Some(finite(r, "weights")?)),
            None => (finite(rest, "weights")?, None),
        };
        WeightSpec::Geometric {
            phi,
            truncation_radius: radius,
        }
    } else if s.contains('=') {
        let mut map = BTreeMap::new();
        for entry in s.split(';') {
            let (offset, w) = entry
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bad weight entry {entry:?}")))?;
            let offset = offset
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::invalid(format!("bad offset component {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if map.insert(offset, finite(w, "weights")?).is_some() {
                return Err(Error::invalid(format!("offset repeated in {entry:?}")));
            }
        }
        WeightSpec::Explicit(map)
    } else {
        return Err(Error::invalid(format!("unknown weight spec {s:?}")));
    };
    spec.validate()?;
    Ok(spec)
}

/// `"40x40"`, `"40,40"` or `"40"`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(['x', ','])
        .map(|t| count(t, "dims"))
        .collect::<Result<Vec<_>>>()?;
    if dims.is_empty() || dims.len() > 3 || dims.iter().any(|&n| n == 0) {
        return Err(Error::invalid(format!("dims must be 1 to 3 positive sizes, got {s:?}")));
    }
    Ok(dims)
}

/// `"side"` for `[0, side]^2`, or `"x0,x1,y0,y1"`.
pub fn parse_region(s: &str) -> Result<Region> {
    let v = s
        .split(',')
        .map(|t| finite(t, "region"))
        .collect::<Result<Vec<_>>>()?;
    match v[..] {
        [side] => Region::square(side),
        [x0, x1, y0, y1] => Region::new(x0, x1, y0, y1),
        _ => Err(Error::invalid(format!("region must be side or x0,x1,y0,y1, got {s:?}"))),
    }
}
