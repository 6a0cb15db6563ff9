//! Plot-ready result tables and the provenance record written beside them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{fmt_num, fmt_opt};
use crate::error::{Error, Result};
use crate::field::Lag;
use crate::inference::{BandResult, EstimatorConfig, McSummary, ModelConfig, RateCheck};
use crate::lattice::EseResult;

pub const ESE_COLUMNS: &str = "lag_x,lag_y,distance,rho_hat,pair_count,exceed_count,band_lo,band_hi";

/// Parameters of one CLI run, stored in the JSON sidecar. Unknown keys are
/// rejected when reading one back.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<[usize; 2]>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

/// First two lag components; the third of a 3-d lag is only reflected in
/// `distance`.
fn lag_cells(lag: Option<&Lag>) -> (String, String) {
    match lag.map(Lag::offset) {
        Some([x]) => (fmt_num(*x), String::new()),
        Some([x, y, ..]) => (fmt_num(*x), fmt_num(*y)),
        _ => (String::new(), String::new()),
    }
}

/// Band columns carry the pooled band when `bands` is given, else stay empty.
pub fn render_ese_csv(result: &EseResult, bands: Option<&BandResult>) -> String {
    let mut out = String::from(ESE_COLUMNS);
    out.push('\n');
    let (lo, hi) = match bands {
        Some(b) => (fmt_num(b.lo), fmt_num(b.hi)),
        None => (String::new(), String::new()),
    };
    for row in &result.rows {
        let (lx, ly) = lag_cells(row.lag.as_ref());
        let _ = writeln!(
            out,
            "{lx},{ly},{},{},{},{},{lo},{hi}",
            fmt_num(row.distance),
            fmt_num(row.rho_hat),
            row.pair_count,
            row.exceed_count
        );
    }
    out
}

/// Per-lag bands, one row each.
pub fn render_bands_csv(bands: &BandResult) -> String {
    let mut out = String::from("lag_x,lag_y,distance,band_lo,band_hi\n");
    for b in &bands.per_lag {
        let (lx, ly) = lag_cells(b.lag.as_ref());
        let _ = writeln!(out, "{lx},{ly},{},{},{}", fmt_num(b.distance), fmt_num(b.lo), fmt_num(b.hi));
    }
    out
}

pub fn render_mc_csv(summary: &McSummary) -> String {
    let mut out = String::from(
        "lag_x,lag_y,distance,mean,variance,q025,q250,q500,q750,q975,oracle_limit,oracle_pa\n",
    );
    for row in &summary.rows {
        let (lx, ly) = lag_cells(row.lag.as_ref());
        let q: Vec<String> = row.quantiles.iter().map(|&v| fmt_num(v)).collect();
        let _ = writeln!(
            out,
            "{lx},{ly},{},{},{},{},{},{}",
            fmt_num(row.distance),
            fmt_num(row.mean),
            fmt_num(row.variance),
            q.join(","),
            fmt_opt(row.oracle_limit),
            fmt_opt(row.oracle_pa)
        );
    }
    out
}

pub fn render_rate_csv(check: &RateCheck) -> String {
    let mut out = String::from("n,size,variance,mean,n_usable\n");
    for r in &check.table {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            fmt_num(r.size),
            fmt_num(r.variance),
            fmt_num(r.mean),
            r.n_usable
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub lag: Option<Lag>,
    pub distance: f64,
    pub rho: f64,
    pub rho_pa: Option<f64>,
}

pub fn render_oracle_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("lag_x,lag_y,distance,rho,rho_pa\n");
    for r in rows {
        let (lx, ly) = lag_cells(r.lag.as_ref());
        let _ = writeln!(out, "{lx},{ly},{},{},{}", fmt_num(r.distance), fmt_num(r.rho), fmt_opt(r.rho_pa));
    }
    out
}
