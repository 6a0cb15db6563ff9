use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

pub const DEFAULT_JITTER: f64 = 1e-10;

/// Pivots stop once the largest remaining diagonal drops below this fraction
/// of the largest initial diagonal.
const PIVOT_REL_TOL: f64 = 1e-12;
/// Residual entries beyond this fraction of the scale mean "not PSD".
const PSD_REL_TOL: f64 = 1e-8;

/// Power variogram `delta(h) = theta * ||h||^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramSpec {
    pub theta: f64,
    pub alpha: f64,
}

impl Default for VariogramSpec {
    fn default() -> Self {
        Self {
            theta: 0.5,
            alpha: 2.0,
        }
    }
}

impl VariogramSpec {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        let v = Self { theta, alpha };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::invalid(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        Ok(())
    }

    /// `delta` as a function of the lag norm.
    pub fn at_distance(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.theta * r.powf(self.alpha)
        }
    }

    pub fn at(&self, h: &[f64]) -> f64 {
        self.at_distance(h.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// `A ~= F F^T` with `F` of size `n x rank`, produced by diagonally pivoted
/// Cholesky so rank-deficient (semi-definite) matrices factor cleanly.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    n: usize,
    rank: usize,
    /// Row-major `n x rank`.
    rows: Vec<f64>,
}

impl LowRankFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.rank..(i + 1) * self.rank]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.rank, &self.rows)
    }
}

/// Pivoted Cholesky of a symmetric `n x n` row-major matrix. Pivoting stops
/// once every remaining diagonal is at most `abs_tol` (or negligible relative
/// to the largest diagonal), so directions carrying only jitter are dropped.
///
/// Fails when the trailing Schur complement left after pivoting is not
/// negligible, i.e. the input is not positive semi-definite within tolerance.
pub fn pivoted_cholesky(a: &[f64], n: usize, abs_tol: f64) -> Result<LowRankFactor> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(LowRankFactor {
            n,
            rank: 0,
            rows: Vec::new(),
        });
    }
    let mut diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    if let Some(bad) = diag.iter().find(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailure(format!("non-finite diagonal {bad}")));
    }
    let scale = diag.iter().copied().fold(0.0, f64::max);
    if scale <= 0.0 && diag.iter().any(|&v| v < 0.0) {
        return Err(Error::FactorizationFailure("negative diagonal".into()));
    }
    let stop = (PIVOT_REL_TOL * scale).max(abs_tol);

    // Working storage with row stride n; compacted to the final rank at the end.
    let mut l = vec![0.0f64; n * n];
    let mut pivoted = vec![false; n];
    let mut rank = 0;
    while rank < n {
        let (p, dp) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivoted[*i])
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &v)| {
                if v > acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        if p == usize::MAX || dp <= stop || scale <= 0.0 {
            break;
        }
        let k = rank;
        let piv = dp.sqrt();
        pivoted[p] = true;
        l[p * n + k] = piv;
        let (lp_head, _) = l.split_at(p * n + k);
        let lp: Vec<f64> = lp_head[p * n..p * n + k].to_vec();
        for i in 0..n {
            if pivoted[i] {
                continue;
            }
            let li = &l[i * n..i * n + k];
            let dot: f64 = li.iter().zip(&lp).map(|(x, y)| x * y).sum();
            let v = (a[i * n + p] - dot) / piv;
            l[i * n + k] = v;
            diag[i] -= v * v;
        }
        rank += 1;
    }

    let tol = PSD_REL_TOL * scale.max(f64::MIN_POSITIVE) + abs_tol;
    let rest: Vec<usize> = (0..n).filter(|&i| !pivoted[i]).collect();
    if let Some(&i) = rest.iter().find(|&&i| diag[i] < -tol) {
        return Err(Error::FactorizationFailure(format!(
            "matrix is not positive semi-definite (residual diagonal {} at {i})",
            diag[i]
        )));
    }
    for (ai, &i) in rest.iter().enumerate() {
        for &j in &rest[ai + 1..] {
            let dot: f64 = l[i * n..i * n + rank]
                .iter()
                .zip(&l[j * n..j * n + rank])
                .map(|(x, y)| x * y)
                .sum();
            let resid = a[i * n + j] - dot;
            let bound = (diag[i].max(0.0) * diag[j].max(0.0)).sqrt() + tol;
            if resid.abs() > bound {
                return Err(Error::FactorizationFailure(format!(
                    "matrix is not positive semi-definite (residual {resid} at ({i}, {j}))"
                )));
            }
        }
    }

    let mut rows = vec![0.0; n * rank];
    for i in 0..n {
        rows[i * rank..(i + 1) * rank].copy_from_slice(&l[i * n..i * n + rank]);
    }
    Ok(LowRankFactor { n, rank, rows })
}

/// Reusable sampler for the zero-mean Gaussian field `W` with `W_0 = 0` and
/// `cov(W_s, W_t) = delta(s) + delta(t) - delta(s - t)`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    /// Index into `sites` of each factored (non-origin) site.
    active: Vec<usize>,
    n_sites: usize,
    factor: DMatrix<f64>,
}

impl IncrementSampler {
    pub fn new<P: AsRef<[f64]>>(sites: &[P], vario: &VariogramSpec, jitter: f64) -> Result<Self> {
        vario.validate()?;
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::invalid(format!("jitter must be >= 0, got {jitter}")));
        }
        let active: Vec<usize> = (0..sites.len())
            .filter(|&i| sites[i].as_ref().iter().any(|&c| c != 0.0))
            .collect();
        let n = active.len();
        let delta_at: Vec<f64> = active.iter().map(|&i| vario.at(sites[i].as_ref())).collect();
        let mut cov = vec![0.0; n * n];
        for a in 0..n {
            let sa = sites[active[a]].as_ref();
            for b in a..n {
                let sb = sites[active[b]].as_ref();
                let r2: f64 = sa.iter().zip(sb).map(|(x, y)| (x - y) * (x - y)).sum();
                let c = delta_at[a] + delta_at[b] - vario.at_distance(r2.sqrt());
                cov[a * n + b] = c;
                cov[b * n + a] = c;
            }
            cov[a * n + a] += jitter;
        }
        let factor = pivoted_cholesky(&cov, n, 10.0 * jitter)?.to_matrix();
        Ok(Self {
            active,
            n_sites: sites.len(),
            factor,
        })
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// One draw of `W` at every site.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let w = self.sample_batch(1, rng);
        (0..self.n_sites).map(|i| w[(i, 0)]).collect()
    }

    /// `cols` independent draws as the columns of an `n_sites x cols` matrix.
    pub fn sample_batch(&self, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
        let z = DMatrix::from_fn(self.rank(), cols, |_, _| StandardNormal.sample(rng));
        let w_active = &self.factor * z;
        let mut out = DMatrix::zeros(self.n_sites, cols);
        for (a, &i) in self.active.iter().enumerate() {
            out.row_mut(i).copy_from(&w_active.row(a));
        }
        out
    }
}

pub fn sim_gaussian_increments<P: AsRef<[f64]>>(
    sites: &[P],
    vario: &VariogramSpec,
    jitter: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(sites, vario, jitter)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}
