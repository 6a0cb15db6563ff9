use nalgebra::DMatrix;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{strides, validate_dims, LatticeField};
use crate::normal;
use crate::rng::rng_from_seed;

use super::gaussian::{pivoted_cholesky, IncrementSampler, VariogramSpec, DEFAULT_JITTER};

/// Gaussian draws are generated this many columns at a time.
const BATCH: usize = 256;
/// Lower clamp on `-log Phi(z)`, i.e. `Phi(z) <= 1 - 1e-16`.
const MIN_NEG_LOG_PHI: f64 = 1e-16;
/// Spectral truncation below this many terms triggers a warning diagnostic.
pub const RECOMMENDED_MIN_TERMS: usize = 100;

/// Correlation `(1 + c ||h||^a)^-1` of the Gaussian fields in the max construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyCorrelation {
    pub c: f64,
    pub a: f64,
}

impl CauchyCorrelation {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid(format!("c must be positive, got {}", self.c)));
        }
        if !(self.a > 0.0 && self.a <= 2.0) {
            return Err(Error::invalid(format!("a must lie in (0, 2], got {}", self.a)));
        }
        Ok(())
    }

    pub fn at_distance(&self, r: f64) -> f64 {
        1.0 / (1.0 + self.c * r.powf(self.a))
    }

    /// Spatial scale `d_N = (1 / log N)^(1/a)`.
    pub fn scale(&self, n: usize) -> f64 {
        (1.0 / (n as f64).ln()).powf(1.0 / self.a)
    }

    /// Variogram of the limiting Brown–Resnick field, `c ||h||^a`.
    pub fn limit_variogram(&self) -> VariogramSpec {
        VariogramSpec {
            theta: self.c,
            alpha: self.a,
        }
    }

    /// Finite-`N` dependence `log N (1 - rho(d_N h))`.
    pub fn finite_n_delta(&self, n: usize, r: f64) -> f64 {
        let ln_n = (n as f64).ln();
        ln_n * (1.0 - self.at_distance(r * self.scale(n)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrMethod {
    /// Spectral representation truncated after `terms` Poisson points.
    Spectral { terms: usize },
    /// Rescaled maximum of `n` iid Gaussian fields.
    GaussianMax { n: usize, base_corr: CauchyCorrelation },
    /// Exact sampling by extremal functions, one normalised spectral
    /// function per site on average. Cost grows with the rank of `W`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrSimConfig {
    pub method: BrMethod,
    pub jitter: f64,
}

impl BrSimConfig {
    pub fn spectral(terms: usize) -> Self {
        Self {
            method: BrMethod::Spectral { terms },
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn gaussian_max(n: usize, c: f64, a: f64) -> Self {
        Self {
            method: BrMethod::GaussianMax {
                n,
                base_corr: CauchyCorrelation { c, a },
            },
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn exact() -> Self {
        Self {
            method: BrMethod::Exact,
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter must be >= 0"));
        }
        match self.method {
            BrMethod::Exact => Ok(()),
            BrMethod::Spectral { terms } if terms >= 1 => Ok(()),
            BrMethod::Spectral { .. } => Err(Error::invalid("spectral method needs at least one term")),
            BrMethod::GaussianMax { n, base_corr } => {
                if n < 2 {
                    return Err(Error::invalid("gaussian max needs at least two fields"));
                }
                base_corr.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrSample {
    pub values: Vec<f64>,
    /// Spectral method only: fraction of sites where the last retained term
    /// exceeds 1% of the final maximum.
    pub truncation_fraction: Option<f64>,
    /// Human-readable warnings (e.g. too few spectral terms).
    pub warnings: Vec<String>,
}

/// Brown–Resnick field at `sites`, with the variogram origin at the
/// coordinate origin. The bivariate law at lag `h` is Hüsler–Reiss with
/// parameter `delta(h)`, i.e. `P(X_0 <= y, X_h <= y) = exp(-2 Phi(sqrt(delta)) / y)`,
/// the limit of the Gaussian-max recipe when `log N (1 - rho(d_N h)) -> delta(h)`.
/// That law needs `var(W_s - W_t) = 4 delta(s - t)`, so the spectral and exact
/// methods draw `W` for the doubled variogram and subtract `2 delta(s)`.
/// The Gaussian-max method takes its dependence from `base_corr` instead.
pub fn sim_brown_resnick<P: AsRef<[f64]>>(
    sites: &[P],
    vario: &VariogramSpec,
    config: &BrSimConfig,
    seed: u64,
) -> Result<BrSample> {
    config.validate()?;
    vario.validate()?;
    match config.method {
        BrMethod::Spectral { terms } => spectral(sites, vario, terms, config.jitter, seed),
        BrMethod::GaussianMax { n, base_corr } => {
            gaussian_max(sites, n, &base_corr, config.jitter, seed)
        }
        BrMethod::Exact => exact(sites, vario, config.jitter, seed),
    }
}

/// Variogram whose increments `W` carry: `var(W_s - W_t) = 4 delta(s - t)`.
fn spectral_variogram(vario: &VariogramSpec) -> VariogramSpec {
    VariogramSpec {
        theta: 2.0 * vario.theta,
        alpha: vario.alpha,
    }
}

fn spectral<P: AsRef<[f64]>>(
    sites: &[P],
    vario: &VariogramSpec,
    terms: usize,
    jitter: f64,
    seed: u64,
) -> Result<BrSample> {
    let w_vario = spectral_variogram(vario);
    let sampler = IncrementSampler::new(sites, &w_vario, jitter)?;
    let mut rng = rng_from_seed(seed);
    let n = sites.len();
    let drift: Vec<f64> = sites.iter().map(|s| w_vario.at(s.as_ref())).collect();
    let mut best = vec![0.0f64; n];
    let mut last = vec![0.0f64; n];
    let mut gamma = 0.0f64;
    let mut done = 0;
    while done < terms {
        let cols = BATCH.min(terms - done);
        let mut gammas = Vec::with_capacity(cols);
        for _ in 0..cols {
            let e: f64 = Exp1.sample(&mut rng);
            gamma += e;
            gammas.push(gamma);
        }
        let w = sampler.sample_batch(cols, &mut rng);
        for (c, &g) in gammas.iter().enumerate() {
            let log_inv_gamma = -g.ln();
            let is_last = done + c + 1 == terms;
            for i in 0..n {
                let y = (w[(i, c)] - drift[i] + log_inv_gamma).exp();
                if y > best[i] {
                    best[i] = y;
                }
                if is_last {
                    last[i] = y;
                }
            }
        }
        done += cols;
    }
    let flagged = best
        .iter()
        .zip(&last)
        .filter(|(b, l)| **l > 0.01 * **b)
        .count();
    let mut warnings = Vec::new();
    if terms < RECOMMENDED_MIN_TERMS {
        warnings.push(format!(
            "spectral truncation at {terms} terms; at least {RECOMMENDED_MIN_TERMS} recommended"
        ));
    }
    Ok(BrSample {
        values: best,
        truncation_fraction: Some(if n == 0 { 0.0 } else { flagged as f64 / n as f64 }),
        warnings,
    })
}

/// Extremal-function sampler: site `k` receives spectral functions normalised
/// to 1 at `s_k`, `Y(s) = exp(W_s - W_{s_k} - 2 delta(s - s_k))`, in decreasing
/// Poisson order until they fall below the current value at `s_k`; a function
/// is kept only if it stays strictly below the running maximum at every
/// earlier site.
fn exact<P: AsRef<[f64]>>(sites: &[P], vario: &VariogramSpec, jitter: f64, seed: u64) -> Result<BrSample> {
    let w_vario = spectral_variogram(vario);
    let sampler = IncrementSampler::new(sites, &w_vario, jitter)?;
    let mut rng = rng_from_seed(seed);
    let n = sites.len();
    let mut z = vec![0.0f64; n];
    let mut pool = DMatrix::<f64>::zeros(n, 0);
    let mut next = 0;
    let mut y = vec![0.0f64; n];
    for k in 0..n {
        let sk = sites[k].as_ref();
        let mut arrival: f64 = Exp1.sample(&mut rng);
        while 1.0 / arrival > z[k] {
            if next == pool.ncols() {
                pool = sampler.sample_batch(BATCH.min(n.max(8)), &mut rng);
                next = 0;
            }
            let zeta = 1.0 / arrival;
            let wk = pool[(k, next)];
            let mut keep = true;
            for (i, yi) in y.iter_mut().enumerate() {
                let si = sites[i].as_ref();
                let r2: f64 = si.iter().zip(sk).map(|(a, b)| (a - b) * (a - b)).sum();
                *yi = zeta * (pool[(i, next)] - wk - w_vario.at_distance(r2.sqrt())).exp();
                if i < k && *yi >= z[i] {
                    keep = false;
                    break;
                }
            }
            if keep {
                for (zi, &yi) in z.iter_mut().zip(&y) {
                    if yi > *zi {
                        *zi = yi;
                    }
                }
            }
            next += 1;
            let e: f64 = Exp1.sample(&mut rng);
            arrival += e;
        }
    }
    Ok(BrSample {
        values: z,
        truncation_fraction: None,
        warnings: Vec::new(),
    })
}

fn gaussian_max<P: AsRef<[f64]>>(
    sites: &[P],
    n_fields: usize,
    corr: &CauchyCorrelation,
    jitter: f64,
    seed: u64,
) -> Result<BrSample> {
    let n = sites.len();
    let scale = corr.scale(n_fields);
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        let si = sites[i].as_ref();
        for j in i..n {
            let sj = sites[j].as_ref();
            let r2: f64 = si.iter().zip(sj).map(|(x, y)| (x - y) * (x - y)).sum();
            let c = corr.at_distance(r2.sqrt() / scale);
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
        cov[i * n + i] += jitter;
    }
    let factor = pivoted_cholesky(&cov, n, 10.0 * jitter)?.to_matrix();
    let rank = factor.ncols();
    let mut rng = rng_from_seed(seed);
    // The transform z -> -1/log Phi(z) is increasing, so only the largest
    // Gaussian value at each site matters.
    let mut z_max = vec![f64::NEG_INFINITY; n];
    let mut done = 0;
    while done < n_fields {
        let cols = BATCH.min(n_fields - done);
        let g = DMatrix::from_fn(rank, cols, |_, _| StandardNormal.sample(&mut rng));
        let z = &factor * g;
        for c in 0..cols {
            for (i, zm) in z_max.iter_mut().enumerate() {
                let v = z[(i, c)];
                if v > *zm {
                    *zm = v;
                }
            }
        }
        done += cols;
    }
    let inv_n = 1.0 / n_fields as f64;
    let values = z_max
        .into_iter()
        .map(|z| inv_n / normal::neg_log_cdf(z).max(MIN_NEG_LOG_PHI))
        .collect();
    Ok(BrSample {
        values,
        truncation_fraction: None,
        warnings: Vec::new(),
    })
}

/// Brown–Resnick field on a grid, with the variogram origin pinned at the
/// central site `floor((n_i - 1) / 2)` of every axis.
pub fn sim_brown_resnick_lattice(
    dims: &[usize],
    vario: &VariogramSpec,
    config: &BrSimConfig,
    seed: u64,
) -> Result<(LatticeField, BrSample)> {
    validate_dims(dims)?;
    let st = strides(dims);
    let n: usize = dims.iter().product();
    let sites: Vec<Vec<f64>> = (0..n)
        .map(|flat| {
            let mut rem = flat;
            dims.iter()
                .zip(&st)
                .map(|(&len, &s)| {
                    let i = rem / s;
                    rem %= s;
                    i as f64 - ((len - 1) / 2) as f64
                })
                .collect()
        })
        .collect();
    let sample = sim_brown_resnick(&sites, vario, config, seed)?;
    let field = LatticeField::from_parts(dims.to_vec(), sample.values.clone());
    Ok((field, sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::frechet_cdf;

    fn ks_frechet(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = frechet_cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn origin_site_has_exact_frechet_margin() {
        // At the origin every spectral term is 1/Gamma_j, so the max is 1/Gamma_1.
        let v = VariogramSpec::default();
        let vals: Vec<f64> = (0..4000)
            .map(|s| sim_brown_resnick(&[[0.0, 0.0]], &v, &BrSimConfig::spectral(10), s).unwrap().values[0])
            .collect();
        assert!(ks_frechet(&vals) < 0.03);
    }

    #[test]
    fn deterministic_given_seed() {
        let v = VariogramSpec::new(1.0, 1.0).unwrap();
        let sites = [[0.5, 0.0], [1.0, 1.0], [2.0, -1.0]];
        let cfg = BrSimConfig::spectral(200);
        let a = sim_brown_resnick(&sites, &v, &cfg, 4).unwrap();
        assert_eq!(a, sim_brown_resnick(&sites, &v, &cfg, 4).unwrap());
        assert!(a.truncation_fraction.unwrap() <= 1.0);
        assert!(a.warnings.is_empty());
        let few = sim_brown_resnick(&sites, &v, &BrSimConfig::spectral(10), 4).unwrap();
        assert_eq!(few.warnings.len(), 1);
    }

    #[test]
    fn gaussian_max_margins_are_frechet() {
        let sites: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 * 0.7, 0.0]).collect();
        let cfg = BrSimConfig::gaussian_max(200, 1.0, 2.0);
        let mut vals = Vec::new();
        for s in 0..300 {
            vals.extend(sim_brown_resnick(&sites, &VariogramSpec::default(), &cfg, s).unwrap().values);
        }
        assert!(ks_frechet(&vals) < 0.05);
    }

    fn joint_below_one(method: BrSimConfig, offset: f64, seed0: u64) -> (f64, f64) {
        // P(X_s <= 1, X_t <= 1) = exp(-2 Phi(sqrt(delta))) for ||s - t|| = 1
        let v = VariogramSpec::default();
        let sites = [[offset, offset], [offset + 1.0, offset], [offset - 1.0, offset + 1.0]];
        let reps = 4000;
        let hits = (0..reps)
            .filter(|&r| {
                let x = sim_brown_resnick(&sites, &v, &method, seed0 + r).unwrap().values;
                x[0] <= 1.0 && x[1] <= 1.0
            })
            .count();
        let p = hits as f64 / reps as f64;
        let truth = (-2.0 * normal::cdf(0.5f64.sqrt())).exp();
        (p, truth)
    }

    #[test]
    fn exact_method_has_husler_reiss_pairs_anywhere() {
        for offset in [0.0, 4.0] {
            let (p, truth) = joint_below_one(BrSimConfig::exact(), offset, 100);
            let se = (truth * (1.0 - truth) / 4000.0).sqrt();
            assert!((p - truth).abs() < 4.0 * se, "offset {offset}: {p} vs {truth}");
        }
    }

    #[test]
    fn spectral_method_has_husler_reiss_pairs_near_origin() {
        let (p, truth) = joint_below_one(BrSimConfig::spectral(1000), 0.0, 9000);
        let se = (truth * (1.0 - truth) / 4000.0).sqrt();
        assert!((p - truth).abs() < 4.0 * se, "{p} vs {truth}");
    }

    #[test]
    fn exact_margins_are_frechet_far_from_origin() {
        let v = VariogramSpec::default();
        let sites: Vec<[f64; 2]> = (0..5).map(|i| [6.0 + i as f64, -3.0]).collect();
        let mut vals = Vec::new();
        for s in 0..800 {
            vals.extend(sim_brown_resnick(&sites, &v, &BrSimConfig::exact(), s).unwrap().values);
        }
        assert!(ks_frechet(&vals) < 0.03);
    }

    #[test]
    fn lattice_origin_is_central() {
        let (f, _) = sim_brown_resnick_lattice(&[5, 4], &VariogramSpec::default(), &BrSimConfig::spectral(100), 1).unwrap();
        assert_eq!(f.dims(), &[5, 4]);
        assert!(f.values().iter().all(|v| *v > 0.0 && v.is_finite()));
    }

    #[test]
    fn finite_n_delta_approaches_limit() {
        let c = CauchyCorrelation { c: 1.0, a: 2.0 };
        let lim = c.limit_variogram().at_distance(1.0);
        let e1 = (c.finite_n_delta(100, 1.0) - lim).abs();
        let e2 = (c.finite_n_delta(1_000_000, 1.0) - lim).abs();
        assert!(e2 < e1);
    }
}
