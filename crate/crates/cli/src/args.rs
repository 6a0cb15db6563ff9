//! Flag groups shared across subcommands and their translation into
//! library configs.

use clap::{Args, ValueEnum};

use extremogram::io::{parse_dims, parse_kernel, parse_lags, parse_nu, parse_region, parse_set, parse_threshold, parse_weights, LagsArg};
use extremogram::simulate::{BrSimConfig, CountRule, FieldSource, VariogramSpec};
use extremogram::{lag_grid, Error, Estimator, EstimatorConfig, KernelSpec, ModelConfig, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Frechet,
    Mma,
    /// MMA with the five-point cross (shorthand for `mma --weights mma1`).
    Mma1,
    BrownResnick,
    PointField,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BrMethodArg {
    Exact,
    Spectral,
    GaussianMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointSource {
    Frechet,
    BrownResnick,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Grid size, e.g. 40x40.
    #[arg(long, default_value = "40x40")]
    pub dims: String,
    /// mma1, ball:R, geometric:PHI[:R] or x,y=w;x,y=w.
    #[arg(long, default_value = "mma1")]
    pub weights: String,
    /// Variogram scale: delta(h) = theta * |h|^alpha.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub br_method: BrMethodArg,
    /// Poisson points in the spectral method.
    #[arg(long, default_value_t = 1000)]
    pub terms: usize,
    /// Gaussian-max: number of fields, and Cauchy correlation c, a.
    #[arg(long, default_value_t = 1600)]
    pub gauss_n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gauss_c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gauss_a: f64,
    /// Point-field window: SIDE or x0,x1,y0,y1.
    #[arg(long, default_value = "40")]
    pub region: String,
    /// Poisson intensity of point locations.
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,
    /// Fixed number of points (overrides --intensity).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum, default_value = "frechet")]
    pub source: PointSource,
    /// Value of every site for the constant model.
    #[arg(long, default_value_t = 1.0)]
    pub value: f64,
}

impl ModelArgs {
    fn vario(&self) -> Result<VariogramSpec> {
        VariogramSpec::new(self.theta, self.alpha)
    }

    fn br_sim(&self) -> BrSimConfig {
        match self.br_method {
            BrMethodArg::Exact => BrSimConfig::exact(),
            BrMethodArg::Spectral => BrSimConfig::spectral(self.terms),
            BrMethodArg::GaussianMax => BrSimConfig::gaussian_max(self.gauss_n, self.gauss_c, self.gauss_a),
        }
    }

    pub fn build(&self) -> Result<ModelConfig> {
        let dims = || parse_dims(&self.dims);
        Ok(match self.model {
            ModelKind::Frechet => ModelConfig::FrechetIid { dims: dims()? },
            ModelKind::Mma => ModelConfig::Mma {
                dims: dims()?,
                weights: parse_weights(&self.weights)?,
            },
            ModelKind::Mma1 => ModelConfig::Mma {
                dims: dims()?,
                weights: parse_weights("mma1")?,
            },
            ModelKind::BrownResnick => ModelConfig::BrownResnickLattice {
                dims: dims()?,
                vario: self.vario()?,
                sim: self.br_sim(),
            },
            ModelKind::PointField => ModelConfig::PointField {
                region: parse_region(&self.region)?,
                count: match self.points {
                    Some(n) => CountRule::Fixed { n },
                    None => CountRule::Poisson { nu: self.intensity },
                },
                source: match self.source {
                    PointSource::Frechet => FieldSource::FrechetIid,
                    PointSource::BrownResnick => FieldSource::BrownResnick {
                        vario: self.vario()?,
                        config: self.br_sim(),
                    },
                },
            },
            ModelKind::Constant => ModelConfig::Constant {
                dims: dims()?,
                value: self.value,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Lattice,
    Kernel,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "lattice")]
    pub mode: Mode,
    /// "lower,upper" with inf allowed.
    #[arg(long, default_value = "1,inf")]
    pub set_a: String,
    #[arg(long, default_value = "1,inf")]
    pub set_b: String,
    /// q=<level> or abs=<value>.
    #[arg(long, default_value = "q=0.97")]
    pub threshold: String,
    /// Max distance, a comma list of distances, or vectors like 1:0;1:1.
    #[arg(long, default_value = "5")]
    pub lags: String,
    /// Pool lags by distance (lattice) or average rotations (kernel).
    #[arg(long)]
    pub by_distance: bool,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// box or epanechnikov.
    #[arg(long, default_value = "box")]
    pub kernel: String,
    /// plugin or known=<intensity>.
    #[arg(long, default_value = "plugin")]
    pub nu: String,
}

/// Distances 0.5, 1.0, ... up to `max`.
fn half_steps(max: f64) -> Vec<f64> {
    (1..=(2.0 * max + 1e-9).floor() as usize).map(|k| k as f64 * 0.5).collect()
}

impl EstimatorArgs {
    /// `d` is the spatial dimension of the data; `grid` its lattice shape,
    /// used to drop lags that cannot fit when lags come from a max distance.
    pub fn build(&self, d: usize, grid: Option<&[usize]>) -> Result<EstimatorConfig> {
        let fits = |h: &extremogram::Lag| match grid {
            Some(dims) => h.offset().iter().zip(dims).all(|(v, &n)| v.abs() < n as f64),
            None => true,
        };
        let lags = parse_lags(&self.lags)?;
        let estimator = match self.mode {
            Mode::Lattice => match (lags, self.by_distance) {
                (LagsArg::MaxDist(r), true) => Estimator::LatticeByDistance { max_dist: r },
                (LagsArg::MaxDist(r), false) => Estimator::Lattice {
                    lags: lag_grid(r, d).into_iter().filter(|h| fits(h)).collect(),
                },
                (LagsArg::Distances(ds), _) => Estimator::LatticeByDistance {
                    max_dist: ds.iter().cloned().fold(0.0, f64::max),
                },
                (LagsArg::Vectors(lags), _) => Estimator::Lattice { lags },
            },
            Mode::Kernel => {
                let bandwidth = self
                    .bandwidth
                    .ok_or_else(|| Error::InvalidParameter("kernel mode needs --bandwidth".into()))?;
                let kernel = KernelSpec::new(parse_kernel(&self.kernel)?, bandwidth)?;
                let nu = parse_nu(&self.nu)?;
                match (lags, self.by_distance) {
                    (LagsArg::MaxDist(r), true) => Estimator::KernelIsotropic {
                        kernel,
                        nu,
                        distances: half_steps(r),
                    },
                    (LagsArg::MaxDist(r), false) => Estimator::Kernel {
                        kernel,
                        nu,
                        lags: lag_grid(r, 2),
                    },
                    (LagsArg::Distances(distances), _) => Estimator::KernelIsotropic { kernel, nu, distances },
                    (LagsArg::Vectors(lags), _) => Estimator::Kernel { kernel, nu, lags },
                }
            }
        };
        Ok(EstimatorConfig {
            set_a: parse_set(&self.set_a)?,
            set_b: parse_set(&self.set_b)?,
            rule: parse_threshold(&self.threshold)?,
            estimator,
        })
    }
}
