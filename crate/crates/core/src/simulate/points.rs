use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{PointField, Region};
use crate::rng::derived_rng;

use super::brown_resnick::{sim_brown_resnick, BrSimConfig};
use super::frechet::draw_frechet;
use super::gaussian::VariogramSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRule {
    /// Homogeneous Poisson process with intensity `nu`.
    Poisson { nu: f64 },
    /// Binomial process: exactly `n` uniform points.
    Fixed { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    BrownResnick {
        vario: VariogramSpec,
        config: BrSimConfig,
    },
    FrechetIid,
}

/// Uniformly scattered locations carrying values of `source`. For
/// Brown–Resnick sources the variogram origin is the region center.
pub fn sim_point_field(
    region: &Region,
    count: &CountRule,
    source: &FieldSource,
    seed: u64,
) -> Result<PointField> {
    let region = Region::new(region.x0, region.x1, region.y0, region.y1)?;
    let mut rng = derived_rng(seed, "point-locations", 0);
    let (n, nu) = match *count {
        CountRule::Poisson { nu } => {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(Error::invalid(format!("intensity must be positive, got {nu}")));
            }
            let mean = nu * region.area();
            let n = Poisson::new(mean)
                .map_err(|e| Error::invalid(format!("poisson mean {mean}: {e}")))?
                .sample(&mut rng) as usize;
            (n, nu)
        }
        CountRule::Fixed { n } => {
            if n == 0 {
                return Err(Error::invalid("fixed point count must be positive"));
            }
            (n, n as f64 / region.area())
        }
    };
    let locations: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            [region.x0 + u * region.width(), region.y0 + v * region.height()]
        })
        .collect();

    let value_seed = crate::rng::derive_seed(seed, "point-values", 0);
    let values = match source {
        FieldSource::FrechetIid => draw_frechet(n, &mut derived_rng(value_seed, "root", 0)),
        FieldSource::BrownResnick { vario, config } => {
            let c = region.center();
            let centered: Vec<[f64; 2]> = locations.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
            sim_brown_resnick(&centered, vario, config, value_seed)?.values
        }
    };
    PointField::new(locations, values, region, Some(nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_count_is_exact() {
        let r = Region::square(40.0).unwrap();
        let pf = sim_point_field(&r, &CountRule::Fixed { n: 1600 }, &FieldSource::FrechetIid, 3).unwrap();
        assert_eq!(pf.len(), 1600);
        assert_eq!(pf.intensity_hint(), Some(1.0));
    }

    #[test]
    fn poisson_count_mean() {
        let r = Region::square(40.0).unwrap();
        let mean = (0..200)
            .map(|s| {
                sim_point_field(&r, &CountRule::Poisson { nu: 1.0 }, &FieldSource::FrechetIid, s)
                    .unwrap()
                    .len() as f64
            })
            .sum::<f64>()
            / 200.0;
        assert!((1540.0..=1660.0).contains(&mean), "{mean}");
    }

    #[test]
    fn iid_values_show_vanishing_joint_exceedance() {
        // m * P(both > a_m) ~ 1/m for independent values; it must shrink as m grows.
        let r = Region::square(40.0).unwrap();
        let pf = sim_point_field(&r, &CountRule::Fixed { n: 4000 }, &FieldSource::FrechetIid, 8).unwrap();
        let v = pf.values();
        let joint = |m: f64| {
            let a = m; // unit Fréchet: P(X > m) ~ 1/m
            let pairs = v.len() - 1;
            let both = v.windows(2).filter(|w| w[0] > a && w[1] > a).count();
            m * both as f64 / pairs as f64
        };
        assert!(joint(50.0) < joint(5.0));
        assert!(joint(5.0) < 0.5);
    }
}
