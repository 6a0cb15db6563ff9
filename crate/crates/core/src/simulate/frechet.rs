use rand::distr::Open01;
use rand::Rng as _;

use crate::error::Result;
use crate::field::{validate_dims, LatticeField};
use crate::rng::{rng_from_seed, Rng};

/// Unit Fréchet distribution function `exp(-1/x)`.
pub fn frechet_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// `n` iid unit Fréchet variates by inversion, `-1 / ln U`.
pub(crate) fn draw_frechet(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -1.0 / u.ln()
        })
        .collect()
}

pub fn sim_frechet_iid(dims: &[usize], seed: u64) -> Result<LatticeField> {
    validate_dims(dims)?;
    let n = dims.iter().product();
    let mut rng = rng_from_seed(seed);
    Ok(LatticeField::from_parts(dims.to_vec(), draw_frechet(n, &mut rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_maps_inverse_e_to_one() {
        let u = (-1.0f64).exp();
        assert!((-1.0 / u.ln() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_frechet_at_one() {
        let a = sim_frechet_iid(&[100, 1000], 3).unwrap();
        let b = sim_frechet_iid(&[100, 1000], 3).unwrap();
        assert_eq!(a, b);
        let below = a.values().iter().filter(|&&v| v <= 1.0).count() as f64 / a.len() as f64;
        assert!((below - (-1.0f64).exp()).abs() < 0.005, "{below}");
        assert_ne!(a, sim_frechet_iid(&[100, 1000], 4).unwrap());
    }
}
