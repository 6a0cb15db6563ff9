//! Kernel-smoothed extremogram for values observed at Poisson-scattered
//! locations in a rectangle `S`.
//!
//! ```text
//! p_hat    = m / (nu |S|)   * #{i : X_i / a_m in A}
//! tau_hat  = m / (nu^2 |S|) * sum_{i != j} w_n(h + s_i - s_j) 1{X_i / a_m in A} 1{X_j / a_m in B}
//! rho_hat  = tau_hat / p_hat
//! ```
//!
//! Pair sums collect the nonzero kernel terms and add them in ascending
//! order, so every result is independent of point order and of `h -> -h`
//! when `A = B`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{resolve_threshold, ExtremeSet, Lag, PointField, Threshold, ThresholdRule};
use crate::lattice::{reference_level, EseResult, EseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// `(4/pi) 1{||x|| <= 1/2}`.
    Box,
    /// `(8/pi) (1 - 4||x||^2) 1{||x|| <= 1/2}`.
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(shape: KernelShape, bandwidth: f64) -> Result<Self> {
        let k = Self { shape, bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth.is_finite() && self.bandwidth > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("bandwidth must be positive, got {}", self.bandwidth)))
        }
    }

    /// The unscaled density `w(x)`, supported on the disc of radius 1/2.
    pub fn density(&self, x: [f64; 2]) -> f64 {
        profile(self.shape, x[0] * x[0] + x[1] * x[1])
    }

    /// `w_n(v) = w(v / lambda) / lambda^2`.
    pub fn weight(&self, v: [f64; 2]) -> f64 {
        let l = self.bandwidth;
        let (x, y) = (v[0] / l, v[1] / l);
        profile(self.shape, x * x + y * y) / (l * l)
    }

    /// Radius of the support of `w_n`.
    pub fn support_radius(&self) -> f64 {
        self.bandwidth / 2.0
    }
}

fn profile(shape: KernelShape, r2: f64) -> f64 {
    if r2 > 0.25 {
        return 0.0;
    }
    match shape {
        KernelShape::Box => 4.0 / PI,
        KernelShape::Epanechnikov => 8.0 / PI * (1.0 - 4.0 * r2),
    }
}

/// Intensity used in the normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    Known(f64),
    /// `N / |S|`.
    Plugin,
}

impl NuMode {
    fn resolve(&self, pf: &PointField) -> Result<f64> {
        match *self {
            NuMode::Known(nu) if nu.is_finite() && nu > 0.0 => Ok(nu),
            NuMode::Known(nu) => Err(Error::invalid(format!("intensity must be positive, got {nu}"))),
            NuMode::Plugin => Ok(pf.len() as f64 / pf.region().area()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PHat {
    pub p_hat: f64,
    pub threshold: Threshold,
    pub nu: f64,
    pub exceed_count: usize,
}

pub fn kernel_p_hat(pf: &PointField, a: &ExtremeSet, rule: ThresholdRule, nu_mode: NuMode) -> Result<PHat> {
    if pf.is_empty() {
        return Err(Error::EmptyField(0));
    }
    let threshold = resolve_threshold(pf.values(), rule)?;
    p_hat_at(pf, a, threshold, nu_mode)
}

fn p_hat_at(pf: &PointField, a: &ExtremeSet, threshold: Threshold, nu_mode: NuMode) -> Result<PHat> {
    let nu = nu_mode.resolve(pf)?;
    let exceed_count = pf.values().iter().filter(|&&x| a.contains_scaled(x, threshold.a_m)).count();
    Ok(PHat {
        p_hat: threshold.m / (nu * pf.region().area()) * exceed_count as f64,
        threshold,
        nu,
        exceed_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauHat {
    pub tau_hat: Vec<f64>,
    /// Ordered pairs `i != j` inside the kernel support at each lag.
    pub pair_counts: Vec<u64>,
    /// Those pairs with `i` in A and `j` in B.
    pub exceed_counts: Vec<u64>,
    pub threshold: Threshold,
    pub nu: f64,
    /// No pair fell inside any kernel support; all estimates are zero.
    pub bandwidth_too_small: bool,
}

/// Uniform grid over the locations with cell side equal to the support radius.
struct PairIndex<'a> {
    locations: &'a [[f64; 2]],
    cell: f64,
    origin: [f64; 2],
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> PairIndex<'a> {
    fn new(pf: &'a PointField, kernel: &KernelSpec) -> Self {
        let region = pf.region();
        let cell = kernel.support_radius();
        let origin = [region.x0, region.y0];
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in pf.locations().iter().enumerate() {
            cells.entry(Self::key(origin, cell, *p)).or_default().push(i);
        }
        Self {
            locations: pf.locations(),
            cell,
            origin,
            cells,
        }
    }

    fn key(origin: [f64; 2], cell: f64, p: [f64; 2]) -> (i64, i64) {
        (
            ((p[0] - origin[0]) / cell).floor() as i64,
            ((p[1] - origin[1]) / cell).floor() as i64,
        )
    }

    /// Calls `f(j)` for every point that may lie within the support radius
    /// of `target` (a superset of the true neighbours).
    fn for_candidates(&self, target: [f64; 2], mut f: impl FnMut(usize)) {
        let reach = self.cell * (1.0 + 1e-9) + 1e-12 * (target[0].abs() + target[1].abs() + 1.0);
        let lo = Self::key(self.origin, self.cell, [target[0] - reach, target[1] - reach]);
        let hi = Self::key(self.origin, self.cell, [target[0] + reach, target[1] + reach]);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(list) = self.cells.get(&(cx, cy)) {
                    list.iter().for_each(|&j| f(j));
                }
            }
        }
    }
}

/// Per-lag kernel sums for fixed exceedance indicators.
struct LagSum {
    sum: f64,
    pairs: u64,
    exceed_pairs: u64,
}

fn lag_sum(index: &PairIndex, kernel: &KernelSpec, h: [f64; 2], in_a: &[bool], in_b: &[bool]) -> LagSum {
    let locs = index.locations;
    let mut terms = Vec::new();
    let mut pairs = 0u64;
    for (i, si) in locs.iter().enumerate() {
        let target = [si[0] + h[0], si[1] + h[1]];
        index.for_candidates(target, |j| {
            if i == j {
                return;
            }
            let sj = locs[j];
            let w = kernel.weight([h[0] + (si[0] - sj[0]), h[1] + (si[1] - sj[1])]);
            if w > 0.0 {
                pairs += 1;
                if in_a[i] && in_b[j] {
                    terms.push(w);
                }
            }
        });
    }
    let exceed_pairs = terms.len() as u64;
    LagSum {
        sum: ascending_sum(terms),
        pairs,
        exceed_pairs,
    }
}

fn ascending_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    // Starts at +0 so an empty sum is not -0.
    terms.iter().fold(0.0, |acc, t| acc + t)
}

fn planar_lags(lags: &[Lag]) -> Result<Vec<[f64; 2]>> {
    lags.iter()
        .map(|l| match l.offset() {
            &[x, y] if x.is_finite() && y.is_finite() => Ok([x, y]),
            other => Err(Error::invalid(format!("kernel lags must be finite 2-d vectors, got {other:?}"))),
        })
        .collect()
}

fn check_points(pf: &PointField) -> Result<()> {
    if pf.len() < 2 {
        Err(Error::EmptyField(pf.len()))
    } else {
        Ok(())
    }
}

pub fn kernel_tau_hat(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    rule: ThresholdRule,
    kernel: &KernelSpec,
    lags: &[Lag],
    nu_mode: NuMode,
) -> Result<TauHat> {
    check_points(pf)?;
    let threshold = resolve_threshold(pf.values(), rule)?;
    tau_hat_at(pf, a, b, threshold, kernel, lags, nu_mode)
}

fn tau_hat_at(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    threshold: Threshold,
    kernel: &KernelSpec,
    lags: &[Lag],
    nu_mode: NuMode,
) -> Result<TauHat> {
    check_points(pf)?;
    kernel.validate()?;
    let nu = nu_mode.resolve(pf)?;
    let hs = planar_lags(lags)?;
    let in_a: Vec<bool> = pf.values().iter().map(|&x| a.contains_scaled(x, threshold.a_m)).collect();
    let in_b: Vec<bool> = pf.values().iter().map(|&x| b.contains_scaled(x, threshold.a_m)).collect();
    let index = PairIndex::new(pf, kernel);
    let scale = threshold.m / (nu * nu * pf.region().area());
    let mut out = TauHat {
        tau_hat: Vec::with_capacity(hs.len()),
        pair_counts: Vec::with_capacity(hs.len()),
        exceed_counts: Vec::with_capacity(hs.len()),
        threshold,
        nu,
        bandwidth_too_small: false,
    };
    for h in hs {
        let s = lag_sum(&index, kernel, h, &in_a, &in_b);
        out.tau_hat.push(scale * s.sum);
        out.pair_counts.push(s.pairs);
        out.exceed_counts.push(s.exceed_pairs);
    }
    out.bandwidth_too_small = !out.pair_counts.is_empty() && out.pair_counts.iter().all(|&c| c == 0);
    Ok(out)
}

pub fn kernel_ese(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    rule: ThresholdRule,
    kernel: &KernelSpec,
    lags: &[Lag],
    nu_mode: NuMode,
) -> Result<EseResult> {
    check_points(pf)?;
    let threshold = resolve_threshold(pf.values(), rule)?;
    kernel_ese_at(pf, a, b, threshold, reference_level(rule), kernel, lags, nu_mode)
}

/// [`kernel_ese`] with the threshold already resolved.
#[allow(clippy::too_many_arguments)]
pub fn kernel_ese_at(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    threshold: Threshold,
    reference_level: Option<f64>,
    kernel: &KernelSpec,
    lags: &[Lag],
    nu_mode: NuMode,
) -> Result<EseResult> {
    let p = p_hat_at(pf, a, threshold, nu_mode)?;
    if p.exceed_count == 0 {
        return Err(Error::DegenerateDenominator);
    }
    let tau = tau_hat_at(pf, a, b, threshold, kernel, lags, nu_mode)?;
    let rows = lags
        .iter()
        .enumerate()
        .map(|(k, lag)| EseRow {
            lag: Some(lag.clone()),
            distance: lag.norm(),
            rho_hat: tau.tau_hat[k] / p.p_hat,
            pair_count: tau.pair_counts[k],
            exceed_count: tau.exceed_counts[k],
        })
        .collect();
    Ok(EseResult {
        rows,
        threshold,
        set_a: *a,
        set_b: *b,
        denom_rate: p.exceed_count as f64 / pf.len() as f64,
        n_sites: pf.len(),
        reference_level,
        p_hat: Some(p.p_hat),
        warnings: bandwidth_warning(&tau),
    })
}

fn bandwidth_warning(tau: &TauHat) -> Vec<String> {
    if tau.bandwidth_too_small {
        vec!["bandwidth_too_small: no pair falls inside any kernel support".to_string()]
    } else {
        Vec::new()
    }
}

/// The 8 lags `r (cos(k pi/4), sin(k pi/4))`, `k = 0..8`.
pub fn rotations(r: f64) -> Vec<Lag> {
    (0..8)
        .map(|k| {
            let t = k as f64 * FRAC_PI_4;
            Lag::new(vec![r * t.cos(), r * t.sin()])
        })
        .collect()
}

/// Distance-indexed estimate: `rho_hat` averaged over the 8 rotations of
/// each distance; pair counts are summed over rotations.
pub fn kernel_ese_isotropic(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    rule: ThresholdRule,
    kernel: &KernelSpec,
    distances: &[f64],
    nu_mode: NuMode,
) -> Result<EseResult> {
    check_points(pf)?;
    let threshold = resolve_threshold(pf.values(), rule)?;
    kernel_ese_isotropic_at(pf, a, b, threshold, reference_level(rule), kernel, distances, nu_mode)
}

#[allow(clippy::too_many_arguments)]
pub fn kernel_ese_isotropic_at(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    threshold: Threshold,
    reference_level: Option<f64>,
    kernel: &KernelSpec,
    distances: &[f64],
    nu_mode: NuMode,
) -> Result<EseResult> {
    if let Some(r) = distances.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::invalid(format!("distances must be finite and >= 0, got {r}")));
    }
    let lags: Vec<Lag> = distances.iter().flat_map(|&r| rotations(r)).collect();
    let mut full = kernel_ese_at(pf, a, b, threshold, reference_level, kernel, &lags, nu_mode)?;
    let rows = distances
        .iter()
        .zip(full.rows.chunks(8))
        .map(|(&r, chunk)| EseRow {
            lag: None,
            distance: r,
            rho_hat: chunk.iter().map(|row| row.rho_hat).sum::<f64>() / 8.0,
            pair_count: chunk.iter().map(|row| row.pair_count).sum(),
            exceed_count: chunk.iter().map(|row| row.exceed_count).sum(),
        })
        .collect();
    full.rows = rows;
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Region;
    use crate::simulate::{sim_point_field, CountRule, FieldSource};
    use proptest::prelude::*;

    fn unit() -> ExtremeSet {
        ExtremeSet::unit_ray()
    }

    #[test]
    fn kernels_integrate_to_one() {
        // midpoint rule on [-1/2, 1/2]^2
        for shape in [KernelShape::Box, KernelShape::Epanechnikov] {
            let k = KernelSpec::new(shape, 1.0).unwrap();
            let n = 4000;
            let step = 1.0 / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                let x = -0.5 + (i as f64 + 0.5) * step;
                let mut row = 0.0;
                for j in 0..n {
                    let y = -0.5 + (j as f64 + 0.5) * step;
                    row += k.density([x, y]);
                }
                total += row * step * step;
            }
            let tol = if shape == KernelShape::Box { 1e-3 } else { 1e-6 };
            assert!((total - 1.0).abs() < tol, "{shape:?}: {total}");
        }
    }

    #[test]
    fn box_indicator_mass_by_radial_integral() {
        // disc of radius 1/2 has area pi/4
        assert!((4.0 / PI * (PI / 4.0) - 1.0).abs() < 1e-15);
        let n = 100_000;
        let k = KernelSpec::new(KernelShape::Epanechnikov, 1.0).unwrap();
        let dr = 0.5 / n as f64;
        let radial: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                2.0 * PI * k.density([r, 0.0]) * r * dr
            })
            .sum();
        assert!((radial - 1.0).abs() < 1e-6, "{radial}");
        let k = KernelSpec::new(KernelShape::Box, 1.0).unwrap();
        let radial: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                2.0 * PI * k.density([r, 0.0]) * r * dr
            })
            .sum();
        assert!((radial - 1.0).abs() < 1e-6, "{radial}");
    }

    fn two_points() -> PointField {
        PointField::new(
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![5.0, 5.0],
            Region::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_pair_by_hand() {
        let pf = two_points();
        let k = KernelSpec::new(KernelShape::Box, 0.5).unwrap();
        let t = kernel_tau_hat(&pf, &unit(), &unit(), ThresholdRule::Absolute(1.0), &k, &[Lag::new(vec![1.0, 0.0])], NuMode::Known(1.0)).unwrap();
        // m = 1 (both exceed); only (i, j) = (0, 1) hits the kernel centre:
        // w_n(0) = 0.5^-2 * 4/pi
        assert!((t.tau_hat[0] - 16.0 / PI).abs() < 1e-12);
        assert_eq!(t.pair_counts[0], 1);
        assert!(!t.bandwidth_too_small);
    }

    #[test]
    fn no_exceedances_in_b_give_zero() {
        let pf = two_points();
        let k = KernelSpec::new(KernelShape::Box, 0.5).unwrap();
        let b = ExtremeSet::new(10.0, f64::INFINITY).unwrap();
        let t = kernel_tau_hat(&pf, &unit(), &b, ThresholdRule::Absolute(1.0), &k, &[Lag::new(vec![1.0, 0.0])], NuMode::Plugin).unwrap();
        assert_eq!(t.tau_hat, vec![0.0]);
    }

    #[test]
    fn bandwidth_too_small_is_flagged() {
        let pf = two_points();
        let k = KernelSpec::new(KernelShape::Box, 0.01).unwrap();
        let r = kernel_ese(&pf, &unit(), &unit(), ThresholdRule::Absolute(1.0), &k, &[Lag::new(vec![0.5, 0.0])], NuMode::Plugin).unwrap();
        assert_eq!(r.rows[0].rho_hat, 0.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn p_hat_plugin_and_known_agree() {
        let region = Region::square(20.0).unwrap();
        let pf = sim_point_field(&region, &CountRule::Fixed { n: 400 }, &FieldSource::FrechetIid, 3).unwrap();
        let rule = ThresholdRule::Quantile(0.9);
        let a = kernel_p_hat(&pf, &unit(), rule, NuMode::Plugin).unwrap();
        let b = kernel_p_hat(&pf, &unit(), rule, NuMode::Known(1.0)).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        // m * (1 - q) = 1 up to the discreteness of the empirical quantile
        assert!((a.p_hat - 1.0).abs() < 0.03, "{}", a.p_hat);
    }

    #[test]
    fn errors() {
        let pf = PointField::new(vec![[0.5, 0.5]], vec![2.0], Region::square(1.0).unwrap(), None).unwrap();
        let k = KernelSpec::new(KernelShape::Box, 0.5).unwrap();
        assert_eq!(
            kernel_tau_hat(&pf, &unit(), &unit(), ThresholdRule::Absolute(1.0), &k, &[], NuMode::Plugin),
            Err(Error::EmptyField(1))
        );
        let empty = PointField::new(vec![], vec![], Region::square(1.0).unwrap(), None).unwrap();
        assert_eq!(kernel_p_hat(&empty, &unit(), ThresholdRule::Quantile(0.5), NuMode::Plugin), Err(Error::EmptyField(0)));
        assert!(KernelSpec::new(KernelShape::Box, 0.0).is_err());
        let pf = two_points();
        let b = ExtremeSet::new(10.0, f64::INFINITY).unwrap();
        assert_eq!(
            kernel_ese(&pf, &b, &unit(), ThresholdRule::Absolute(1.0), &k, &[Lag::new(vec![1.0, 0.0])], NuMode::Plugin),
            Err(Error::DegenerateDenominator)
        );
    }

    fn random_field(n: usize, seed: u64) -> PointField {
        let region = Region::new(-3.0, 7.0, 1.0, 9.0).unwrap();
        sim_point_field(&region, &CountRule::Fixed { n }, &FieldSource::FrechetIid, seed).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn relabeling_and_reflection_are_exact(seed in 0u64..1000, hx in -2.0f64..2.0, hy in -2.0f64..2.0, bw in 0.3f64..2.5) {
            let pf = random_field(150, seed);
            let k = KernelSpec::new(KernelShape::Epanechnikov, bw).unwrap();
            let rule = ThresholdRule::Quantile(0.6);
            let h = Lag::new(vec![hx, hy]);
            let base = kernel_tau_hat(&pf, &unit(), &unit(), rule, &k, &[h.clone(), h.neg()], NuMode::Plugin).unwrap();
            prop_assert_eq!(base.tau_hat[0], base.tau_hat[1]);
            // reverse storage order
            let locs: Vec<[f64; 2]> = pf.locations().iter().rev().copied().collect();
            let vals: Vec<f64> = pf.values().iter().rev().copied().collect();
            let rev = PointField::new(locs, vals, pf.region(), None).unwrap();
            let other = kernel_tau_hat(&rev, &unit(), &unit(), rule, &k, &[h], NuMode::Plugin).unwrap();
            prop_assert_eq!(base.tau_hat[0], other.tau_hat[0]);
            prop_assert_eq!(base.pair_counts[0], other.pair_counts[0]);
        }

        #[test]
        fn translation_invariance(seed in 0u64..1000, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            let pf = random_field(120, seed);
            let r = pf.region();
            let shifted = PointField::new(
                pf.locations().iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
                pf.values().to_vec(),
                r.translate(dx, dy),
                None,
            ).unwrap();
            let k = KernelSpec::new(KernelShape::Box, 1.5).unwrap();
            let rule = ThresholdRule::Quantile(0.5);
            let lags = [Lag::new(vec![1.0, 0.0]), Lag::new(vec![0.3, -1.2])];
            let a = kernel_ese(&pf, &unit(), &unit(), rule, &k, &lags, NuMode::Plugin).unwrap();
            let b = kernel_ese(&shifted, &unit(), &unit(), rule, &k, &lags, NuMode::Plugin).unwrap();
            for (x, y) in a.rows.iter().zip(&b.rows) {
                prop_assert!((x.rho_hat - y.rho_hat).abs() <= 1e-9 * x.rho_hat.max(1.0));
            }
        }
    }

    #[test]
    fn isotropic_mode_averages_rotations() {
        let pf = random_field(300, 5);
        let k = KernelSpec::new(KernelShape::Box, 1.0).unwrap();
        let rule = ThresholdRule::Quantile(0.7);
        let iso = kernel_ese_isotropic(&pf, &unit(), &unit(), rule, &k, &[1.0, 2.0], NuMode::Plugin).unwrap();
        let vec = kernel_ese(&pf, &unit(), &unit(), rule, &k, &rotations(2.0), NuMode::Plugin).unwrap();
        let mean = vec.rows.iter().map(|r| r.rho_hat).sum::<f64>() / 8.0;
        assert_eq!(iso.rows.len(), 2);
        assert!((iso.rows[1].rho_hat - mean).abs() < 1e-15);
        assert!(iso.rows[1].lag.is_none());
    }
}
