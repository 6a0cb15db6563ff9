//! Acceptance suite: one pass/fail line per criterion, with runtime limits.
//!
//! Every reference value is computed here, independently of the library:
//! min/sum enumeration for max-moving averages, plain closed forms for the
//! Hüsler–Reiss law, double loops for the lattice estimator and an O(N^2)
//! loop for the kernel estimator.
//!
//! `ACCEPTANCE_ONLY=3,7` runs a subset. The process exits non-zero if any
//! selected criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use extremogram::inference::lattice_as_points;
use extremogram::io::{
    parse_spacetime, parse_windows, render_ese_csv, spatial_block_max, temporal_max, ESE_COLUMNS,
};
use extremogram::oracles::{geometric_mma_extremogram, mma1_pa_extremogram, mma_extremogram, mma_pa_extremogram};
use extremogram::rng::derive_seed;
use extremogram::simulate::{
    sim_brown_resnick, sim_brown_resnick_lattice, sim_frechet_iid, sim_mma, sim_point_field, BrSimConfig, CountRule,
    FieldSource, VariogramSpec, WeightSpec,
};
use extremogram::{
    clt_rate_check, kernel_ese, kernel_ese_isotropic, lag_grid, lattice_ese, mc_study, permutation_bands, Data,
    Estimator, EstimatorConfig, ExtremeSet, KernelShape, KernelSpec, Lag, LatticeField, ModelConfig, NuMode,
    PointField, Region, ThresholdRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Weights of a max-moving average as an offset list.
fn mma1_weights() -> Vec<([i64; 2], f64)> {
    vec![([0, 0], 1.0), ([1, 0], 1.0), ([-1, 0], 1.0), ([0, 1], 1.0), ([0, -1], 1.0)]
}

fn geometric_weights(phi_: f64, radius: f64) -> Vec<([i64; 2], f64)> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            let n = ((x * x + y * y) as f64).sqrt();
            if n <= radius {
                out.push(([x, y], phi_.powf(n)));
            }
        }
    }
    out
}

/// `(sum_s min(w(s), w(s + h)), sum_s w(s))` by enumeration.
fn overlap_and_total(weights: &[([i64; 2], f64)], h: [i64; 2]) -> (f64, f64) {
    let lookup = |p: [i64; 2]| weights.iter().find(|(q, _)| *q == p).map_or(0.0, |(_, w)| *w);
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let overlap: f64 = weights
        .iter()
        .map(|(s, w)| w.min(lookup([s[0] + h[0], s[1] + h[1]])))
        .sum();
    (overlap, total)
}

/// Pre-asymptotic extremogram of a max-moving average at `P(X > a_m) = 1/m`:
/// `m * P(X_0 > a_m, X_h > a_m)` with `P(X_0 <= a, X_h <= a) = exp(-(2W - overlap)/a)`.
fn mma_pa_direct(weights: &[([i64; 2], f64)], h: [i64; 2], m: f64) -> f64 {
    let (overlap, total) = overlap_and_total(weights, h);
    let below = 1.0 - 1.0 / m;
    let both_below = below.powf((2.0 * total - overlap) / total);
    m * (1.0 - 2.0 * below + both_below)
}

/// `m * P(X_0 > m, X_h > m)` for a Brown–Resnick field with Hüsler–Reiss
/// parameter `delta`: `m [1 - 2 e^{-1/m} + e^{-2 Phi(sqrt(delta)) / m}]`.
fn br_tau_direct(delta: f64, m: f64) -> f64 {
    m * (1.0 - 2.0 * (-1.0 / m).exp() + (-2.0 * phi(delta.sqrt()) / m).exp())
}

fn frechet_ks(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (-1.0 / x).exp();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn type7(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[lo] + (h - lo as f64) * (v[lo + 1] - v[lo])
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn unit() -> ExtremeSet {
    ExtremeSet::unit_ray()
}

fn mma1_model(n: usize) -> ModelConfig {
    ModelConfig::Mma {
        dims: vec![n, n],
        weights: WeightSpec::mma1(),
    }
}

// ---------------------------------------------------------------- criteria

fn c1_mma1_limit() -> Outcome {
    let lags = [[1, 0], [1, 1], [2, 0], [3, 0]];
    let expected = [0.4, 0.4, 0.2, 0.0];
    let mut worst: f64 = 0.0;
    for (h, e) in lags.iter().zip(expected) {
        let lib = mma_extremogram(&WeightSpec::mma1(), &Lag::from_ints(h), &unit(), &unit()).unwrap();
        let (ov, w) = overlap_and_total(&mma1_weights(), *h);
        worst = worst.max((lib - e).abs()).max((ov / w - e).abs());
    }
    outcome(worst <= 1e-12, format!("max |error| {worst:.1e} (tol 1e-12)"))
}

fn c2_mma1_pa() -> Outcome {
    let m = 1.0 / 0.03;
    let lags = [[1, 0], [2, 0], [3, 0]];
    let listed = [0.414475, 0.221671, 0.03];
    let mut lib_vs_direct: f64 = 0.0;
    let mut direct_vs_listed: f64 = 0.0;
    let mut values = Vec::new();
    for (h, l) in lags.iter().zip(listed) {
        let direct = mma_pa_direct(&mma1_weights(), *h, m);
        let lag = Lag::from_ints(h);
        let lib = mma1_pa_extremogram(&lag, m).unwrap().rho_pa;
        let general = mma_pa_extremogram(&WeightSpec::mma1(), &lag, m).unwrap().rho_pa;
        lib_vs_direct = lib_vs_direct.max((lib - direct).abs()).max((general - direct).abs());
        direct_vs_listed = direct_vs_listed.max((direct - l).abs());
        values.push(direct);
    }
    outcome(
        lib_vs_direct <= 1e-9 && direct_vs_listed <= 1e-9,
        format!(
            "library vs direct evaluation {lib_vs_direct:.1e}; direct values {:.9}/{:.9}/{:.9} vs listed \
             0.414475/0.221671/0.03 differ by up to {direct_vs_listed:.1e} (tol 1e-9)",
            values[0], values[1], values[2]
        ),
    )
}

fn c3_mma1_centering() -> Outcome {
    let m = 1.0 / 0.03;
    let config = EstimatorConfig::unit_sets(
        ThresholdRule::Quantile(0.97),
        Estimator::LatticeByDistance { max_dist: 2.0 },
    );
    let summary = mc_study(&mma1_model(40), &config, 1000, 3).unwrap();
    let reps = [(1.0, [1, 0]), (2f64.sqrt(), [1, 1]), (2.0, [2, 0])];
    let mut worst: f64 = 0.0;
    let mut at_one = f64::NAN;
    for (d, h) in reps {
        let row = summary.rows.iter().find(|r| (r.distance - d).abs() < 1e-9).unwrap();
        worst = worst.max((row.mean - mma_pa_direct(&mma1_weights(), h, m)).abs());
        if d == 1.0 {
            at_one = row.mean;
        }
    }
    let separation = (at_one - 0.4).abs();
    outcome(
        worst <= 0.02 && separation > 0.005 && summary.n_usable == 1000,
        format!("max |mean - PA| {worst:.4} (tol 0.02); |mean(1) - 0.4| = {separation:.4} (> 0.005)"),
    )
}

fn c4_geometric() -> Outcome {
    let phi_ = 0.5;
    let radius = WeightSpec::geometric_radius(phi_, None, 2);
    let weights = geometric_weights(phi_, radius);
    let mut worst: f64 = 0.0;
    for lag in lag_grid(5.0, 2) {
        let h = lag.as_ints().unwrap();
        let (ov, w) = overlap_and_total(&weights, [h[0], h[1]]);
        let lib = geometric_mma_extremogram(phi_, None, &lag).unwrap();
        worst = worst.max((lib - ov / w).abs());
    }
    let model = ModelConfig::Mma {
        dims: vec![40, 40],
        weights: WeightSpec::Geometric {
            phi: phi_,
            truncation_radius: None,
        },
    };
    let config = EstimatorConfig::unit_sets(
        ThresholdRule::Quantile(0.97),
        Estimator::LatticeByDistance { max_dist: 1.0 },
    );
    let summary = mc_study(&model, &config, 1000, 4).unwrap();
    let mean = summary.rows[0].mean;
    let pa = mma_pa_direct(&weights, [1, 0], 1.0 / 0.03);
    let gap = (mean - pa).abs();
    outcome(
        worst <= 1e-10 && gap <= 0.04,
        format!("class sum vs enumeration {worst:.1e} (tol 1e-10); |mean - PA| at 1 = {gap:.4} (tol 0.04)"),
    )
}

fn c5_br_marginals() -> Outcome {
    let mut sites = Vec::new();
    for x in -2i32..=2 {
        for y in -2i32..=2 {
            if x * x + y * y <= 4 {
                sites.push([x as f64, y as f64]);
            }
        }
    }
    let reps = 10_000usize.div_ceil(sites.len());
    let vario = VariogramSpec::new(0.5, 2.0).unwrap();
    let draw = |config: BrSimConfig, tag: &str| -> f64 {
        let mut values = Vec::with_capacity(reps * sites.len());
        for r in 0..reps {
            let s = sim_brown_resnick(&sites, &vario, &config, derive_seed(5, tag, r as u64)).unwrap();
            values.extend(s.values);
        }
        frechet_ks(&mut values)
    };
    let spectral = draw(BrSimConfig::spectral(1000), "spectral");
    let gauss = draw(BrSimConfig::gaussian_max(1600, 1.0, 2.0), "gaussian-max");
    outcome(
        spectral <= 0.05 && gauss <= 0.05,
        format!(
            "KS over {} site-draws: spectral {spectral:.4}, gaussian max {gauss:.4} (tol 0.05)",
            reps * sites.len()
        ),
    )
}

fn c6_br_pairs() -> Outcome {
    let m = 1.0 / 0.03;
    let theta = 0.5;
    let vario = VariogramSpec::new(theta, 2.0).unwrap();
    let n = 20usize;
    let reps = 500;
    // Per replicate: joint exceedance frequency over every site pair at the lag.
    let mut freq = [Vec::new(), Vec::new()];
    for r in 0..reps {
        let (field, _) =
            sim_brown_resnick_lattice(&[n, n], &vario, &BrSimConfig::exact(), derive_seed(6, "rep", r)).unwrap();
        let v = field.values();
        for (k, step) in [1usize, 2].into_iter().enumerate() {
            let (mut hits, mut pairs) = (0u64, 0u64);
            for x in 0..n {
                for y in 0..n {
                    for (dx, dy) in [(step, 0), (0, step)] {
                        if x + dx < n && y + dy < n {
                            pairs += 1;
                            if v[x * n + y] > m && v[(x + dx) * n + y + dy] > m {
                                hits += 1;
                            }
                        }
                    }
                }
            }
            freq[k].push(hits as f64 / pairs as f64);
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, d) in [1.0f64, 2.0].into_iter().enumerate() {
        let (mean, var) = mean_var(&freq[k]);
        let est = m * mean;
        let se = m * (var / reps as f64).sqrt();
        let tau = br_tau_direct(theta * d * d, m);
        let z = (est - tau) / se;
        pass &= z.abs() <= 3.0;
        parts.push(format!("|h|={d}: {est:.4} vs {tau:.4} ({z:+.2} SE)"));
    }
    outcome(pass, parts.join("; ") + " (tol 3 SE)")
}

fn kernel_vs_lattice_gap(lambda: f64, fields: &[LatticeField], lags: &[Lag]) -> f64 {
    let kernel = KernelSpec::new(KernelShape::Box, lambda).unwrap();
    let rule = ThresholdRule::Quantile(0.97);
    let mut total = 0.0;
    let mut count = 0.0;
    for f in fields {
        let lat = lattice_ese(f, &unit(), &unit(), rule, lags).unwrap();
        let pts = lattice_as_points(f).unwrap();
        let ker = kernel_ese(&pts, &unit(), &unit(), rule, &kernel, lags, NuMode::Plugin).unwrap();
        for (a, b) in lat.rows.iter().zip(&ker.rows) {
            total += (a.rho_hat - b.rho_hat).abs();
            count += 1.0;
        }
    }
    total / count
}

fn c7_kernel_vs_lattice() -> Outcome {
    let lags: Vec<Lag> = [[1, 0], [0, 1], [1, 1], [2, 0]].iter().map(|h| Lag::from_ints(h)).collect();
    let fields: Vec<LatticeField> = (0..200)
        .map(|r| sim_mma(&[40, 40], &WeightSpec::mma1(), derive_seed(7, "rep", r)).unwrap())
        .collect();
    let gap = kernel_vs_lattice_gap(0.3, &fields, &lags);
    // Bandwidth at which the box kernel weighs a coincident pair by exactly 1.
    let unit_weight = 2.0 / PI.sqrt();
    let diag = kernel_vs_lattice_gap(unit_weight, &fields, &lags);
    outcome(
        gap <= 0.05,
        format!(
            "mean |kernel - lattice| at bandwidth 0.3: {gap:.4} (tol 0.05); diagnostic at bandwidth {unit_weight:.4}: {diag:.4}"
        ),
    )
}

fn c8_bandwidth() -> Outcome {
    let n = 40.0f64;
    let region = Region::square(n).unwrap();
    let source = FieldSource::BrownResnick {
        vario: VariogramSpec::new(1.0, 2.0).unwrap(),
        config: BrSimConfig::gaussian_max(1600, 1.0, 2.0),
    };
    let distances = [0.5, 1.0, 1.5, 2.0];
    let narrow = KernelSpec::new(KernelShape::Box, 1.0 / n.ln()).unwrap();
    let wide = KernelSpec::new(KernelShape::Box, 5.0 / n.ln()).unwrap();
    let rule = ThresholdRule::Quantile(0.97);
    let (mut a, mut b) = (vec![Vec::new(); 4], vec![Vec::new(); 4]);
    let mut failed = 0;
    for r in 0..100 {
        let pf = sim_point_field(&region, &CountRule::Poisson { nu: 1.0 }, &source, derive_seed(8, "rep", r)).unwrap();
        let x = kernel_ese_isotropic(&pf, &unit(), &unit(), rule, &narrow, &distances, NuMode::Known(1.0));
        let y = kernel_ese_isotropic(&pf, &unit(), &unit(), rule, &wide, &distances, NuMode::Known(1.0));
        match (x, y) {
            (Ok(x), Ok(y)) => {
                for k in 0..4 {
                    a[k].push(x.rows[k].rho_hat);
                    b[k].push(y.rows[k].rho_hat);
                }
            }
            _ => failed += 1,
        }
    }
    let mut pass = failed == 0;
    let mut parts = Vec::new();
    for (k, d) in distances.iter().enumerate() {
        let va = mean_var(&a[k]).1;
        let vb = mean_var(&b[k]).1;
        pass &= va > vb;
        parts.push(format!("r={d}: {va:.4} vs {vb:.4}"));
    }
    outcome(pass, format!("var narrow vs wide: {}; failed replicates {failed}", parts.join(", ")))
}

fn c9_bands() -> Outcome {
    let config = EstimatorConfig::unit_sets(
        ThresholdRule::Quantile(0.97),
        Estimator::LatticeByDistance { max_dist: 5.0 },
    );
    let n_perm = 1000;
    let (mut outside, mut cells) = (0usize, 0usize);
    for r in 0..200 {
        let data = Data::Lattice(sim_frechet_iid(&[40, 40], derive_seed(9, "iid", r)).unwrap());
        let est = config.estimate(&data).unwrap();
        let bands = permutation_bands(&data, &config, n_perm, 0.95, derive_seed(9, "iid-bands", r)).unwrap();
        for row in &est.rows {
            cells += 1;
            if row.rho_hat < bands.lo || row.rho_hat > bands.hi {
                outside += 1;
            }
        }
    }
    let mut above = 0;
    let n_mma = 100;
    for r in 0..n_mma {
        let data = Data::Lattice(sim_mma(&[40, 40], &WeightSpec::mma1(), derive_seed(9, "mma", r)).unwrap());
        let est = config.estimate(&data).unwrap();
        let bands = permutation_bands(&data, &config, n_perm, 0.95, derive_seed(9, "mma-bands", r)).unwrap();
        let at_one = est.rows.iter().find(|row| (row.distance - 1.0).abs() < 1e-9).unwrap();
        if at_one.rho_hat > bands.hi {
            above += 1;
        }
    }
    let frac_out = outside as f64 / cells as f64;
    let frac_above = above as f64 / n_mma as f64;
    outcome(
        frac_out <= 0.10 && frac_above >= 0.90,
        format!("iid cells outside band {frac_out:.4} (tol 0.10); dependent fields above band {frac_above:.2} (>= 0.90)"),
    )
}

fn c10_rate() -> Outcome {
    let config = EstimatorConfig::unit_sets(
        ThresholdRule::Quantile(0.97),
        Estimator::LatticeByDistance { max_dist: 1.0 },
    );
    let check = clt_rate_check(&mma1_model(20), &config, &[20, 40, 80], 500, 1.0, 10).unwrap();
    let slope = check.slope.unwrap();
    outcome(
        (-1.35..=-0.65).contains(&slope),
        format!("log-log slope {slope:.3} (range [-1.35, -0.65])"),
    )
}

fn brute_lattice(field: &LatticeField, a: &ExtremeSet, b: &ExtremeSet, a_m: f64, h: &[i64]) -> (f64, u64, u64) {
    let dims = field.dims();
    let inside = |x: f64, set: &ExtremeSet| x > set.lower() * a_m && (set.upper().is_infinite() || x < set.upper() * a_m);
    let n: usize = dims.iter().product();
    let coords = |mut flat: usize| {
        let mut c = vec![0i64; dims.len()];
        for k in (0..dims.len()).rev() {
            c[k] = (flat % dims[k]) as i64;
            flat /= dims[k];
        }
        c
    };
    let v = field.values();
    let n_a = v.iter().filter(|&&x| inside(x, a)).count();
    let (mut hits, mut pairs) = (0u64, 0u64);
    for s in 0..n {
        for t in 0..n {
            let (cs, ct) = (coords(s), coords(t));
            if cs.iter().zip(&ct).zip(h).all(|((x, y), d)| x - y == *d) {
                pairs += 1;
                if inside(v[s], a) && inside(v[t], b) {
                    hits += 1;
                }
            }
        }
    }
    let rho = (hits as f64 / pairs as f64) / (n_a as f64 / n as f64);
    (rho, pairs, hits)
}

#[allow(clippy::too_many_arguments)]
fn brute_kernel(
    pf: &PointField,
    a: &ExtremeSet,
    b: &ExtremeSet,
    a_m: f64,
    m: f64,
    shape: KernelShape,
    lambda: f64,
    h: [f64; 2],
) -> f64 {
    let inside = |x: f64, set: &ExtremeSet| x > set.lower() * a_m && (set.upper().is_infinite() || x < set.upper() * a_m);
    let locs = pf.locations();
    let vals = pf.values();
    let area = pf.region().area();
    let nu = pf.len() as f64 / area;
    let weight = |v: [f64; 2]| {
        let (x, y) = (v[0] / lambda, v[1] / lambda);
        let r2 = x * x + y * y;
        if r2 > 0.25 {
            return 0.0;
        }
        let prof = match shape {
            KernelShape::Box => 4.0 / PI,
            KernelShape::Epanechnikov => 8.0 / PI * (1.0 - 4.0 * r2),
        };
        prof / (lambda * lambda)
    };
    let mut terms = Vec::new();
    for i in 0..locs.len() {
        for j in 0..locs.len() {
            if i == j || !(inside(vals[i], a) && inside(vals[j], b)) {
                continue;
            }
            let w = weight([h[0] + (locs[i][0] - locs[j][0]), h[1] + (locs[i][1] - locs[j][1])]);
            if w > 0.0 {
                terms.push(w);
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    let sum: f64 = terms.iter().sum();
    let tau = m / (nu * nu * area) * sum;
    let n_a = vals.iter().filter(|&&x| inside(x, a)).count();
    let p = m / (nu * area) * n_a as f64;
    tau / p
}

fn c11_exact_equality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    let mut checked = 0;
    let sets = [
        (unit(), unit()),
        (ExtremeSet::new(0.8, 3.0).unwrap(), ExtremeSet::ray(1.2).unwrap()),
    ];
    for dims in [vec![10, 10], vec![9], vec![7, 4], vec![4, 3, 5]] {
        for (a, b) in &sets {
            let n: usize = dims.iter().product();
            let values: Vec<f64> = (0..n).map(|_| 1.0 / -rng.random::<f64>().ln()).collect();
            let field = LatticeField::new(dims.clone(), values).unwrap();
            let q = 0.8;
            let a_m = type7(field.values(), q);
            let lags: Vec<Lag> = lag_grid(3.0, dims.len())
                .into_iter()
                .filter(|l| l.offset().iter().zip(&dims).all(|(v, &k)| v.abs() < k as f64))
                .collect();
            let est = lattice_ese(&field, a, b, ThresholdRule::Quantile(q), &lags).unwrap();
            mismatches += usize::from(est.threshold.a_m != a_m);
            for (row, lag) in est.rows.iter().zip(&lags) {
                let (rho, pairs, hits) = brute_lattice(&field, a, b, a_m, &lag.as_ints().unwrap());
                checked += 1;
                if row.rho_hat != rho || row.pair_count != pairs || row.exceed_count != hits {
                    mismatches += 1;
                }
            }
        }
    }
    for (npts, shape, lambda) in [(300, KernelShape::Box, 1.5), (200, KernelShape::Epanechnikov, 2.0), (120, KernelShape::Box, 0.7)] {
        let region = Region::new(0.0, 12.0, -3.0, 7.0).unwrap();
        let locs: Vec<[f64; 2]> = (0..npts)
            .map(|_| [rng.random::<f64>() * 12.0, rng.random::<f64>() * 10.0 - 3.0])
            .collect();
        let values: Vec<f64> = (0..npts).map(|_| 1.0 / -rng.random::<f64>().ln()).collect();
        let pf = PointField::new(locs, values, region, None).unwrap();
        let kernel = KernelSpec::new(shape, lambda).unwrap();
        let lags = vec![Lag::new(vec![0.0, 0.0]), Lag::new(vec![1.0, 0.0]), Lag::new(vec![-0.7, 1.3]), Lag::new(vec![2.5, 2.5])];
        let q = 0.85;
        let a_m = type7(pf.values(), q);
        for (a, b) in &sets {
            let est = kernel_ese(&pf, a, b, ThresholdRule::Quantile(q), &kernel, &lags, NuMode::Plugin).unwrap();
            let m = 1.0 / (1.0 - q);
            for (row, lag) in est.rows.iter().zip(&lags) {
                let h = [lag.offset()[0], lag.offset()[1]];
                checked += 1;
                if row.rho_hat != brute_kernel(&pf, a, b, a_m, m, shape, lambda, h) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} estimates compared bit for bit, {mismatches} mismatches"))
}

fn c12_pipeline() -> Outcome {
    // 60 time steps: six "years" of ten steps each, then the full span.
    let (n_times, side) = (60usize, 120usize);
    let mut text = String::with_capacity(n_times * side * side * 32);
    text.push_str("t,x,y,value\n");
    for t in 0..n_times {
        let slice = sim_mma(&[side, side], &WeightSpec::mma1(), derive_seed(12, "time", t as u64)).unwrap();
        for (flat, v) in slice.values().iter().enumerate() {
            text.push_str(&format!("{t},{},{},{v}\n", flat / side, flat % side));
        }
    }
    let grid = parse_spacetime(&text).unwrap();
    let blocked = spatial_block_max(&grid, 10).unwrap();
    let windows = parse_windows("equal:6,all", n_times).unwrap();
    let fields = temporal_max(&blocked, &windows).unwrap();
    let mut problems = Vec::new();
    if fields.len() != 7 || fields.iter().any(|f| f.dims() != [12, 12]) {
        problems.push("expected 7 fields of 12x12".to_string());
    }
    let mut tables = 0;
    for (k, f) in fields.into_iter().enumerate() {
        let data = Data::Lattice(f);
        for q in [0.70, 0.75, 0.80] {
            let config = EstimatorConfig::unit_sets(
                ThresholdRule::Quantile(q),
                Estimator::LatticeByDistance { max_dist: 5.0 },
            );
            let est = match config.estimate(&data) {
                Ok(e) => e,
                Err(e) => {
                    problems.push(format!("window {k} q={q}: {e}"));
                    continue;
                }
            };
            let bands = permutation_bands(&data, &config, 1000, 0.95, derive_seed(12, "bands", k as u64)).unwrap();
            let csv = render_ese_csv(&est, Some(&bands));
            let mut lines = csv.lines();
            if lines.next() != Some(ESE_COLUMNS) {
                problems.push(format!("window {k}: wrong header"));
            }
            for line in lines {
                let cols: Vec<&str> = line.split(',').collect();
                let numeric_ok = cols.len() == 8
                    && [2, 3, 6, 7].iter().all(|&c| {
                        let mantissa = cols[c].split('e').next().unwrap_or("");
                        cols[c].parse::<f64>().map_or(false, f64::is_finite)
                            && mantissa.trim_start_matches('-').len() == 18
                    });
                if !numeric_ok {
                    problems.push(format!("window {k}: bad row {line}"));
                }
            }
            if est.rows.is_empty() || est.rows.iter().any(|r| !(r.rho_hat.is_finite() && r.rho_hat >= 0.0)) {
                problems.push(format!("window {k}: invalid estimate"));
            }
            tables += 1;
        }
    }
    outcome(
        problems.is_empty(),
        format!("{tables} estimate+band tables written; problems: {}", if problems.is_empty() { "none".into() } else { problems.join("; ") }),
    )
}

fn main() {
    let criteria: [(usize, &str, u64, fn() -> Outcome); 12] = [
        (1, "MMA(1) limit extremogram", 1, c1_mma1_limit),
        (2, "MMA(1) pre-asymptotic values", 1, c2_mma1_pa),
        (3, "MMA(1) Monte Carlo centering", 120, c3_mma1_centering),
        (4, "geometric MMA class sums and centering", 180, c4_geometric),
        (5, "Brown-Resnick Frechet margins", 120, c5_br_marginals),
        (6, "Brown-Resnick joint exceedances", 300, c6_br_pairs),
        (7, "kernel vs lattice on grid points", 180, c7_kernel_vs_lattice),
        (8, "bandwidth variance trade-off", 600, c8_bandwidth),
        (9, "permutation band calibration and power", 600, c9_bands),
        (10, "variance rate in sample size", 600, c10_rate),
        (11, "bitwise agreement with brute force", 10, c11_exact_equality),
        (12, "ingest to bands pipeline", 60, c12_pipeline),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = out.pass && in_time;
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s of {limit}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
