//! Command-line front end: simulate fields, estimate extremograms, compute
//! permutation bands and closed-form oracles, run Monte Carlo studies and
//! ingest space-time data.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 degenerate estimate. Failures print one JSON object on stderr.

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use args::{EstimatorArgs, ModelArgs};
use extremogram::inference::{DEFAULT_LEVEL, DEFAULT_PERMUTATIONS};
use extremogram::io::{
    parse_lags, parse_set, parse_windows, read_field_file, read_spacetime_file, render_ese_csv, render_field,
    render_mc_csv, render_oracle_csv, render_rate_csv, spatial_block_max, temporal_max, write_field_file, LagsArg,
    Meta, OracleRow, RunConfig,
};
use extremogram::oracles::{br_extremogram, br_pa_extremogram, mma_extremogram, mma_pa_extremogram};
use extremogram::simulate::{BrMethod, FieldSource};
use extremogram::{
    clt_rate_check, lag_grid, mc_study, permutation_bands, Data, Error, EstimatorConfig, ExtremeSet, Lag, ModelConfig,
    Result,
};

#[derive(Debug, Parser)]
#[command(name = "extremogram", version, about = "Empirical spatial extremogram toolkit")]
struct Cli {
    /// Worker threads for mc, bands and rate-check (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one field and write it as a field file.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the extremogram of a field file.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Results CSV; a JSON sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate plus permutation bands under spatial independence.
    Bands {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form extremogram values for a model.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Max distance, distances, or vectors like 1:0;1:1.
        #[arg(long, default_value = "3")]
        lags: String,
        /// Threshold parameter for pre-asymptotic values.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value = "1,inf")]
        set_a: String,
        #[arg(long, default_value = "1,inf")]
        set_b: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study of an estimator under a model.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance of the estimate against sample size.
    RateCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Grid sides (or square sides for point fields).
        #[arg(long, default_value = "20,40,80")]
        sizes: String,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        reference_distance: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block maxima of a space-time CSV, one field file per time window.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        block: usize,
        /// a..b, all, equal:K (comma separated).
        #[arg(long, default_value = "all")]
        windows: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "window")]
        prefix: String,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegenerateThreshold { .. } | Error::DegenerateDenominator => 3,
        Error::Parse { .. }
        | Error::Io(_)
        | Error::EmptyInput
        | Error::EmptyField(_)
        | Error::LagOutOfRange { .. }
        | Error::FactorizationFailure(_) => 2,
        _ => 1,
    }
}

fn fail(code: &str, message: String, exit: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": code, "message": message, "exit_code": exit }));
    ExitCode::from(exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 1),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail("usage", "--threads must be positive".into(), 1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("usage", e.to_string(), 1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code(), e.to_string(), exit_code(&e)),
    }
}

/// Writes `csv` to `out` (stdout if absent) and the sidecar next to it.
fn emit(out: Option<&Path>, csv: &str, config: &RunConfig, result: serde_json::Value) -> Result<()> {
    match out {
        None => print!("{csv}"),
        Some(path) => {
            std::fs::write(path, csv)?;
            let sidecar = json!({ "config": config, "result": result });
            let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
            std::fs::write(path.with_extension("json"), text + "\n")?;
        }
    }
    Ok(())
}

fn path_string(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result serializes")
}

fn build_for_data(est: &EstimatorArgs, data: &Data) -> Result<EstimatorConfig> {
    match data {
        Data::Lattice(f) => est.build(f.dim(), Some(f.dims())),
        Data::Points(_) => est.build(2, None),
    }
}

fn build_for_model(est: &EstimatorArgs, model: &ModelConfig) -> Result<EstimatorConfig> {
    match model {
        ModelConfig::FrechetIid { dims }
        | ModelConfig::Mma { dims, .. }
        | ModelConfig::BrownResnickLattice { dims, .. }
        | ModelConfig::Constant { dims, .. } => est.build(dims.len(), Some(dims)),
        ModelConfig::PointField { .. } => est.build(2, None),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { model, seed, out } => {
            let model = model.build()?;
            let data = model.simulate(seed)?;
            let mut meta = Meta::new();
            meta.insert("model".into(), to_json(&model));
            meta.insert("seed".into(), seed.into());
            match out {
                Some(path) => write_field_file(&path, &data, &meta),
                None => {
                    print!("{}", render_field(&data, &meta));
                    Ok(())
                }
            }
        }
        Command::Estimate { input, est, out } => {
            let (data, _) = read_field_file(&input)?;
            let config = build_for_data(&est, &data)?;
            let result = config.estimate(&data)?;
            let run = RunConfig {
                command: "estimate".into(),
                estimator: Some(config),
                input: path_string(&input),
                output: out.as_deref().and_then(path_string),
                ..Default::default()
            };
            emit(out.as_deref(), &render_ese_csv(&result, None), &run, to_json(&result))
        }
        Command::Bands {
            input,
            est,
            permutations,
            level,
            seed,
            out,
        } => {
            let (data, _) = read_field_file(&input)?;
            let config = build_for_data(&est, &data)?;
            let result = config.estimate(&data)?;
            let bands = permutation_bands(&data, &config, permutations, level, seed)?;
            let run = RunConfig {
                command: "bands".into(),
                estimator: Some(config),
                input: path_string(&input),
                output: out.as_deref().and_then(path_string),
                seed: Some(seed),
                permutations: Some(permutations),
                level: Some(level),
                ..Default::default()
            };
            let csv = render_ese_csv(&result, Some(&bands));
            emit(out.as_deref(), &csv, &run, json!({ "estimate": result, "bands": bands }))
        }
        Command::Oracle {
            model,
            lags,
            m,
            set_a,
            set_b,
            out,
        } => {
            let model = model.build()?;
            let (a, b) = (parse_set(&set_a)?, parse_set(&set_b)?);
            let rows = oracle_rows(&model, &parse_lags(&lags)?, &a, &b, m)?;
            let run = RunConfig {
                command: "oracle".into(),
                model: Some(model),
                output: out.as_deref().and_then(path_string),
                m,
                ..Default::default()
            };
            emit(out.as_deref(), &render_oracle_csv(&rows), &run, to_json(&rows))
        }
        Command::Mc {
            model,
            est,
            reps,
            seed,
            out,
        } => {
            let model = model.build()?;
            let config = build_for_model(&est, &model)?;
            let summary = mc_study(&model, &config, reps, seed)?;
            let run = RunConfig {
                command: "mc".into(),
                model: Some(model),
                estimator: Some(config),
                output: out.as_deref().and_then(path_string),
                seed: Some(seed),
                reps: Some(reps),
                ..Default::default()
            };
            emit(out.as_deref(), &render_mc_csv(&summary), &run, to_json(&summary))
        }
        Command::RateCheck {
            model,
            est,
            sizes,
            reps,
            reference_distance,
            seed,
            out,
        } => {
            let model = model.build()?;
            let config = build_for_model(&est, &model)?;
            let sizes = sizes
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidParameter(format!("bad size {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let check = clt_rate_check(&model, &config, &sizes, reps, reference_distance, seed)?;
            let run = RunConfig {
                command: "rate-check".into(),
                model: Some(model),
                estimator: Some(config),
                output: out.as_deref().and_then(path_string),
                seed: Some(seed),
                reps: Some(reps),
                sizes: Some(sizes),
                ..Default::default()
            };
            emit(out.as_deref(), &render_rate_csv(&check), &run, to_json(&check))
        }
        Command::Ingest {
            input,
            block,
            windows,
            out_dir,
            prefix,
        } => {
            let grid = read_spacetime_file(&input)?;
            let blocked = spatial_block_max(&grid, block)?;
            let windows = parse_windows(&windows, grid.n_times())?;
            let fields = temporal_max(&blocked, &windows)?;
            std::fs::create_dir_all(&out_dir)?;
            for (k, (field, w)) in fields.into_iter().zip(&windows).enumerate() {
                let mut meta = Meta::new();
                meta.insert("source".into(), input.display().to_string().into());
                meta.insert("block".into(), block.into());
                meta.insert("window".into(), json!([w.start, w.end]));
                if let Some(labels) = grid.time_labels() {
                    meta.insert("time_labels".into(), json!([labels[w.start], labels[w.end - 1]]));
                }
                let path = out_dir.join(format!("{prefix}_{k}.csv"));
                write_field_file(&path, &Data::Lattice(field), &meta)?;
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

/// Nonnegative integer lag whose norm is within 0.05 of `r`, preferring the
/// one with the largest leading component (so 1.41 -> (1, 1), 5 -> (5, 0)).
fn snap_to_lattice(r: f64, d: usize) -> Result<Lag> {
    if r < 0.05 {
        return Ok(Lag::from_ints(&vec![0; d]));
    }
    lag_grid(r + 0.05, d)
        .into_iter()
        .filter(|h| (h.norm() - r).abs() <= 0.05 && h.offset().iter().all(|&v| v >= 0.0))
        .min_by(|x, y| {
            let dx = (x.norm() - r).abs();
            let dy = (y.norm() - r).abs();
            dx.total_cmp(&dy).then_with(|| y.offset().partial_cmp(x.offset()).expect("finite"))
        })
        .ok_or_else(|| Error::DomainError(format!("no lattice lag has norm within 0.05 of {r}")))
}

fn oracle_rows(model: &ModelConfig, lags: &LagsArg, a: &ExtremeSet, b: &ExtremeSet, m: Option<f64>) -> Result<Vec<OracleRow>> {
    let d = model.dimension();
    let lattice = !matches!(model, ModelConfig::PointField { .. });
    let lag_list: Vec<Lag> = match lags {
        LagsArg::Vectors(v) => v.clone(),
        LagsArg::Distances(ds) if lattice => ds.iter().map(|&r| snap_to_lattice(r, d)).collect::<Result<_>>()?,
        LagsArg::Distances(ds) => ds.iter().map(|&r| Lag::new(vec![r, 0.0])).collect(),
        LagsArg::MaxDist(r) if lattice => {
            // One representative per distinct norm.
            let mut out: Vec<Lag> = vec![Lag::from_ints(&vec![0; d])];
            for h in lag_grid(*r, d) {
                if out.last().map_or(true, |l| (l.norm() - h.norm()).abs() > 1e-9) {
                    out.push(snap_to_lattice(h.norm(), d)?);
                }
            }
            out
        }
        LagsArg::MaxDist(r) => (0..=(2.0 * r + 1e-9).floor() as usize)
            .map(|k| Lag::new(vec![k as f64 * 0.5, 0.0]))
            .collect(),
    };
    lag_list
        .into_iter()
        .map(|h| {
            let (rho, rho_pa) = match model {
                ModelConfig::Mma { weights, .. } => {
                    let rho = mma_extremogram(weights, &h, a, b)?;
                    let pa = m.map(|m| mma_pa_extremogram(weights, &h, m).map(|p| p.rho_pa)).transpose()?;
                    (rho, pa)
                }
                ModelConfig::BrownResnickLattice { vario, .. }
                | ModelConfig::PointField {
                    source: FieldSource::BrownResnick { vario, .. },
                    ..
                } => {
                    let vario = match model {
                        ModelConfig::PointField {
                            source: FieldSource::BrownResnick { config, .. },
                            ..
                        } => match config.method {
                            BrMethod::GaussianMax { base_corr, .. } => base_corr.limit_variogram(),
                            _ => *vario,
                        },
                        _ => *vario,
                    };
                    let rho = br_extremogram(&h, &vario, a.lower(), b.lower())?;
                    let pa = m
                        .map(|m| br_pa_extremogram(&h, &vario, a.lower(), b.lower(), m).map(|p| p.rho_pa))
                        .transpose()?;
                    (rho, pa)
                }
                ModelConfig::FrechetIid { .. }
                | ModelConfig::PointField {
                    source: FieldSource::FrechetIid,
                    ..
                } => {
                    if !(a.upper().is_infinite() && b.upper().is_infinite()) {
                        return Err(Error::UnsupportedSets);
                    }
                    if h.norm() == 0.0 {
                        let top = a.lower().max(b.lower());
                        let rho = (a.lower() / b.lower()).min(1.0);
                        let pa = m.map(|m| (-1.0 / (m * top)).exp_m1() / (-1.0 / (m * a.lower())).exp_m1());
                        (rho, pa)
                    } else {
                        (0.0, m.map(|m| -(-1.0 / (m * b.lower())).exp_m1()))
                    }
                }
                ModelConfig::Constant { .. } => {
                    return Err(Error::DomainError("the constant model has no extremogram".into()))
                }
            };
            Ok(OracleRow {
                distance: h.norm(),
                lag: Some(h),
                rho,
                rho_pa,
            })
        })
        .collect()
}
