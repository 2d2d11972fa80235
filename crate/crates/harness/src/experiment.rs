//! Batch runs over `(d, mechanism)` cells and the trend comparison against
//! the reference curves.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use knorm_core::bounds::{gvol_lb, theory_curves};
use knorm_core::geometry::{
    default_covariance_samples, estimate_covariance, SamplerChoice, UniformSampler,
    VOLUME_DIM_CAP,
};
use knorm_core::mechanisms::{build_mechanism, MechanismOptions, NimOptions};
use knorm_core::query::{evaluate, random_bernoulli_query};
use knorm_core::{Database, Error, MechanismKind, PolytopeHandle, QueryMatrix, Result, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Stream ids below this are cell streams; query and bound streams sit above.
const QUERY_STREAM_BASE: u64 = 1 << 32;
const BOUND_STREAM_BASE: u64 = 2 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub mechanism: MechanismKind,
    pub seed: u64,
    pub trials: u64,
    pub mean_error: f64,
    /// Standard error of `mean_error`.
    pub std_error: f64,
    pub vol_lb: f64,
    pub gvol_lb: f64,
    pub knorm_ref: f64,
    pub laplace_ref: f64,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
    /// Excluded from the CSV so that reruns are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Bounds {
    vol_lb: f64,
    gvol_lb: f64,
}

fn cell_bounds(query: &QueryMatrix, cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<Bounds> {
    let d = query.rows();
    if d > VOLUME_DIM_CAP {
        return Ok(Bounds {
            vol_lb: f64::NAN,
            gvol_lb: f64::NAN,
        });
    }
    let handle = PolytopeHandle::new(query.clone());
    let mut sampler = UniformSampler::new(&handle, SamplerChoice::Rejection, None)?;
    let count = cfg.covariance_samples.unwrap_or_else(|| default_covariance_samples(d));
    let cov = estimate_covariance(&handle, count, &mut sampler, rng)?;
    let report = gvol_lb(query, cfg.eps, &cov, rng, cfg.volume_trials)?;
    Ok(Bounds {
        vol_lb: report.vol_lb,
        gvol_lb: report.gvol_lb,
    })
}

fn load_database(cfg: &ExperimentConfig) -> Result<Database> {
    match &cfg.database {
        None => Ok(Database::zeros(cfg.n)),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let x = Database::parse_text(&text)?;
            if x.len() != cfg.n {
                return Err(Error::DimensionMismatch {
                    expected: cfg.n,
                    got: x.len(),
                });
            }
            Ok(x)
        }
    }
}

fn mechanism_options(cfg: &ExperimentConfig) -> MechanismOptions {
    MechanismOptions {
        delta: (cfg.delta > 0.0).then_some(cfg.delta),
        sampler: Some(cfg.sampler),
        walk: cfg.walk,
        mcmc_steps: cfg.mcmc_steps,
        nim: NimOptions {
            covariance_samples: cfg.covariance_samples,
            sampler: cfg.sampler,
            walk: cfg.walk,
        },
    }
}

fn run_cell(
    query: Arc<QueryMatrix>,
    kind: MechanismKind,
    x: &Database,
    cfg: &ExperimentConfig,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    let truth = evaluate(&query, x)?;
    let mut mech = build_mechanism(kind, query, cfg.eps, &mechanism_options(cfg), rng)?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..cfg.trials {
        let a = mech.release(x, rng)?.answer;
        let e = a
            .iter()
            .zip(&truth)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        sum += e;
        sum_sq += e * e;
    }
    let t = cfg.trials as f64;
    let mean = sum / t;
    let var = if cfg.trials > 1 {
        ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, (var / t).sqrt()))
}

/// Runs every `(d, mechanism)` cell of the config.
///
/// For each `d` a fresh Bernoulli query is drawn from stream `(seed, 2^32 + i)`;
/// cell `c` (in config order) runs on stream `(seed, c)`. Cells run in
/// parallel and are returned in config order. A failing cell is recorded
/// in its row's `status` and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let x = load_database(cfg)?;
    let queries: Vec<Arc<QueryMatrix>> = cfg
        .dims
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut rng = RngStream::new(cfg.seed, QUERY_STREAM_BASE + i as u64);
            random_bernoulli_query(d, cfg.n, &mut rng).map(Arc::new)
        })
        .collect::<Result<_>>()?;
    let bounds: Vec<std::result::Result<Bounds, String>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut rng = RngStream::new(cfg.seed, BOUND_STREAM_BASE + i as u64);
            cell_bounds(q, cfg, &mut rng).map_err(|e| e.to_string())
        })
        .collect();
    let cells: Vec<(usize, MechanismKind)> = (0..cfg.dims.len())
        .flat_map(|i| cfg.mechanisms.iter().map(move |&m| (i, m)))
        .collect();
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(c, &(i, kind))| {
            let d = cfg.dims[i];
            let start = Instant::now();
            let mut rng = RngStream::new(cfg.seed, c as u64);
            let outcome = run_cell(queries[i].clone(), kind, &x, cfg, &mut rng);
            let curves = theory_curves(d, cfg.n, cfg.eps, None).ok();
            let (vol, gvol, bound_status) = match &bounds[i] {
                Ok(b) => (b.vol_lb, b.gvol_lb, None),
                Err(e) => (f64::NAN, f64::NAN, Some(format!("bounds: {e}"))),
            };
            let (mean_error, std_error, status) = match outcome {
                Ok((m, s)) => (m, s, bound_status.unwrap_or_else(|| "ok".into())),
                Err(e) => (f64::NAN, f64::NAN, e.to_string()),
            };
            ResultRow {
                d,
                n: cfg.n,
                eps: cfg.eps,
                mechanism: kind,
                seed: cfg.seed,
                trials: cfg.trials,
                mean_error,
                std_error,
                vol_lb: vol,
                gvol_lb: gvol,
                knorm_ref: curves.map_or(f64::NAN, |c| c.knorm_ref),
                laplace_ref: curves.map_or(f64::NAN, |c| c.laplace_ref),
                status,
                wall_time_s: Some(start.elapsed().as_secs_f64()),
            }
        })
        .collect();
    Ok(rows)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// CSV text of the rows, without wall times.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        let mut row = row.clone();
        row.wall_time_s = None;
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes the CSV to `cfg.output` and the JSON mirror beside it.
pub fn write_results(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    let csv_text = rows_to_csv(rows)?;
    fs::write(&cfg.output, csv_text).map_err(|e| io_error(&cfg.output, e))?;
    let json_path = cfg.json_output();
    let json = serde_json::to_string_pretty(rows).map_err(|e| io_error(&json_path, e))?;
    fs::write(&json_path, json).map_err(|e| io_error(&json_path, e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismTrend {
    pub mechanism: MechanismKind,
    pub dims: Vec<usize>,
    pub ratio_to_knorm_ref: Vec<f64>,
    pub ratio_to_laplace_ref: Vec<f64>,
    /// `max / min` of `ratio_to_knorm_ref`.
    pub knorm_ref_spread: f64,
    pub laplace_ref_spread: f64,
    /// `ratio_to_knorm_ref` strictly increasing in `d`.
    pub grows_against_knorm_ref: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub trends: Vec<MechanismTrend>,
    pub knorm_flat: Option<bool>,
    pub laplace_grows: Option<bool>,
    pub pass: bool,
}

pub const KNORM_SPREAD_LIMIT: f64 = 2.5;

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Normalizes mean errors by the reference curves, per mechanism.
///
/// Passes when the K-norm ratio to `knorm_ref` has spread at most 2.5 and
/// the Laplace ratio to `knorm_ref` increases with `d`.
pub fn compare_to_theory(rows: &[ResultRow]) -> Result<TrendReport> {
    let mut by_mech: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mean_error.is_finite()) {
        by_mech.entry(r.mechanism.name()).or_default().push(r);
    }
    let mut trends = Vec::new();
    for group in by_mech.values() {
        let mut group = group.clone();
        group.sort_by_key(|r| r.d);
        let dims: Vec<usize> = group.iter().map(|r| r.d).collect();
        let mut distinct = dims.clone();
        distinct.dedup();
        if distinct.len() != dims.len() || dims.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "need one row per d and at least 3 values of d for {}",
                group[0].mechanism
            )));
        }
        let to_k: Vec<f64> = group.iter().map(|r| r.mean_error / r.knorm_ref).collect();
        let to_l: Vec<f64> = group.iter().map(|r| r.mean_error / r.laplace_ref).collect();
        trends.push(MechanismTrend {
            mechanism: group[0].mechanism,
            dims,
            knorm_ref_spread: spread(&to_k),
            laplace_ref_spread: spread(&to_l),
            grows_against_knorm_ref: to_k.windows(2).all(|w| w[1] > w[0]),
            ratio_to_knorm_ref: to_k,
            ratio_to_laplace_ref: to_l,
        });
    }
    if trends.is_empty() {
        return Err(Error::InvalidParameter("no finite rows to compare".into()));
    }
    let find = |k: MechanismKind| trends.iter().find(|t| t.mechanism == k);
    let knorm = find(MechanismKind::KNorm).or_else(|| find(MechanismKind::KNormMcmc));
    let knorm_flat = knorm.map(|t| t.knorm_ref_spread <= KNORM_SPREAD_LIMIT);
    let laplace_grows = find(MechanismKind::Laplace).map(|t| t.grows_against_knorm_ref);
    let pass = knorm_flat.unwrap_or(true) && laplace_grows.unwrap_or(true)
        && (knorm_flat.is_some() || laplace_grows.is_some());
    Ok(TrendReport {
        trends,
        knorm_flat,
        laplace_grows,
        pass,
    })
}
