use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use knorm_core::auditor::{lp_optimal_error, ratio_audit, transitivity_check, AuditConfig, TinyInstance, Verdict};
use knorm_core::bounds::{gvol_lb, DEFAULT_VOLUME_TRIALS};
use knorm_core::geometry::{
    default_covariance_samples, estimate_covariance, GridWalk, SamplerChoice, UniformSampler,
    WalkSettings,
};
use knorm_core::mechanisms::{build_mechanism, MechanismOptions};
use knorm_core::query::{hypercube_query, random_bernoulli_query};
use knorm_core::{Database, Error, MechanismKind, NeighborPair, PolytopeHandle, QueryMatrix, RngStream};
use knorm_harness::{compare_to_theory, run_experiment, write_results, ExperimentConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "knorm", version, about = "Private linear query release with K-norm noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Random,
    Hypercube,
}

#[derive(Subcommand)]
enum Command {
    /// Write a query matrix file.
    Gen {
        #[arg(long, value_enum, default_value = "random")]
        kind: QueryKind,
        #[arg(short)]
        d: usize,
        /// Column count (random matrices only).
        #[arg(short, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config and write CSV plus a JSON mirror.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        database: Option<PathBuf>,
    },
    /// Volume lower bounds for a query matrix, as JSON.
    Bounds {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_VOLUME_TRIALS)]
        trials: u64,
        #[arg(long)]
        covariance_samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram density-ratio audit of a mechanism, as JSON.
    Audit {
        #[arg(long)]
        mechanism: MechanismKind,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Privacy level to test against; defaults to `eps`.
        #[arg(long)]
        claimed_eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Audit databases at l1 distance `k` instead of neighbors.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0.25)]
        bin_width: f64,
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
        #[arg(long, default_value_t = 200)]
        min_count: u64,
        #[arg(long, default_value = "rejection")]
        sampler: SamplerChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal worst-case error on a tiny instance file (JSON), as JSON.
    Lp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a grid-walk trace as CSV (debugging aid).
    #[command(hide = true)]
    Trace {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidDimensions(_)
            | Error::InvalidParameter(_)
            | Error::EntryOutOfRange { .. }
            | Error::CapacityExceeded(_)
            | Error::Parse(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    match out {
        Some(path) => write(path, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn load_matrix(path: &Path) -> Result<QueryMatrix, Failure> {
    Ok(QueryMatrix::parse_text(&read(path)?)?)
}

fn execute(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Gen { kind, d, n, seed, out } => {
            let f = match kind {
                QueryKind::Random => random_bernoulli_query(d, n, &mut RngStream::new(seed, 0))?,
                QueryKind::Hypercube => hypercube_query(d)?,
            };
            write(&out, &f.to_text())?;
        }
        Command::Run { config, seed, database } => {
            let mut cfg = ExperimentConfig::parse(&read(&config)?)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if database.is_some() {
                cfg.database = database;
            }
            let rows = run_experiment(&cfg)?;
            write_results(&cfg, &rows)?;
            for r in &rows {
                eprintln!(
                    "d={:<3} {:<11} mean_error={:.4} (+-{:.4}) vol_lb={:.4} gvol_lb={:.4} {}",
                    r.d, r.mechanism, r.mean_error, r.std_error, r.vol_lb, r.gvol_lb, r.status
                );
            }
            if let Ok(trend) = compare_to_theory(&rows) {
                eprintln!("trend: {}", if trend.pass { "PASS" } else { "FAIL" });
            }
            if rows.iter().any(|r| r.status != "ok") {
                return Err(Failure::Runtime("some cells failed; see the status column".into()));
            }
        }
        Command::Bounds {
            matrix,
            eps,
            seed,
            trials,
            covariance_samples,
            out,
        } => {
            let f = load_matrix(&matrix)?;
            let handle = PolytopeHandle::new(f.clone());
            let mut rng = RngStream::new(seed, 0);
            let mut sampler = UniformSampler::new(&handle, SamplerChoice::Rejection, None)?;
            let count = covariance_samples.unwrap_or_else(|| default_covariance_samples(f.rows()));
            let cov = estimate_covariance(&handle, count, &mut sampler, &mut rng)?;
            let report = gvol_lb(&f, eps, &cov, &mut rng, trials)?;
            emit(&report, out.as_deref())?;
        }
        Command::Audit {
            mechanism,
            matrix,
            eps,
            claimed_eps,
            delta,
            k,
            trials,
            bin_width,
            tolerance,
            min_count,
            sampler,
            seed,
            out,
        } => {
            let f = Arc::new(load_matrix(&matrix)?);
            let n = f.cols();
            let cfg = AuditConfig {
                bin_width,
                trials,
                tolerance,
                min_count,
            };
            let mut rng = RngStream::new(seed, 0);
            let opts = MechanismOptions {
                delta,
                sampler: Some(sampler),
                ..MechanismOptions::default()
            };
            let mut mech = build_mechanism(mechanism, f, eps, &opts, &mut rng)?;
            let claimed = claimed_eps.unwrap_or(eps);
            let x = Database::zeros(n);
            let mut far = Database::zeros(n);
            far.0[0] = k;
            let report = if k == 1.0 {
                let pair = NeighborPair::new(x, far)?;
                ratio_audit(mech.as_mut(), &pair, claimed, &cfg, &mut rng)?
            } else {
                transitivity_check(mech.as_mut(), &x, &far, k, claimed, &cfg, &mut rng)?
            };
            emit(&report, out.as_deref())?;
            return Ok(report.verdict != Verdict::Fail);
        }
        Command::Lp { instance, eps, out } => {
            let inst: TinyInstance = serde_json::from_str(&read(&instance)?)
                .map_err(|e| Failure::Validation(format!("{}: {e}", instance.display())))?;
            emit(&lp_optimal_error(&inst, eps)?, out.as_deref())?;
        }
        Command::Trace {
            matrix,
            beta,
            steps,
            seed,
            out,
        } => {
            let f = load_matrix(&matrix)?;
            let handle = PolytopeHandle::new(f);
            let settings = WalkSettings {
                beta,
                steps: Some(steps),
                burn_in: Some(0),
            };
            let mut walk = GridWalk::new(&handle, settings.resolve(handle.dim()))?;
            walk.enable_trace(steps as usize);
            walk.draw(&mut RngStream::new(seed, 0))?;
            write(&out, &walk.trace_csv())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
