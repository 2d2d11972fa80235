//! Empirical privacy and optimality checks: histogram density-ratio audits,
//! packings inside scaled bodies, and exact optimal mechanisms on tiny instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::vol_lb;
use crate::error::{Error, Result};
use crate::geometry::{GaugeOracle, PolytopeHandle, RejectionSampler};
use crate::lp::{LinearProgram, Relation};
use crate::mechanisms::Mechanism;
use crate::query::{Database, NeighborPair};
use crate::rng::RngStream;

/// Normal quantile used for the Wilson guard.
const WILSON_Z: f64 = 3.0;

/// Largest `exp(eps dist)` kept as an LP coefficient; larger factors make the
/// ratio constraint vacuous to within `1e-9` and are dropped.
const LP_RATIO_CAP: f64 = 1e9;

pub const DEFAULT_LP_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub bin_width: f64,
    pub trials: u64,
    pub tolerance: f64,
    pub min_count: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.25,
            trials: 1_000_000,
            tolerance: 0.15,
            min_count: 200,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0 && self.tolerance > 0.0 && self.trials > 0 && self.min_count > 0) {
            return Err(Error::InvalidParameter(
                "audit bin width, tolerance, trials and minimum count must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mechanism: String,
    pub eps: f64,
    pub worst_ratio: f64,
    pub bound: f64,
    pub verdict: Verdict,
    pub bins_tested: usize,
    /// Left edge of the bin with the worst ratio.
    #[serde(skip)]
    pub worst_bin: Option<f64>,
}

fn wilson(count: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), centre + half)
}

fn first_coordinates(
    mech: &mut dyn Mechanism,
    x: &Database,
    trials: u64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    (0..trials).map(|_| Ok(mech.release(x, rng)?.answer[0])).collect()
}

/// Compares first-coordinate histograms of `mech(x)` and `mech(y)` against
/// `exp(exponent) (1 + tolerance)`.
///
/// A bin is tested when either count reaches `min_count`. It fails only when
/// the ratio of the pessimistic Wilson bounds (numerator low, denominator
/// high) still exceeds the bound, so sampling noise alone does not fail.
fn histogram_audit(
    mech: &mut dyn Mechanism,
    x: &Database,
    y: &Database,
    eps: f64,
    exponent: f64,
    cfg: &AuditConfig,
    rng: &mut RngStream,
) -> Result<AuditReport> {
    cfg.validate()?;
    let ax = first_coordinates(mech, x, cfg.trials, rng)?;
    let ay = first_coordinates(mech, y, cfg.trials, rng)?;
    let mut bins: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for v in ax {
        bins.entry((v / cfg.bin_width).floor() as i64).or_default().0 += 1;
    }
    for v in ay {
        bins.entry((v / cfg.bin_width).floor() as i64).or_default().1 += 1;
    }
    let bound = exponent.exp() * (1.0 + cfg.tolerance);
    let n = cfg.trials;
    let mut worst_ratio = 0.0f64;
    let mut worst_bin = None;
    let mut bins_tested = 0;
    let mut failed = false;
    for (&b, &(cx, cy)) in &bins {
        if cx.max(cy) < cfg.min_count {
            continue;
        }
        bins_tested += 1;
        let (hi, lo) = if cx >= cy { (cx, cy) } else { (cy, cx) };
        let ratio = if lo == 0 { f64::INFINITY } else { hi as f64 / lo as f64 };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_bin = Some(b as f64 * cfg.bin_width);
        }
        let (hi_low, _) = wilson(hi, n);
        let (_, lo_high) = wilson(lo, n);
        if hi_low > bound * lo_high {
            failed = true;
        }
    }
    let verdict = if bins_tested == 0 {
        Verdict::Inconclusive
    } else if failed {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(AuditReport {
        mechanism: mech.kind().name().to_string(),
        eps,
        worst_ratio,
        bound,
        verdict,
        bins_tested,
        worst_bin,
    })
}

/// Audits `mech` on a neighboring pair against the claimed `eps`.
pub fn ratio_audit(
    mech: &mut dyn Mechanism,
    pair: &NeighborPair,
    eps: f64,
    cfg: &AuditConfig,
    rng: &mut RngStream,
) -> Result<AuditReport> {
    histogram_audit(mech, pair.first(), pair.second(), eps, eps, cfg, rng)
}

/// Audits databases at `l1` distance at most `k` against `exp(eps k)`.
pub fn transitivity_check(
    mech: &mut dyn Mechanism,
    x: &Database,
    x_far: &Database,
    k: f64,
    eps: f64,
    cfg: &AuditConfig,
    rng: &mut RngStream,
) -> Result<AuditReport> {
    let dist = x.l1_distance(x_far);
    if x.len() != x_far.len() || dist > k * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "databases are at l1 distance {dist}, more than k = {k}"
        )));
    }
    histogram_audit(mech, x, x_far, eps, eps * k, cfg, rng)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Minimum candidate budget `10 e^d`.
pub fn packing_budget(d: usize) -> usize {
    (10.0 * (d as f64).exp()).ceil() as usize
}

/// Greedily admits uniform points of `lambda K` at distance `>= target` from
/// every point admitted so far.
pub fn greedy_packing(
    handle: &PolytopeHandle,
    lambda: f64,
    target: f64,
    rng: &mut RngStream,
    budget: usize,
) -> Result<Vec<Vec<f64>>> {
    if !(lambda > 0.0) || !(target >= 0.0) {
        return Err(Error::InvalidParameter("need lambda > 0 and target >= 0".into()));
    }
    let need = packing_budget(handle.dim());
    if budget < need {
        return Err(Error::InvalidParameter(format!(
            "packing budget {budget} is below 10 e^d = {need}"
        )));
    }
    let mut sampler = RejectionSampler::new(handle)?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for _ in 0..budget {
        let p: Vec<f64> = sampler.sample(rng)?.into_iter().map(|v| lambda * v).collect();
        if points.iter().all(|q| euclid(&p, q) >= target) {
            points.push(p);
        }
    }
    Ok(points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub mechanism: String,
    pub eps: f64,
    pub lambda: f64,
    pub separation: f64,
    pub packing_size: usize,
    /// Size the packing must exceed, `2 exp(d/2)`.
    pub required_size: f64,
    /// `separation / 4`: some packing point must see at least this error.
    pub bound: f64,
    /// Largest mean error over the packing points.
    pub measured_error: f64,
    pub vol_lb: f64,
    /// `bound / vol_lb`.
    pub implied_c: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingConfig {
    pub budget: usize,
    pub trials: u64,
    pub volume_trials: u64,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            budget: 0,
            trials: 2000,
            volume_trials: 200_000,
        }
    }
}

/// Builds a separated packing of `lambda K` with `lambda = d / (2 eps)` and size
/// above `2 e^{d/2}`, then runs the mechanism on preimages of the packing.
///
/// With databases `x_i`, `||x_i||_1 <= lambda`, and answers `y_i` at pairwise
/// distance `>= s`, an `eps`-private mechanism whose mean error were below
/// `s/4` everywhere would put mass `1/2` in each of the disjoint balls
/// `B(y_i, s/2)` under `x_i`, hence mass `e^{-d/2}/2` each under `x = 0`: too much
/// for more than `2 e^{d/2}` balls. So the worst measured error must be `>= s/4`.
pub fn packing_error_check(
    mech: &mut dyn Mechanism,
    eps: f64,
    cfg: &PackingConfig,
    rng: &mut RngStream,
) -> Result<PackingReport> {
    let query = mech.query().clone();
    let d = query.rows();
    if d > 4 {
        return Err(Error::CapacityExceeded(format!("packing check needs d <= 4, got {d}")));
    }
    let handle = PolytopeHandle::new(query.clone());
    let lambda = d as f64 / (2.0 * eps);
    let required = 2.0 * (d as f64 / 2.0).exp();
    let budget = cfg.budget.max(packing_budget(d));
    let mut separation = 2.0 * lambda * handle.outer_radius();
    let mut packing = Vec::new();
    while separation > 1e-6 * lambda {
        packing = greedy_packing(&handle, lambda, separation, rng, budget)?;
        if packing.len() as f64 > required {
            break;
        }
        separation *= 0.9;
    }
    let (lb, _) = vol_lb(&query, eps, rng, cfg.volume_trials)?;
    let mut report = PackingReport {
        mechanism: mech.kind().name().to_string(),
        eps,
        lambda,
        separation,
        packing_size: packing.len(),
        required_size: required,
        bound: separation / 4.0,
        measured_error: 0.0,
        vol_lb: lb.value,
        implied_c: separation / 4.0 / lb.value,
        verdict: Verdict::Inconclusive,
    };
    if packing.len() as f64 <= required {
        return Ok(report);
    }
    let mut gauge = GaugeOracle::new(handle.query_arc())?;
    for y in &packing {
        let level = gauge.gauge(y)?;
        if !(level <= lambda * (1.0 + 1e-9)) {
            return Err(Error::InvalidParameter("packing point outside lambda K".into()));
        }
        let x = Database(gauge.preimage());
        let mut total = 0.0;
        for _ in 0..cfg.trials {
            total += euclid(&mech.release(&x, rng)?.answer, y);
        }
        report.measured_error = report.measured_error.max(total / cfg.trials as f64);
    }
    report.verdict = if report.measured_error >= report.bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// A finite instance: databases `D`, answers `R`, query values `F(x)` and an
/// optional error table `err(x, a)` (Euclidean distance to `F(x)` when absent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyInstance {
    pub databases: Vec<Vec<f64>>,
    pub answers: Vec<Vec<f64>>,
    pub query_values: Vec<Vec<f64>>,
    #[serde(default)]
    pub errors: Option<Vec<Vec<f64>>>,
}

impl TinyInstance {
    pub fn validate(&self, cap: usize) -> Result<()> {
        let nd = self.databases.len();
        let nr = self.answers.len();
        if nd == 0 || nr == 0 {
            return Err(Error::InvalidDimensions("instance needs databases and answers".into()));
        }
        if nd * nr > cap {
            return Err(Error::CapacityExceeded(format!(
                "{nd} x {nr} = {} variables exceeds the cap {cap}",
                nd * nr
            )));
        }
        if self.query_values.len() != nd {
            return Err(Error::DimensionMismatch {
                expected: nd,
                got: self.query_values.len(),
            });
        }
        if let Some(errors) = &self.errors {
            if errors.len() != nd || errors.iter().any(|r| r.len() != nr) {
                return Err(Error::InvalidDimensions("error table must be |D| x |R|".into()));
            }
        }
        let n = self.databases[0].len();
        if self.databases.iter().any(|x| x.len() != n) {
            return Err(Error::InvalidDimensions("databases differ in length".into()));
        }
        let d = self.answers[0].len();
        if self.answers.iter().chain(&self.query_values).any(|a| a.len() != d) {
            return Err(Error::InvalidDimensions("answers and query values differ in length".into()));
        }
        Ok(())
    }

    pub fn error(&self, x: usize, a: usize) -> f64 {
        match &self.errors {
            Some(e) => e[x][a],
            None => euclid(&self.answers[a], &self.query_values[x]),
        }
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.databases[x]
            .iter()
            .zip(&self.databases[y])
            .map(|(u, v)| (u - v).abs())
            .sum()
    }

    /// `max_x sum_a mu(x, a) err(x, a)`.
    pub fn worst_case_error(&self, table: &[Vec<f64>]) -> f64 {
        table
            .iter()
            .enumerate()
            .map(|(x, row)| row.iter().enumerate().map(|(a, m)| m * self.error(x, a)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The exponential-mechanism table `mu(x, a) ~ exp(-eps score(x, a))`.
    pub fn exponential_table(&self, eps: f64, score: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        (0..self.databases.len())
            .map(|x| {
                let w: Vec<f64> = (0..self.answers.len()).map(|a| (-eps * score(x, a)).exp()).collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|v| v / z).collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    pub eps: f64,
    pub optimum: f64,
    /// `table[x][a] = mu(x, a)`.
    pub table: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Minimizes the worst-case expected error over all `eps`-private mechanisms
/// supported on the instance's answers.
pub fn lp_optimal_error(instance: &TinyInstance, eps: f64) -> Result<LpReport> {
    lp_optimal_error_capped(instance, eps, DEFAULT_LP_CAP)
}

pub fn lp_optimal_error_capped(instance: &TinyInstance, eps: f64, cap: usize) -> Result<LpReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
    }
    instance.validate(cap)?;
    let nd = instance.databases.len();
    let nr = instance.answers.len();
    let var = |x: usize, a: usize| x * nr + a;
    let t = nd * nr;
    let mut lp = LinearProgram::new(t + 1);
    let mut c = vec![0.0; t + 1];
    c[t] = 1.0;
    lp.set_objective(c);
    for x in 0..nd {
        let terms: Vec<(usize, f64)> = (0..nr).map(|a| (var(x, a), 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, 1.0);
        let mut terms: Vec<(usize, f64)> = (0..nr).map(|a| (var(x, a), instance.error(x, a))).collect();
        terms.push((t, -1.0));
        lp.add_sparse(&terms, Relation::Le, 0.0);
    }
    for x in 0..nd {
        for y in 0..nd {
            if x == y {
                continue;
            }
            let factor = (eps * instance.distance(x, y)).exp();
            if factor > LP_RATIO_CAP {
                continue;
            }
            for a in 0..nr {
                lp.add_sparse(&[(var(x, a), 1.0), (var(y, a), -factor)], Relation::Le, 0.0);
            }
        }
    }
    let sol = lp.solve()?;
    let table = (0..nd)
        .map(|x| (0..nr).map(|a| sol.x[var(x, a)].max(0.0)).collect())
        .collect();
    Ok(LpReport {
        eps,
        optimum: sol.objective,
        table,
        iterations: sol.iterations,
    })
}
