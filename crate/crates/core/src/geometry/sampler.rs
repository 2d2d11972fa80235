//! Uniform sampling from the body: exact box rejection for small `d`, and the
//! lazy grid walk on a lattice intersected with the body.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LevelOracle, PolytopeHandle};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Proposals without a hit before the rejection sampler gives up (rate < 1e-6).
const REJECTION_MAX_ATTEMPTS: u64 = 10_000_000;

/// Moves between exact recomputations of the walk position.
const RESYNC_EVERY: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    Rejection,
    GridWalk,
}

impl std::str::FromStr for SamplerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejection" => Ok(Self::Rejection),
            "grid-walk" | "gridwalk" | "grid_walk" => Ok(Self::GridWalk),
            other => Err(Error::Parse(format!("unknown sampler {other:?}"))),
        }
    }
}

/// Box rejection: propose uniformly in the bounding box, keep points in the body.
pub struct RejectionSampler {
    oracle: Box<dyn LevelOracle>,
    extents: Vec<f64>,
    proposals: u64,
    accepted: u64,
}

impl RejectionSampler {
    pub fn new(handle: &PolytopeHandle) -> Result<Self> {
        Ok(Self {
            oracle: handle.level_oracle()?,
            extents: handle.extents().to_vec(),
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposals as f64
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> Result<Vec<f64>> {
        let d = self.extents.len();
        let mut p = vec![0.0; d];
        for _ in 0..REJECTION_MAX_ATTEMPTS {
            for (v, w) in p.iter_mut().zip(&self.extents) {
                *v = rng.uniform(-w, *w);
            }
            self.proposals += 1;
            if self.oracle.level(&p)? <= 1.0 {
                self.accepted += 1;
                return Ok(p);
            }
        }
        Err(Error::AcceptanceGuard(format!(
            "no point accepted in {REJECTION_MAX_ATTEMPTS} proposals (d = {d})"
        )))
    }
}

/// One uniform draw from the handle's body by box rejection.
pub fn rejection_sample_k(handle: &PolytopeHandle, rng: &mut RngStream) -> Result<Vec<f64>> {
    RejectionSampler::new(handle)?.sample(rng)
}

/// Lattice spacing `beta`, steps per draw `steps`, and initial `burn_in` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridWalkConfig {
    pub beta: f64,
    pub steps: u64,
    pub burn_in: u64,
}

impl GridWalkConfig {
    /// `beta = 1/d^2`, `steps = 50 d^2 / beta^2`, burn-in `steps / 2`.
    pub fn for_dim(d: usize) -> Self {
        Self::with_beta(d, 1.0 / (d * d) as f64)
    }

    /// Default step budget `50 d^2 / beta^2` for a given spacing.
    pub fn with_beta(d: usize, beta: f64) -> Self {
        let steps = (50.0 * (d * d) as f64 / (beta * beta)).ceil() as u64;
        Self {
            beta,
            steps,
            burn_in: steps / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid side length must be > 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Partial grid-walk settings; unset fields take the per-dimension defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkSettings {
    pub beta: Option<f64>,
    pub steps: Option<u64>,
    pub burn_in: Option<u64>,
}

impl WalkSettings {
    pub fn resolve(&self, d: usize) -> GridWalkConfig {
        let beta = self.beta.unwrap_or(1.0 / (d * d) as f64);
        let mut cfg = GridWalkConfig::with_beta(d, beta);
        if let Some(steps) = self.steps {
            cfg.steps = steps;
            cfg.burn_in = steps / 2;
        }
        if let Some(burn_in) = self.burn_in {
            cfg.burn_in = burn_in;
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridWalkSample {
    pub point: Vec<f64>,
    /// False when no step was taken (the draw is the smoothed origin cell).
    pub mixed: bool,
}

#[derive(Clone, Debug)]
struct TraceRow {
    step: u64,
    coords: Vec<f64>,
    accepted: bool,
}

/// A persistent lazy grid walk.
///
/// The walk runs on `beta Z^d` in rounded coordinates `w`; body points are
/// `p = A w` with a diagonal rounding `A` that rescales every axis of the
/// bounding box to the widest one. Each step picks a coordinate and a sign
/// uniformly, stays put with probability 1/2, and otherwise moves iff the
/// proposal is in the body. A draw runs `steps` steps (plus `burn_in` before the
/// first draw) and smooths the lattice point uniformly over its cell.
pub struct GridWalk {
    oracle: Box<dyn LevelOracle>,
    /// Diagonal of the rounding map.
    rounding: Vec<f64>,
    /// Level increment bounds per unit step, `[+e_i, -e_i]`.
    unit_bounds: Vec<[f64; 2]>,
    cfg: GridWalkConfig,
    lattice: Vec<i64>,
    point: Vec<f64>,
    level_upper: f64,
    burned_in: bool,
    moves_since_resync: u64,
    steps_taken: u64,
    proposals: u64,
    accepted: u64,
    exact_solves: u64,
    trace: Option<(usize, Vec<TraceRow>)>,
}

impl GridWalk {
    pub fn new(handle: &PolytopeHandle, cfg: GridWalkConfig) -> Result<Self> {
        let widest = handle.extents().iter().cloned().fold(0.0f64, f64::max);
        let rounding = handle.extents().iter().map(|w| w / widest).collect();
        Self::with_rounding(handle.level_oracle()?, rounding, cfg)
    }

    /// A walk with an explicit diagonal rounding map.
    pub fn with_rounding(
        mut oracle: Box<dyn LevelOracle>,
        rounding: Vec<f64>,
        cfg: GridWalkConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let d = oracle.dim();
        if rounding.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rounding.len(),
            });
        }
        if rounding.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidParameter("rounding must be positive".into()));
        }
        let origin = vec![0.0; d];
        if oracle.level(&origin)? > 1.0 {
            return Err(Error::InvalidParameter("walk start is not in the body".into()));
        }
        let mut unit_bounds = Vec::with_capacity(d);
        let mut s = vec![0.0; d];
        for i in 0..d {
            s[i] = rounding[i];
            let plus = oracle.increment_bound(&s)?;
            s[i] = -rounding[i];
            let minus = oracle.increment_bound(&s)?;
            s[i] = 0.0;
            unit_bounds.push([plus, minus]);
        }
        Ok(Self {
            oracle,
            rounding,
            unit_bounds,
            cfg,
            lattice: vec![0; d],
            point: origin,
            level_upper: 0.0,
            burned_in: false,
            moves_since_resync: 0,
            steps_taken: 0,
            proposals: 0,
            accepted: 0,
            exact_solves: 0,
            trace: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.rounding.len()
    }

    pub fn config(&self) -> GridWalkConfig {
        self.cfg
    }

    /// Restarts at the origin with a new configuration.
    pub fn reset(&mut self, cfg: GridWalkConfig) -> Result<()> {
        cfg.validate()?;
        self.cfg = cfg;
        self.lattice.iter_mut().for_each(|k| *k = 0);
        self.point.iter_mut().for_each(|v| *v = 0.0);
        self.level_upper = 0.0;
        self.burned_in = false;
        self.moves_since_resync = 0;
        Ok(())
    }

    /// Records up to `limit` steps for [`GridWalk::trace_csv`].
    pub fn enable_trace(&mut self, limit: usize) {
        self.trace = Some((limit, Vec::new()));
    }

    /// Trace rows as CSV: `step,x0,...,x{d-1},accepted`.
    pub fn trace_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::from("step");
        for i in 0..d {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",accepted\n");
        if let Some((_, rows)) = &self.trace {
            for row in rows {
                let _ = write!(out, "{}", row.step);
                for c in &row.coords {
                    let _ = write!(out, ",{c}");
                }
                let _ = writeln!(out, ",{}", u8::from(row.accepted));
            }
        }
        out
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposals.max(1) as f64
    }

    /// Exact membership solves per proposal; the rest were decided by bounds.
    pub fn solve_fraction(&self) -> f64 {
        self.exact_solves as f64 / self.proposals.max(1) as f64
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    fn step(&mut self, rng: &mut RngStream) -> Result<()> {
        self.steps_taken += 1;
        if rng.coin() {
            self.record(false);
            return Ok(());
        }
        let d = self.dim();
        let i = rng.index(d);
        let plus = rng.coin();
        let delta = if plus { self.cfg.beta } else { -self.cfg.beta };
        let bound = self.level_upper + self.cfg.beta * self.unit_bounds[i][usize::from(!plus)];
        self.proposals += 1;
        let old = self.point[i];
        self.point[i] = old + delta * self.rounding[i];
        let new_level = if bound <= 1.0 {
            Some(bound)
        } else if self.oracle.quick_lower_bound(&self.point) > 1.0 {
            None
        } else {
            self.exact_solves += 1;
            let v = self.oracle.level(&self.point)?;
            (v <= 1.0).then_some(v)
        };
        match new_level {
            Some(level) => {
                self.lattice[i] += if plus { 1 } else { -1 };
                self.level_upper = level;
                self.accepted += 1;
                self.moves_since_resync += 1;
                if self.moves_since_resync >= RESYNC_EVERY {
                    self.resync();
                }
                self.record(true);
            }
            None => {
                self.point[i] = old;
                self.record(false);
            }
        }
        Ok(())
    }

    fn resync(&mut self) {
        for ((p, &k), &a) in self.point.iter_mut().zip(&self.lattice).zip(&self.rounding) {
            *p = k as f64 * self.cfg.beta * a;
        }
        self.moves_since_resync = 0;
    }

    fn record(&mut self, accepted: bool) {
        if let Some((limit, rows)) = &mut self.trace {
            if rows.len() < *limit {
                rows.push(TraceRow {
                    step: self.steps_taken,
                    coords: self.point.clone(),
                    accepted,
                });
            }
        }
    }

    /// Current lattice point mapped into body coordinates.
    pub fn lattice_point(&self) -> Vec<f64> {
        self.lattice
            .iter()
            .zip(&self.rounding)
            .map(|(&k, &a)| k as f64 * self.cfg.beta * a)
            .collect()
    }

    /// Advances the walk and returns a smoothed draw.
    pub fn draw(&mut self, rng: &mut RngStream) -> Result<GridWalkSample> {
        let mut budget = self.cfg.steps;
        if !self.burned_in {
            budget += self.cfg.burn_in;
            self.burned_in = true;
        }
        for _ in 0..budget {
            self.step(rng)?;
        }
        let beta = self.cfg.beta;
        let point = self
            .lattice
            .iter()
            .zip(&self.rounding)
            .map(|(&k, &a)| (k as f64 + rng.uniform(-0.5, 0.5)) * beta * a)
            .collect();
        Ok(GridWalkSample {
            point,
            mixed: self.steps_taken > 0,
        })
    }
}

/// One draw from a fresh walk started at the origin.
pub fn grid_walk_sample(
    handle: &PolytopeHandle,
    cfg: GridWalkConfig,
    rng: &mut RngStream,
) -> Result<GridWalkSample> {
    GridWalk::new(handle, cfg)?.draw(rng)
}

/// A reusable uniform sampler over a body.
pub enum UniformSampler {
    Rejection(RejectionSampler),
    GridWalk(GridWalk),
}

impl UniformSampler {
    pub fn new(handle: &PolytopeHandle, choice: SamplerChoice, walk: Option<GridWalkConfig>) -> Result<Self> {
        Ok(match choice {
            SamplerChoice::Rejection => Self::Rejection(RejectionSampler::new(handle)?),
            SamplerChoice::GridWalk => {
                let cfg = walk.unwrap_or_else(|| GridWalkConfig::for_dim(handle.dim()));
                Self::GridWalk(GridWalk::new(handle, cfg)?)
            }
        })
    }

    pub fn choice(&self) -> SamplerChoice {
        match self {
            Self::Rejection(_) => SamplerChoice::Rejection,
            Self::GridWalk(_) => SamplerChoice::GridWalk,
        }
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> Result<Vec<f64>> {
        match self {
            Self::Rejection(s) => s.sample(rng),
            Self::GridWalk(w) => Ok(w.draw(rng)?.point),
        }
    }
}
