//! Private mechanisms for linear queries sharing one output contract.
//!
//! Every mechanism releases `F x + w` where the noise `w` does not depend on
//! `x`; [`Mechanism::sample_noise`] exposes `w` directly.

mod nim;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use nim::{nim_level_count, NimLevel, NimMechanism, NimOptions};

use crate::distributions::{gamma_sample, gaussian_unchecked, laplace_unchecked, GammaParams};
use crate::error::{Error, Result};
use crate::geometry::{
    GridWalk, GridWalkConfig, PolytopeHandle, SamplerChoice, UniformSampler, WalkSettings,
    DEFAULT_ETA,
};
use crate::query::{evaluate, sensitivity, Database, QueryMatrix};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn pure(epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(Self { epsilon, delta: 0.0 })
    }

    pub fn approximate(epsilon: f64, delta: f64) -> Result<Self> {
        check_eps(epsilon)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || eps.is_nan() {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "laplace")]
    Laplace,
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "knorm")]
    KNorm,
    #[serde(rename = "knorm-mcmc")]
    KNormMcmc,
    #[serde(rename = "nim")]
    Nim,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        Self::Laplace,
        Self::Gaussian,
        Self::KNorm,
        Self::KNormMcmc,
        Self::Nim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Laplace => "laplace",
            Self::Gaussian => "gaussian",
            Self::KNorm => "knorm",
            Self::KNormMcmc => "knorm-mcmc",
            Self::Nim => "nim",
        }
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mechanism {s:?}")))
    }
}

/// Per-level record of a recursive release, with `answer` in original coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NimLevelTrace {
    pub dim: usize,
    /// Dimension passed on to the next level.
    pub kept_dim: usize,
    /// Dimension of the emitted component.
    pub emitted_dim: usize,
    pub eps: f64,
    pub r: f64,
    pub answer: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseTrace {
    Laplace { scale: f64 },
    Gaussian { sigma: f64 },
    KNorm { r: f64, z: Vec<f64>, inflated: bool },
    KNormEfficient { r: f64, z: Vec<f64>, beta: f64 },
    Nim { levels: Vec<NimLevelTrace> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSample {
    pub answer: Vec<f64>,
    pub mechanism: MechanismKind,
    pub trace: NoiseTrace,
}

pub trait Mechanism: Send {
    fn kind(&self) -> MechanismKind;

    fn query(&self) -> &QueryMatrix;

    /// The privacy budget the mechanism claims.
    fn epsilon(&self) -> f64;

    /// Draws the additive noise `a - F x`.
    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)>;

    fn release(&mut self, x: &Database, rng: &mut RngStream) -> Result<NoiseSample> {
        let mut answer = evaluate(self.query(), x)?;
        let (noise, trace) = self.sample_noise(rng)?;
        for (a, w) in answer.iter_mut().zip(&noise) {
            *a += w;
        }
        Ok(NoiseSample {
            answer,
            mechanism: self.kind(),
            trace,
        })
    }
}

/// Independent Laplace noise of scale `sensitivity(F) / eps` per coordinate.
pub struct LaplaceMechanism {
    query: Arc<QueryMatrix>,
    eps: f64,
    scale: f64,
}

impl LaplaceMechanism {
    pub fn new(query: Arc<QueryMatrix>, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let scale = sensitivity(&query) / eps;
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter("query has zero sensitivity".into()));
        }
        Ok(Self { query, eps, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Mechanism for LaplaceMechanism {
    fn kind(&self) -> MechanismKind {
        MechanismKind::Laplace
    }

    fn query(&self) -> &QueryMatrix {
        &self.query
    }

    fn epsilon(&self) -> f64 {
        self.eps
    }

    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)> {
        let w = (0..self.query.rows())
            .map(|_| laplace_unchecked(self.scale, rng))
            .collect();
        Ok((w, NoiseTrace::Laplace { scale: self.scale }))
    }
}

/// Independent normal noise with `sigma = sensitivity(F) sqrt(2 ln(1.25/delta)) / eps`.
pub struct GaussianMechanism {
    query: Arc<QueryMatrix>,
    params: PrivacyParams,
    sigma: f64,
}

impl GaussianMechanism {
    pub fn new(query: Arc<QueryMatrix>, eps: f64, delta: f64) -> Result<Self> {
        let params = PrivacyParams::approximate(eps, delta)?;
        let sigma = sensitivity(&query) * (2.0 * (1.25 / delta).ln()).sqrt() / eps;
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter("query has zero sensitivity".into()));
        }
        Ok(Self {
            query,
            params,
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Mechanism for GaussianMechanism {
    fn kind(&self) -> MechanismKind {
        MechanismKind::Gaussian
    }

    fn query(&self) -> &QueryMatrix {
        &self.query
    }

    fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)> {
        let w = (0..self.query.rows())
            .map(|_| gaussian_unchecked(self.sigma, rng))
            .collect();
        Ok((w, NoiseTrace::Gaussian { sigma: self.sigma }))
    }
}

/// Noise `r z` with `r ~ Gamma(d+1, 1/eps)` and `z` uniform in `K = F B_1^n`.
pub struct KNormMechanism {
    query: Arc<QueryMatrix>,
    handle: PolytopeHandle,
    sampler: UniformSampler,
    eps: f64,
    radius: GammaParams,
}

impl KNormMechanism {
    pub fn new(
        query: Arc<QueryMatrix>,
        eps: f64,
        choice: SamplerChoice,
        walk: WalkSettings,
    ) -> Result<Self> {
        Self::with_handle(
            PolytopeHandle::with_options(query, false, DEFAULT_ETA)?,
            eps,
            choice,
            walk,
        )
    }

    /// Samples from the handle's body, which may be the inflated `K + B_2^d`.
    pub fn with_handle(
        handle: PolytopeHandle,
        eps: f64,
        choice: SamplerChoice,
        walk: WalkSettings,
    ) -> Result<Self> {
        check_eps(eps)?;
        let d = handle.dim();
        let sampler = UniformSampler::new(&handle, choice, Some(walk.resolve(d)))?;
        Ok(Self {
            query: handle.query_arc(),
            radius: GammaParams::new((d + 1) as f64, 1.0 / eps)?,
            handle,
            sampler,
            eps,
        })
    }

    pub fn handle(&self) -> &PolytopeHandle {
        &self.handle
    }
}

impl Mechanism for KNormMechanism {
    fn kind(&self) -> MechanismKind {
        MechanismKind::KNorm
    }

    fn query(&self) -> &QueryMatrix {
        &self.query
    }

    fn epsilon(&self) -> f64 {
        self.eps
    }

    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)> {
        let z = self.sampler.sample(rng)?;
        let r = gamma_sample(self.radius, rng);
        let w = z.iter().map(|v| r * v).collect();
        Ok((
            w,
            NoiseTrace::KNorm {
                r,
                z,
                inflated: self.handle.is_inflated(),
            },
        ))
    }
}

/// The radius-coupled variant: draw `r` first, then a fresh grid walk on the
/// lattice of spacing `beta = min(eps/d, 1/r)`.
pub struct KNormEfficient {
    query: Arc<QueryMatrix>,
    walk: GridWalk,
    eps: f64,
    radius: GammaParams,
    steps: Option<u64>,
}

impl KNormEfficient {
    /// `steps = None` runs the default budget `50 d^2 / beta^2` for each draw.
    pub fn new(query: Arc<QueryMatrix>, eps: f64, steps: Option<u64>) -> Result<Self> {
        check_eps(eps)?;
        let handle = PolytopeHandle::with_options(query.clone(), false, DEFAULT_ETA)?;
        let d = handle.dim();
        let walk = GridWalk::new(&handle, GridWalkConfig::for_dim(d))?;
        Ok(Self {
            query,
            walk,
            eps,
            radius: GammaParams::new((d + 1) as f64, 1.0 / eps)?,
            steps,
        })
    }

    pub fn beta_for(&self, r: f64) -> f64 {
        (self.eps / self.query.rows() as f64).min(1.0 / r)
    }
}

impl Mechanism for KNormEfficient {
    fn kind(&self) -> MechanismKind {
        MechanismKind::KNormMcmc
    }

    fn query(&self) -> &QueryMatrix {
        &self.query
    }

    fn epsilon(&self) -> f64 {
        self.eps
    }

    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)> {
        let d = self.query.rows();
        let r = gamma_sample(self.radius, rng);
        let beta = self.beta_for(r);
        let mut cfg = GridWalkConfig::with_beta(d, beta);
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        cfg.burn_in = 0;
        self.walk.reset(cfg)?;
        let z = self.walk.draw(rng)?.point;
        let w = z.iter().map(|v| r * v).collect();
        Ok((w, NoiseTrace::KNormEfficient { r, z, beta }))
    }
}

/// Options shared by the name-based constructor.
#[derive(Clone, Debug, Default)]
pub struct MechanismOptions {
    pub delta: Option<f64>,
    pub sampler: Option<SamplerChoice>,
    pub walk: WalkSettings,
    /// Step budget per draw for `knorm-mcmc`.
    pub mcmc_steps: Option<u64>,
    pub nim: NimOptions,
}

/// Builds a mechanism by name. `nim` estimates covariances here, using `rng`.
pub fn build_mechanism(
    kind: MechanismKind,
    query: Arc<QueryMatrix>,
    eps: f64,
    opts: &MechanismOptions,
    rng: &mut RngStream,
) -> Result<Box<dyn Mechanism>> {
    let choice = opts.sampler.unwrap_or(SamplerChoice::Rejection);
    Ok(match kind {
        MechanismKind::Laplace => Box::new(LaplaceMechanism::new(query, eps)?),
        MechanismKind::Gaussian => {
            let delta = opts.delta.ok_or_else(|| {
                Error::InvalidParameter("gaussian mechanism needs delta".into())
            })?;
            Box::new(GaussianMechanism::new(query, eps, delta)?)
        }
        MechanismKind::KNorm => Box::new(KNormMechanism::new(query, eps, choice, opts.walk)?),
        MechanismKind::KNormMcmc => Box::new(KNormEfficient::new(query, eps, opts.mcmc_steps)?),
        MechanismKind::Nim => {
            let mut nim_opts = opts.nim.clone();
            nim_opts.sampler = opts.sampler.unwrap_or(nim_opts.sampler);
            Box::new(NimMechanism::new(query, eps, nim_opts, rng)?)
        }
    })
}

pub fn laplace_mechanism(
    query: &QueryMatrix,
    x: &Database,
    eps: f64,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    LaplaceMechanism::new(Arc::new(query.clone()), eps)?.release(x, rng)
}

pub fn gaussian_mechanism(
    query: &QueryMatrix,
    x: &Database,
    eps: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    GaussianMechanism::new(Arc::new(query.clone()), eps, delta)?.release(x, rng)
}

pub fn k_norm_mechanism(
    query: &QueryMatrix,
    x: &Database,
    eps: f64,
    choice: SamplerChoice,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    KNormMechanism::new(Arc::new(query.clone()), eps, choice, WalkSettings::default())?
        .release(x, rng)
}

pub fn k_norm_efficient(
    query: &QueryMatrix,
    x: &Database,
    eps: f64,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    KNormEfficient::new(Arc::new(query.clone()), eps, None)?.release(x, rng)
}

pub fn nim_mechanism(
    query: &QueryMatrix,
    x: &Database,
    eps_total: f64,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    NimMechanism::new(Arc::new(query.clone()), eps_total, NimOptions::default(), rng)?
        .release(x, rng)
}
