//! The recursive non-isotropic mechanism.
//!
//! Level `m` works with a query `G_m` of `d_m` rows. It estimates the covariance
//! of `G_m B_1^n`, keeps the top `floor(d_m / 2)` eigenvectors `U` and emits
//! the projection onto the rest `V` of a K-norm draw for `G_m`; the next level
//! runs on `U^T G_m`. The last level (`d_m = 1`) emits its whole draw. The
//! subspaces depend only on `F`, so the plan is built once and reused.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_eps, Mechanism, MechanismKind, NimLevelTrace, NoiseTrace};
use crate::distributions::{gamma_sample, GammaParams};
use crate::error::Result;
use crate::geometry::{
    default_covariance_samples, estimate_covariance, project_query, PolytopeHandle,
    SamplerChoice, UniformSampler, WalkSettings, DEFAULT_ETA,
};
use crate::query::QueryMatrix;
use crate::rng::RngStream;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NimOptions {
    /// Samples per covariance estimate; `max(1000, d^4)` when unset.
    pub covariance_samples: Option<usize>,
    pub sampler: SamplerChoice,
    pub walk: WalkSettings,
}

impl Default for NimOptions {
    fn default() -> Self {
        Self {
            covariance_samples: None,
            sampler: SamplerChoice::Rejection,
            walk: WalkSettings::default(),
        }
    }
}

/// Number of K-norm draws the recursion makes: `floor(log2 d) + 1`.
pub fn nim_level_count(d: usize) -> usize {
    assert!(d >= 1);
    (usize::BITS - d.leading_zeros()) as usize
}

pub struct NimLevel {
    dim: usize,
    kept_dim: usize,
    /// `d x d_m` map from level coordinates to emitted original coordinates.
    emit: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    sampler: UniformSampler,
    radius: GammaParams,
}

impl NimLevel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kept_dim(&self) -> usize {
        self.kept_dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

pub struct NimMechanism {
    query: Arc<QueryMatrix>,
    eps_total: f64,
    eps_level: f64,
    levels: Vec<NimLevel>,
}

impl NimMechanism {
    pub fn new(
        query: Arc<QueryMatrix>,
        eps_total: f64,
        opts: NimOptions,
        rng: &mut RngStream,
    ) -> Result<Self> {
        check_eps(eps_total)?;
        let d = query.rows();
        let eps_level = eps_total / nim_level_count(d) as f64;
        let mut levels = Vec::new();
        let mut current = (*query).clone();
        let mut embed = DMatrix::<f64>::identity(d, d);
        loop {
            let dm = current.rows();
            let handle = PolytopeHandle::with_options(Arc::new(current.clone()), false, DEFAULT_ETA)?;
            let mut sampler = UniformSampler::new(&handle, opts.sampler, Some(opts.walk.resolve(dm)))?;
            let radius = GammaParams::new((dm + 1) as f64, 1.0 / eps_level)?;
            if dm == 1 {
                levels.push(NimLevel {
                    dim: 1,
                    kept_dim: 0,
                    emit: embed,
                    eigenvalues: Vec::new(),
                    sampler,
                    radius,
                });
                break;
            }
            let count = opts
                .covariance_samples
                .unwrap_or_else(|| default_covariance_samples(dm));
            let cov = estimate_covariance(&handle, count, &mut sampler, rng)?;
            let kept = dm / 2;
            let u = cov.basis.columns(0, kept).into_owned();
            let v = cov.basis.columns(kept, dm - kept).into_owned();
            levels.push(NimLevel {
                dim: dm,
                kept_dim: kept,
                emit: &embed * &v * v.transpose(),
                eigenvalues: cov.eigenvalues.clone(),
                sampler,
                radius,
            });
            current = project_query(&current, &u)?;
            embed = &embed * &u;
        }
        Ok(Self {
            query,
            eps_total,
            eps_level,
            levels,
        })
    }

    pub fn levels(&self) -> &[NimLevel] {
        &self.levels
    }

    pub fn eps_per_level(&self) -> f64 {
        self.eps_level
    }

    pub fn eps_total(&self) -> f64 {
        self.eps_total
    }
}

impl Mechanism for NimMechanism {
    fn kind(&self) -> MechanismKind {
        MechanismKind::Nim
    }

    fn query(&self) -> &QueryMatrix {
        &self.query
    }

    fn epsilon(&self) -> f64 {
        self.eps_total
    }

    fn sample_noise(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, NoiseTrace)> {
        let d = self.query.rows();
        let mut total = vec![0.0; d];
        let mut traces = Vec::with_capacity(self.levels.len());
        for level in &mut self.levels {
            let z = level.sampler.sample(rng)?;
            let r = gamma_sample(level.radius, rng);
            let a = DVector::from_iterator(z.len(), z.iter().map(|v| r * v));
            let emitted = &level.emit * a;
            for (t, e) in total.iter_mut().zip(emitted.iter()) {
                *t += e;
            }
            traces.push(NimLevelTrace {
                dim: level.dim,
                kept_dim: level.kept_dim,
                emitted_dim: level.dim - level.kept_dim,
                eps: self.eps_level,
                r,
                answer: emitted.as_slice().to_vec(),
            });
        }
        Ok((total, NoiseTrace::Nim { levels: traces }))
    }
}
