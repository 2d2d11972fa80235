//! Volume lower bounds on the error of private mechanisms and the reference
//! scaling curves used to normalize measured errors.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    estimate_volume_radius, project_query, top_eigenspace_projection, CovarianceSummary,
    PolytopeHandle, VolumeEstimate, DEFAULT_ETA,
};
use crate::query::QueryMatrix;
use crate::rng::RngStream;

/// Box trials per volume estimate when the caller does not choose.
pub const DEFAULT_VOLUME_TRIALS: u64 = 200_000;

/// Stated on every report: the eigenspace terms lower-bound the true supremum
/// only up to the isotropic-constant ratio, taken to be a constant.
pub const ALPHA_ASSUMPTION: &str =
    "alpha_K = Omega(1) assumed (bounded isotropic constant); projections restricted to covariance eigenspaces";

/// `eps^-1 k sqrt(k) vol_k^{1/k}` with its interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTerm {
    pub k: usize,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `vol_k(P K)^{1/k}`.
    pub radius: f64,
}

impl ProjectionTerm {
    fn from_volume(k: usize, eps: f64, v: &VolumeEstimate) -> Self {
        let c = k as f64 * (k as f64).sqrt() / eps;
        Self {
            k,
            value: c * v.radius,
            ci_low: c * v.ci_low,
            ci_high: c * v.ci_high,
            radius: v.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub vol_lb: f64,
    pub gvol_lb: f64,
    pub per_k: Vec<ProjectionTerm>,
    /// 95% interval on `vol(K)^{1/d}`.
    pub volume_ci: [f64; 2],
    pub alpha_assumption: String,
}

impl BoundReport {
    /// The maximizing projection term.
    pub fn best(&self) -> Option<&ProjectionTerm> {
        self.per_k.iter().max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || eps.is_nan() {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
    }
    Ok(())
}

/// `eps^-1 d sqrt(d) vol(K)^{1/d}`.
pub fn vol_lb(
    query: &QueryMatrix,
    eps: f64,
    rng: &mut RngStream,
    trials: u64,
) -> Result<(ProjectionTerm, VolumeEstimate)> {
    check_eps(eps)?;
    let handle = PolytopeHandle::with_options(Arc::new(query.clone()), false, DEFAULT_ETA)?;
    let v = estimate_volume_radius(&handle, rng, trials)?;
    Ok((ProjectionTerm::from_volume(query.rows(), eps, &v), v))
}

/// Maximum over `k` of the volume bound for `P_k K`, where `P_k` projects onto
/// the top-`k` covariance eigenvectors. The `k = d` term is `vol_lb` itself.
pub fn gvol_lb(
    query: &QueryMatrix,
    eps: f64,
    cov: &CovarianceSummary,
    rng: &mut RngStream,
    trials: u64,
) -> Result<BoundReport> {
    check_eps(eps)?;
    let d = query.rows();
    if cov.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cov.dim(),
        });
    }
    let (full, full_volume) = vol_lb(query, eps, rng, trials)?;
    let base = rng.fork();
    let mut per_k: Vec<ProjectionTerm> = (1..d)
        .into_par_iter()
        .map(|k| {
            let sub = top_eigenspace_projection(cov, k)?;
            let projected = project_query(query, &sub.basis)?;
            let handle = PolytopeHandle::with_options(Arc::new(projected), false, DEFAULT_ETA)?;
            let v = estimate_volume_radius(&handle, &mut base.split(k as u64), trials)?;
            Ok(ProjectionTerm::from_volume(k, eps, &v))
        })
        .collect::<Result<_>>()?;
    per_k.push(full.clone());
    let gvol = per_k.iter().map(|t| t.value).fold(0.0, f64::max);
    Ok(BoundReport {
        vol_lb: full.value,
        gvol_lb: gvol,
        per_k,
        volume_ci: [full_volume.ci_low, full_volume.ci_high],
        alpha_assumption: ALPHA_ASSUMPTION.to_string(),
    })
}

/// Reference curves with all constants set to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurves {
    /// `d sqrt(d) / eps`.
    pub laplace_ref: f64,
    /// `d min(sqrt(d), sqrt(ln(n/d))) / eps`.
    pub knorm_ref: f64,
    /// `d sqrt(ln(1/delta)) / eps`; absent without a valid `delta`.
    pub gauss_ref: Option<f64>,
}

pub fn theory_curves(d: usize, n: usize, eps: f64, delta: Option<f64>) -> Result<TheoryCurves> {
    check_eps(eps)?;
    if d == 0 || 2 * d > n {
        return Err(Error::InvalidDimensions(format!(
            "reference curves need 1 <= d <= n/2, got d = {d}, n = {n}"
        )));
    }
    let df = d as f64;
    let gauss_ref = match delta {
        Some(delta) if delta > 0.0 && delta < 1.0 => Some(df * (1.0 / delta).ln().sqrt() / eps),
        Some(delta) => {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )))
        }
        None => None,
    };
    Ok(TheoryCurves {
        laplace_ref: df * df.sqrt() / eps,
        knorm_ref: df * df.sqrt().min((n as f64 / df).ln().sqrt()) / eps,
        gauss_ref,
    })
}
