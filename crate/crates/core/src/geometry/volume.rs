//! `vol(K)^{1/d}` by Monte Carlo hits against the bounding box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PolytopeHandle;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest dimension the box estimator accepts by default.
pub const VOLUME_DIM_CAP: usize = 10;

const CHUNKS: usize = 64;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    /// `vol(K)^{1/d}`.
    pub radius: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub trials: u64,
    pub box_volume: f64,
    pub volume: f64,
}

pub fn estimate_volume_radius(
    handle: &PolytopeHandle,
    rng: &mut RngStream,
    trials: u64,
) -> Result<VolumeEstimate> {
    estimate_volume_radius_capped(handle, rng, trials, VOLUME_DIM_CAP)
}

/// Box rejection with a 95% delta-method interval on the `d`-th root.
///
/// Trials are split over fixed chunks, each on its own derived stream, and
/// summed in chunk order, so the result does not depend on the thread count.
pub fn estimate_volume_radius_capped(
    handle: &PolytopeHandle,
    rng: &mut RngStream,
    trials: u64,
    cap: usize,
) -> Result<VolumeEstimate> {
    let d = handle.dim();
    if d > cap {
        return Err(Error::CapacityExceeded(format!(
            "volume estimation capped at d = {cap}, got d = {d}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let oracle = handle.level_oracle()?;
    let extents = handle.extents().to_vec();
    let base = rng.fork();
    let per = trials / CHUNKS as u64;
    let extra = trials % CHUNKS as u64;
    let oracles: Vec<_> = (0..CHUNKS).map(|_| oracle.box_clone()).collect();
    let counts: Vec<Result<u64>> = oracles
        .into_par_iter()
        .enumerate()
        .map(|(c, mut oracle)| {
            let m = per + u64::from((c as u64) < extra);
            let mut local = base.split(c as u64);
            let mut p = vec![0.0; d];
            let mut hits = 0u64;
            for _ in 0..m {
                for (v, w) in p.iter_mut().zip(&extents) {
                    *v = local.uniform(-w, *w);
                }
                if oracle.level(&p)? <= 1.0 {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let mut hits = 0u64;
    for c in counts {
        hits += c?;
    }
    if hits == 0 {
        return Err(Error::DegenerateEstimate(format!(
            "no hits in {trials} box trials (d = {d})"
        )));
    }
    let box_volume: f64 = extents.iter().map(|w| 2.0 * w).product();
    let p = hits as f64 / trials as f64;
    let volume = p * box_volume;
    let radius = volume.powf(1.0 / d as f64);
    let se_p = (p * (1.0 - p) / trials as f64).sqrt();
    let half = Z95 * radius * se_p / (p * d as f64);
    Ok(VolumeEstimate {
        radius,
        ci_low: (radius - half).max(0.0),
        ci_high: radius + half,
        hits,
        trials,
        box_volume,
        volume,
    })
}
