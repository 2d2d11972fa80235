//! The body `K = F B_1^n`: membership, Minkowski norm, sampling, volume,
//! covariance, and subspace projection.

mod covariance;
pub mod frank_wolfe;
pub mod gauge;
mod oracle;
mod sampler;
mod volume;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use covariance::{
    default_covariance_samples, estimate_covariance, project_query, top_eigenspace_projection,
    CovarianceSummary, Subspace,
};
pub use frank_wolfe::l1_distance_to_image;
pub use gauge::GaugeOracle;
pub use oracle::{InflatedOracle, LevelOracle};
pub use sampler::{
    grid_walk_sample, rejection_sample_k, GridWalk, GridWalkConfig, GridWalkSample,
    RejectionSampler, SamplerChoice, UniformSampler, WalkSettings,
};
pub use volume::{estimate_volume_radius, estimate_volume_radius_capped, VolumeEstimate, VOLUME_DIM_CAP};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::query::QueryMatrix;

pub const DEFAULT_ETA: f64 = 1e-3;

/// Radius of the Euclidean ball added by the inflate flag.
pub const INFLATE_RADIUS: f64 = 1.0;

const NORM_REL_TOL: f64 = 1e-4;

/// Three-valued answer of the weak separation oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    Outside,
    BoundaryBand,
}

/// `K = F B_1^n`, or `K' = K + B_2^d` when inflated, plus cached geometry.
#[derive(Clone, Debug)]
pub struct PolytopeHandle {
    query: Arc<QueryMatrix>,
    inflate: bool,
    eta: f64,
    extents: Vec<f64>,
    outer_radius: f64,
}

impl PolytopeHandle {
    pub fn new(query: QueryMatrix) -> Self {
        Self::with_options(Arc::new(query), false, DEFAULT_ETA).expect("default eta is valid")
    }

    pub fn inflated(query: QueryMatrix) -> Self {
        Self::with_options(Arc::new(query), true, DEFAULT_ETA).expect("default eta is valid")
    }

    pub fn with_options(query: Arc<QueryMatrix>, inflate: bool, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be >= 0, got {eta}")));
        }
        let pad = if inflate { INFLATE_RADIUS } else { 0.0 };
        let extents: Vec<f64> = query.row_extents().into_iter().map(|w| w + pad).collect();
        // K lies in the box of half-widths `extents`.
        let outer_radius = extents.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(Self {
            query,
            inflate,
            eta,
            extents,
            outer_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.query.rows()
    }

    pub fn query(&self) -> &QueryMatrix {
        &self.query
    }

    pub fn query_arc(&self) -> Arc<QueryMatrix> {
        self.query.clone()
    }

    pub fn is_inflated(&self) -> bool {
        self.inflate
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Half-widths of the tightest axis-aligned box containing the body.
    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    /// A radius `R` with the body inside `R B_2^d`; `sqrt(d)` for `[-1, 1]` entries.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// The membership oracle the samplers use: exact gauge for `K`,
    /// Frank-Wolfe distance for `K'`.
    pub fn level_oracle(&self) -> Result<Box<dyn LevelOracle>> {
        if self.inflate {
            Ok(Box::new(InflatedOracle::new(
                self.query.clone(),
                INFLATE_RADIUS,
                self.eta.max(1e-9),
            )))
        } else {
            Ok(Box::new(GaugeOracle::new(self.query.clone())?))
        }
    }

    /// Weak separation oracle for `r K` (or `r K'`) at the handle's `eta`.
    pub fn membership(&self, a: &[f64], r: f64) -> Result<Membership> {
        self.membership_with_eta(a, r, self.eta)
    }

    fn membership_with_eta(&self, a: &[f64], r: f64, eta: f64) -> Result<Membership> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.len(),
            });
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {r}")));
        }
        let eta = eta.max(1e-12);
        // a in rK' iff dist(a, rK) <= r.
        let threshold = if self.inflate { r * INFLATE_RADIUS } else { 0.0 };
        let band = threshold + eta;
        let cap = frank_wolfe::default_iteration_cap(self.dim(), self.query.cols(), eta);
        let b = frank_wolfe::distance_bounds(&self.query, a, r, cap, |lo, up| {
            up <= band || lo > band || up - lo <= 0.1 * eta
        })?;
        Ok(if b.upper <= band {
            Membership::Inside
        } else if b.lower > band {
            Membership::Outside
        } else {
            Membership::BoundaryBand
        })
    }

    /// `||a||_K = inf { r : a in r K }` by bisection on the membership oracle.
    ///
    /// Points outside the span of a rank-deficient body have infinite norm.
    pub fn minkowski_norm(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.len(),
            });
        }
        if a.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        if self.inflate {
            return self.bisect_norm(self, a, INFLATE_RADIUS);
        }
        // Work in an orthonormal basis of range(F), where K is full-dimensional.
        let (reduced, coords, residual) = range_coordinates(&self.query, a)?;
        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if residual > 1e-9 * scale.max(1.0) {
            return Ok(f64::INFINITY);
        }
        let handle = PolytopeHandle::with_options(Arc::new(reduced), false, self.eta)?;
        let inradius = certified_inradius(handle.query())?;
        self.bisect_norm(&handle, &coords, inradius)
    }

    fn bisect_norm(&self, handle: &PolytopeHandle, a: &[f64], inradius: f64) -> Result<f64> {
        // Box containment gives a lower bound.
        let mut lo = a
            .iter()
            .zip(handle.extents())
            .map(|(v, w)| v.abs() / w)
            .fold(0.0f64, f64::max);
        let eta_at = |r: f64| 1e-5 * inradius * r;
        let mut hi = lo.max(1e-300) * 2.0;
        while handle.membership_with_eta(a, hi, eta_at(hi))? == Membership::Outside {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        while hi - lo > 0.5 * NORM_REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            match handle.membership_with_eta(a, mid, eta_at(mid))? {
                Membership::Outside => lo = mid,
                Membership::Inside | Membership::BoundaryBand => hi = mid,
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Expresses `F` and `a` in an orthonormal basis of `range(F)`; also returns
/// the norm of the component of `a` orthogonal to that range.
fn range_coordinates(query: &QueryMatrix, a: &[f64]) -> Result<(QueryMatrix, Vec<f64>, f64)> {
    let d = query.rows();
    let n = query.cols();
    let f = DMatrix::from_row_slice(d, n, query.data());
    let svd = f.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let smax = svd.singular_values.max();
    let rank_cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax.max(1e-300))
        .collect();
    let k = rank_cols.len();
    if k == d {
        return Ok((query.clone(), a.to_vec(), 0.0));
    }
    let basis = DMatrix::from_fn(d, k, |i, c| u[(i, rank_cols[c])]);
    let reduced = basis.transpose() * &f;
    let av = DMatrix::from_column_slice(d, 1, a);
    let coords = basis.transpose() * &av;
    let residual = (&av - &basis * &coords).norm();
    let reduced = QueryMatrix::relaxed(k, n, reduced.transpose().as_slice().to_vec())?;
    Ok((reduced, coords.as_slice().to_vec(), residual))
}

/// A radius `rho` with `rho B_2^d` inside `K`: since `||u||_K <= sum |u_i| ||e_i||_K`,
/// `rho = 1 / (sqrt(d) max_i ||e_i||_K)` works.
pub fn certified_inradius(query: &QueryMatrix) -> Result<f64> {
    let d = query.rows();
    let mut worst = 0.0f64;
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        worst = worst.max(lp_gauge(query, &e)?);
    }
    Ok(1.0 / ((d as f64).sqrt() * worst))
}

/// Gauge by a cold two-phase simplex solve; infinite outside the range.
pub fn lp_gauge(query: &QueryMatrix, p: &[f64]) -> Result<f64> {
    let n = query.cols();
    let mut lp = LinearProgram::new(2 * n);
    lp.set_objective(vec![1.0; 2 * n]);
    for (i, &rhs) in p.iter().enumerate() {
        let row = query.row(i);
        let mut coeffs = Vec::with_capacity(2 * n);
        coeffs.extend_from_slice(row);
        coeffs.extend(row.iter().map(|v| -v));
        lp.add_constraint(coeffs, Relation::Eq, rhs);
    }
    match lp.solve() {
        Ok(s) => Ok(s.objective),
        Err(Error::Infeasible) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::hypercube_query;

    #[test]
    fn membership_examples() {
        let cross = PolytopeHandle::new(QueryMatrix::identity(2));
        assert_eq!(cross.membership(&[0.5, 0.49], 1.0).unwrap(), Membership::Inside);
        assert_eq!(cross.membership(&[0.8, 0.8], 1.0).unwrap(), Membership::Outside);
        let cube = PolytopeHandle::new(hypercube_query(2).unwrap());
        assert_eq!(cube.membership(&[0.99, -0.99], 1.0).unwrap(), Membership::Inside);
    }

    #[test]
    fn membership_band_near_boundary() {
        let cross = PolytopeHandle::new(QueryMatrix::identity(2));
        let m = cross.membership(&[0.5, 0.5 + 2e-4], 1.0).unwrap();
        assert_ne!(m, Membership::Outside);
    }

    #[test]
    fn inflated_membership() {
        let h = PolytopeHandle::inflated(QueryMatrix::identity(2));
        assert_eq!(h.membership(&[1.9, 0.0], 1.0).unwrap(), Membership::Inside);
        assert_eq!(h.membership(&[2.1, 0.0], 1.0).unwrap(), Membership::Outside);
        assert_eq!(h.membership(&[3.8, 0.0], 2.0).unwrap(), Membership::Inside);
    }

    #[test]
    fn norm_examples() {
        let cross = PolytopeHandle::new(QueryMatrix::identity(2));
        let v = cross.minkowski_norm(&[1.0, 1.0]).unwrap();
        assert!((v - 2.0).abs() < 2e-4 * 2.0, "{v}");
        let cube = PolytopeHandle::new(hypercube_query(2).unwrap());
        let v = cube.minkowski_norm(&[0.5, -0.25]).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "{v}");
        assert_eq!(cube.minkowski_norm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rank_deficient_norm() {
        let f = QueryMatrix::from_rows(&[vec![1.0, 0.5], vec![1.0, 0.5]]).unwrap();
        let h = PolytopeHandle::new(f);
        assert_eq!(h.minkowski_norm(&[1.0, 0.0]).unwrap(), f64::INFINITY);
        // (0.5, 0.5) = F (0.5, 0): norm 0.5.
        let v = h.minkowski_norm(&[0.5, 0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn inflated_norm_on_axis() {
        // K' = B_1^2 + B_2^2 reaches 2 along an axis.
        let h = PolytopeHandle::inflated(QueryMatrix::identity(2));
        let v = h.minkowski_norm(&[1.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn inradius_is_certified() {
        let rho = certified_inradius(&QueryMatrix::identity(2)).unwrap();
        assert!((rho - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
