use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{PolytopeHandle, UniformSampler};
use crate::error::{Error, Result};
use crate::query::QueryMatrix;
use crate::rng::RngStream;

/// `max(1000, d^4)`.
pub fn default_covariance_samples(d: usize) -> usize {
    1000usize.max(d.saturating_pow(4))
}

/// Estimated second-moment matrix of the uniform distribution on a body,
/// with its eigenvalues sorted descending and matching orthonormal eigenvectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceSummary {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub basis: DMatrix<f64>,
    pub sample_count: usize,
    pub mean: Vec<f64>,
    pub mean_stderr: Vec<f64>,
}

impl CovarianceSummary {
    /// Decomposes a symmetric matrix.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || d == 0 {
            return Err(Error::InvalidDimensions("covariance must be square".into()));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let basis = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            matrix: sym,
            eigenvalues,
            basis,
            sample_count: 0,
            mean: vec![0.0; d],
            mean_stderr: vec![0.0; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// True when some coordinate of the sample mean is more than three standard
    /// errors from zero, which for a symmetric body points at a sampler defect.
    pub fn mean_flagged(&self) -> bool {
        self.mean
            .iter()
            .zip(&self.mean_stderr)
            .any(|(m, s)| m.abs() > 3.0 * s)
    }

    pub fn determinant(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

/// Second moments about the origin of `count` sampler draws.
pub fn estimate_covariance(
    handle: &PolytopeHandle,
    count: usize,
    sampler: &mut UniformSampler,
    rng: &mut RngStream,
) -> Result<CovarianceSummary> {
    if count < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let d = handle.dim();
    let mut second = DMatrix::<f64>::zeros(d, d);
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..count {
        let z = sampler.sample(rng)?;
        if z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: z.len(),
            });
        }
        for i in 0..d {
            sum[i] += z[i];
            sum_sq[i] += z[i] * z[i];
            for j in 0..=i {
                second[(i, j)] += z[i] * z[j];
            }
        }
    }
    let n = count as f64;
    for i in 0..d {
        for j in 0..i {
            second[(j, i)] = second[(i, j)];
        }
    }
    second /= n;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mean_stderr = (0..d)
        .map(|i| ((sum_sq[i] / n - mean[i] * mean[i]).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    let mut summary = CovarianceSummary::from_matrix(second)?;
    summary.sample_count = count;
    summary.mean = mean;
    summary.mean_stderr = mean_stderr;
    Ok(summary)
}

/// An orthonormal basis `d x k` of a subspace together with its projector.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub basis: DMatrix<f64>,
    pub projector: DMatrix<f64>,
}

/// Projector onto the span of the top `k` eigenvectors.
pub fn top_eigenspace_projection(cov: &CovarianceSummary, k: usize) -> Result<Subspace> {
    let d = cov.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= {d}, got {k}")));
    }
    let basis = cov.basis.columns(0, k).into_owned();
    let projector = &basis * basis.transpose();
    Ok(Subspace { basis, projector })
}

/// The query in subspace coordinates, `basis^T F`.
pub fn project_query(query: &QueryMatrix, basis: &DMatrix<f64>) -> Result<QueryMatrix> {
    let d = query.rows();
    if basis.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: basis.nrows(),
        });
    }
    let k = basis.ncols();
    let gram = basis.transpose() * basis;
    let off = (&gram - DMatrix::<f64>::identity(k, k)).abs().max();
    if off > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "basis is not orthonormal (Gram error {off:e})"
        )));
    }
    let n = query.cols();
    let f = DMatrix::from_row_slice(d, n, query.data());
    let projected = basis.transpose() * f;
    // from_row_slice layout: row-major data for the k x n result.
    let data: Vec<f64> = (0..k)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| projected[(i, j)])
        .collect();
    QueryMatrix::relaxed(k, n, data)
}
