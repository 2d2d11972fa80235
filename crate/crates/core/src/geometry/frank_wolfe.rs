//! Distance from a point to `r F B_1^n` by pairwise Frank-Wolfe.
//!
//! The iterate is kept as a convex combination of the atoms `+-r e_j` of the
//! scaled `l1` ball and only its image `y = F x` is stored densely. The linear
//! minimization oracle is the best signed coordinate. The Frank-Wolfe gap gives
//! a certified lower bound on the optimum, so every answer comes with an
//! interval `[lower, upper]` containing the true distance.

use crate::error::{Error, Result};
use crate::query::QueryMatrix;

#[derive(Clone, Debug)]
pub struct DistanceBounds {
    /// `||F x - a||_2` at the final iterate, which lies in `r B_1^n`.
    pub upper: f64,
    /// Certified lower bound on the distance.
    pub lower: f64,
    pub iterations: usize,
    /// Image `F x` of the final iterate.
    pub nearest: Vec<f64>,
}

/// Iteration cap `10 d n / eta^2`.
pub fn default_iteration_cap(d: usize, n: usize, eta: f64) -> usize {
    let cap = 10.0 * d as f64 * n as f64 / (eta * eta);
    cap.min(1e9) as usize
}

/// Runs pairwise Frank-Wolfe until `stop(lower, upper)` holds.
pub fn distance_bounds(
    query: &QueryMatrix,
    a: &[f64],
    radius: f64,
    max_iter: usize,
    mut stop: impl FnMut(f64, f64) -> bool,
) -> Result<DistanceBounds> {
    let d = query.rows();
    let n = query.cols();
    if a.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.len(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    // weights[j] for +r e_j, weights[n + j] for -r e_j.
    let mut weights = vec![0.0; 2 * n];
    let mut active: Vec<usize> = vec![0, n];
    weights[0] = 0.5;
    weights[n] = 0.5;
    let mut y = vec![0.0; d];
    let mut resid = vec![0.0; d];
    let mut grad = vec![0.0; n];
    let mut dir = vec![0.0; d];

    let atom_image = |atom: usize, out: &mut [f64]| {
        let (j, s) = if atom < n { (atom, radius) } else { (atom - n, -radius) };
        for (i, o) in out.iter_mut().enumerate() {
            *o = s * query.get(i, j);
        }
    };

    for iter in 0..=max_iter {
        for i in 0..d {
            resid[i] = y[i] - a[i];
        }
        let f: f64 = resid.iter().map(|v| v * v).sum();
        query.apply_transpose_into(&resid, &mut grad);
        // Toward atom: minimizes <resid, atom image>.
        let (j_star, g_star) = grad
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (j, &g)| if g.abs() > acc.1 { (j, g.abs()) } else { acc });
        let toward = if grad[j_star] > 0.0 { n + j_star } else { j_star };
        let resid_dot_y: f64 = resid.iter().zip(&y).map(|(r, v)| r * v).sum();
        // gap = 2 <resid, y - s>, with <resid, s> = -r |grad_j*|.
        let gap = 2.0 * (resid_dot_y + radius * g_star);
        let upper = f.sqrt();
        let lower = (f - gap).max(0.0).sqrt();
        if stop(lower, upper) || iter == max_iter {
            if iter == max_iter && !stop(lower, upper) {
                return Err(Error::NonConvergence {
                    iterations: max_iter,
                    context: format!("frank-wolfe distance bounds [{lower}, {upper}]"),
                });
            }
            return Ok(DistanceBounds {
                upper,
                lower,
                iterations: iter,
                nearest: y,
            });
        }
        // Away atom: the active atom with the largest <resid, atom image>.
        let atom_score = |atom: usize| -> f64 {
            if atom < n {
                radius * grad[atom]
            } else {
                -radius * grad[atom - n]
            }
        };
        let away = *active
            .iter()
            .max_by(|&&p, &&q| atom_score(p).total_cmp(&atom_score(q)))
            .expect("active set is never empty");
        if away == toward {
            // Optimal on the current face: the gap can only be closed numerically.
            return Ok(DistanceBounds {
                upper,
                lower,
                iterations: iter,
                nearest: y,
            });
        }
        let mut toward_img = vec![0.0; d];
        atom_image(toward, &mut toward_img);
        atom_image(away, &mut dir);
        for i in 0..d {
            dir[i] = toward_img[i] - dir[i];
        }
        let dir_sq: f64 = dir.iter().map(|v| v * v).sum();
        if dir_sq == 0.0 {
            // Duplicate columns: move the weight and continue.
            let w = weights[away];
            weights[away] = 0.0;
            weights[toward] += w;
        } else {
            let slope: f64 = -resid.iter().zip(&dir).map(|(r, v)| r * v).sum::<f64>();
            let gamma = (slope / dir_sq).clamp(0.0, weights[away]);
            weights[away] -= gamma;
            weights[toward] += gamma;
            for i in 0..d {
                y[i] += gamma * dir[i];
            }
        }
        if weights[toward] > 0.0 && !active.contains(&toward) {
            active.push(toward);
        }
        if weights[away] <= 1e-300 {
            weights[away] = 0.0;
            active.retain(|&k| k != away);
        }
        if iter % 256 == 255 {
            // Resynchronize the image with the weights.
            y.iter_mut().for_each(|v| *v = 0.0);
            let mut img = vec![0.0; d];
            for &k in &active {
                atom_image(k, &mut img);
                for i in 0..d {
                    y[i] += weights[k] * img[i];
                }
            }
        }
    }
    unreachable!("loop returns on the last iteration")
}

/// `min_{x in r B_1^n} ||F x - a||_2` to absolute accuracy `eta`.
///
/// The returned value `v` satisfies `0 <= v <= dist + eta`. `v <= eta`
/// certifies `a` lies in `r K + eta B_2`; `v > eta` certifies `a` is not in `r K`.
pub fn l1_distance_to_image(query: &QueryMatrix, a: &[f64], radius: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let cap = default_iteration_cap(query.rows(), query.cols(), eta);
    let bounds = distance_bounds(query, a, radius, cap, |lo, up| up - lo <= eta)?;
    Ok(bounds.upper)
}
