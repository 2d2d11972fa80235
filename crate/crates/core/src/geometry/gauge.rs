//! Exact gauge `||p||_K = min { ||x||_1 : F x = p }` by a warm-started dual simplex.
//!
//! The LP in standard form is `min 1.x` over `x >= 0` with `[F, -F] x = p`.
//! Its reduced costs do not depend on `p`, so an optimal basis for one point
//! stays dual feasible for every point. Re-solving for a nearby point therefore
//! only needs dual simplex pivots, and usually none at all: a random walk that
//! moves a short step mostly stays inside the cone of the current basis.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::query::QueryMatrix;

const PRIMAL_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const MAX_PIVOTS_PER_SOLVE: usize = 10_000;

#[derive(Clone, Debug)]
pub struct GaugeOracle {
    query: Arc<QueryMatrix>,
    d: usize,
    n: usize,
    /// Basic columns of `[F, -F]`: index `j < n` is `+F_j`, `j >= n` is `-F_{j-n}`.
    basis: Vec<usize>,
    /// Row-major `B^{-1}`.
    binv: Vec<f64>,
    /// `y = B^{-T} 1`; `|F^T y| <= 1` is dual feasibility.
    dual: Vec<f64>,
    /// `F^T y`, cached.
    dual_image: Vec<f64>,
    /// Basic primal values from the last solve.
    x_basic: Vec<f64>,
    pivots_since_refactor: usize,
    total_pivots: u64,
    solves: u64,
    scratch_row: Vec<f64>,
    scratch_image: Vec<f64>,
}

impl GaugeOracle {
    pub fn new(query: Arc<QueryMatrix>) -> Result<Self> {
        let d = query.rows();
        let n = query.cols();
        // Phase one on a generic point of the range to obtain a dual-feasible basis.
        let weights: Vec<f64> = (0..n)
            .map(|j| ((j as f64 * 0.618_033_988_75 + 0.27).fract() - 0.5) / n as f64)
            .collect();
        let mut p0 = vec![0.0; d];
        query.apply_into(&weights, &mut p0);
        let mut lp = LinearProgram::new(2 * n);
        lp.set_objective(vec![1.0; 2 * n]);
        for (i, &rhs) in p0.iter().enumerate() {
            let row = query.row(i);
            let mut coeffs = Vec::with_capacity(2 * n);
            coeffs.extend_from_slice(row);
            coeffs.extend(row.iter().map(|v| -v));
            lp.add_constraint(coeffs, Relation::Eq, rhs);
        }
        let solution = lp.solve()?;
        let mut basis = Vec::with_capacity(d);
        for b in &solution.basis {
            match b {
                Some(j) if *j < 2 * n => basis.push(*j),
                _ => return Err(Error::RankDeficient),
            }
        }
        let mut oracle = Self {
            query,
            d,
            n,
            basis,
            binv: vec![0.0; d * d],
            dual: vec![0.0; d],
            dual_image: vec![0.0; n],
            x_basic: vec![0.0; d],
            pivots_since_refactor: 0,
            total_pivots: 0,
            solves: 0,
            scratch_row: vec![0.0; d],
            scratch_image: vec![0.0; n],
        };
        oracle.refactor()?;
        Ok(oracle)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn query(&self) -> &Arc<QueryMatrix> {
        &self.query
    }

    /// Dual certificate `y` from the last solve: `<q, y> <= ||q||_K` for every `q`.
    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    pub fn total_pivots(&self) -> u64 {
        self.total_pivots
    }

    pub fn solves(&self) -> u64 {
        self.solves
    }

    /// `<q, y>` for the cached dual certificate.
    pub fn dual_lower_bound(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.dual).map(|(a, b)| a * b).sum()
    }

    fn column_entry(&self, j: usize, row: usize) -> f64 {
        if j < self.n {
            self.query.get(row, j)
        } else {
            -self.query.get(row, j - self.n)
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let d = self.d;
        let b = DMatrix::from_fn(d, d, |i, k| self.column_entry(self.basis[k], i));
        let inv = b.try_inverse().ok_or(Error::RankDeficient)?;
        for i in 0..d {
            for k in 0..d {
                self.binv[i * d + k] = inv[(i, k)];
            }
        }
        self.pivots_since_refactor = 0;
        self.update_dual();
        Ok(())
    }

    fn update_dual(&mut self) {
        let d = self.d;
        for k in 0..d {
            self.dual[k] = (0..d).map(|i| self.binv[i * d + k]).sum();
        }
        self.query.apply_transpose_into(&self.dual, &mut self.dual_image);
    }

    fn compute_primal(&mut self, p: &[f64]) {
        let d = self.d;
        for i in 0..d {
            self.x_basic[i] = self.binv[i * d..(i + 1) * d]
                .iter()
                .zip(p)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// Exact gauge of `p`; `f64::INFINITY` when `p` is outside the range of `F`.
    pub fn gauge(&mut self, p: &[f64]) -> Result<f64> {
        debug_assert_eq!(p.len(), self.d);
        self.solves += 1;
        let d = self.d;
        let scale = 1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.compute_primal(p);
        for _ in 0..MAX_PIVOTS_PER_SOLVE {
            let (leave, most_negative) = self
                .x_basic
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            if most_negative >= -PRIMAL_TOL * scale {
                return Ok(self.x_basic.iter().sum::<f64>());
            }
            // Pivot row alpha_j = (B^{-1})_leave . g_j, via h = F^T (B^{-1})_leave.
            self.scratch_row
                .copy_from_slice(&self.binv[leave * d..(leave + 1) * d]);
            self.query
                .apply_transpose_into(&self.scratch_row, &mut self.scratch_image);
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..2 * self.n {
                let (h, q) = if j < self.n {
                    (self.scratch_image[j], self.dual_image[j])
                } else {
                    (-self.scratch_image[j - self.n], -self.dual_image[j - self.n])
                };
                if h < -PIVOT_TOL {
                    let reduced = (1.0 - q).max(0.0);
                    let ratio = reduced / -h;
                    let better = match enter {
                        None => true,
                        Some((_, best, best_h)) => {
                            ratio < best - 1e-13 || (ratio <= best + 1e-13 && -h > -best_h)
                        }
                    };
                    if better {
                        enter = Some((j, ratio, h));
                    }
                }
            }
            let Some((j, _, alpha)) = enter else {
                return Ok(f64::INFINITY);
            };
            self.pivot(leave, j, alpha)?;
            self.compute_primal(p);
        }
        Err(Error::NonConvergence {
            iterations: MAX_PIVOTS_PER_SOLVE,
            context: "dual simplex gauge".into(),
        })
    }

    fn pivot(&mut self, leave: usize, enter: usize, alpha: f64) -> Result<()> {
        let d = self.d;
        self.total_pivots += 1;
        self.basis[leave] = enter;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            return self.refactor();
        }
        // u = B^{-1} g_enter
        let mut u = vec![0.0; d];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = (0..d)
                .map(|k| self.binv[i * d + k] * self.column_entry(enter, k))
                .sum();
        }
        let pivot = u[leave];
        if (pivot - alpha).abs() > 1e-6 * (1.0 + alpha.abs()) || pivot.abs() < PIVOT_TOL {
            return self.refactor();
        }
        for k in 0..d {
            self.binv[leave * d + k] /= pivot;
        }
        let pivot_row: Vec<f64> = self.binv[leave * d..(leave + 1) * d].to_vec();
        for i in 0..d {
            if i == leave || u[i] == 0.0 {
                continue;
            }
            for k in 0..d {
                self.binv[i * d + k] -= u[i] * pivot_row[k];
            }
        }
        self.update_dual();
        Ok(())
    }

    /// A minimum-`l1` preimage `x` with `F x = p` from the last solve.
    pub fn preimage(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.basis.iter().zip(&self.x_basic) {
            let v = v.max(0.0);
            if j < self.n {
                x[j] += v;
            } else {
                x[j - self.n] -= v;
            }
        }
        x
    }
}
