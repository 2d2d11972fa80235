//! Dense two-phase tableau simplex for small linear programs.
//!
//! Problems are `minimize c.x` subject to row constraints and `x >= 0`.
//! Pivoting uses Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots, which rules out cycling.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic column per constraint row. Structural columns are `0..num_vars`;
    /// larger indices are slack, surplus, or artificial columns. `None` marks a
    /// redundant equality row.
    pub basis: Vec<Option<usize>>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.num_vars);
        self.objective = c;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a sparse row given as `(column, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, v) in terms {
            coeffs[j] += v;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    rows: usize,
    /// Columns excluding the rhs.
    cols: usize,
    num_vars: usize,
    first_artificial: usize,
    data: Vec<f64>,
    basis: Vec<Option<usize>>,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n = lp.num_vars;
        let extra = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        let artificials = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let first_artificial = n + extra;
        let cols = first_artificial + artificials;
        let width = cols + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![None; m];
        let mut next_slack = n;
        let mut next_art = first_artificial;
        for (i, (coeffs, rel, rhs)) in normalized.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..n].copy_from_slice(coeffs);
            row[cols] = *rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = Some(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = Some(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = Some(next_art);
                    next_art += 1;
                }
            }
        }
        Self {
            rows: m,
            cols,
            num_vars: n,
            first_artificial,
            data,
            basis,
            iterations: 0,
        }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Loads `cost` into the objective row and prices out the basis.
    fn load_objective(&mut self, cost: &[f64]) {
        let w = self.width();
        let m = self.rows;
        let obj = m * w;
        for c in 0..w {
            self.data[obj + c] = if c < cost.len() { cost[c] } else { 0.0 };
        }
        for r in 0..m {
            if let Some(b) = self.basis[r] {
                let cb = self.data[obj + b];
                if cb != 0.0 {
                    for c in 0..w {
                        self.data[obj + c] -= cb * self.data[r * w + c];
                    }
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = Some(pc);
        self.iterations += 1;
    }

    /// Runs simplex iterations on the loaded objective. Columns at or beyond
    /// `enter_limit` never enter.
    fn optimize(&mut self, enter_limit: usize) -> Result<()> {
        let w = self.width();
        let obj = self.rows * w;
        let max_iter = 50_000 + 50 * (self.rows + self.cols);
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for c in 0..enter_limit {
                let rc = self.data[obj + c];
                if rc < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(pc) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r * w + pc];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12
                                    && self.basis[r].unwrap_or(usize::MAX)
                                        < self.basis[lr].unwrap_or(usize::MAX))
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            degenerate_run = if ratio.abs() < 1e-12 { degenerate_run + 1 } else { 0 };
            self.pivot(pr, pc);
        }
        Err(Error::NonConvergence {
            iterations: max_iter,
            context: "simplex iteration cap".into(),
        })
    }

    fn solve(mut self, cost: &[f64]) -> Result<LpSolution> {
        let w = self.width();
        if self.first_artificial < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            self.load_objective(&phase1);
            self.optimize(self.cols)?;
            let infeasibility = -self.data[self.rows * w + self.cols];
            if infeasibility > FEAS_TOL * (1.0 + self.max_rhs()) {
                return Err(Error::Infeasible);
            }
            self.evict_artificials();
        }
        self.load_objective(cost);
        self.optimize(self.first_artificial)?;

        let mut x = vec![0.0; self.num_vars];
        for (r, b) in self.basis.iter().enumerate() {
            if let Some(b) = *b {
                if b < self.num_vars {
                    x[b] = self.rhs(r).max(0.0);
                }
            }
        }
        let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            basis: self.basis,
            iterations: self.iterations,
        })
    }

    fn max_rhs(&self) -> f64 {
        (0..self.rows).map(|r| self.rhs(r).abs()).fold(0.0, f64::max)
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are redundant and get zeroed.
    fn evict_artificials(&mut self) {
        let w = self.width();
        for r in 0..self.rows {
            let Some(b) = self.basis[r] else { continue };
            if b < self.first_artificial {
                continue;
            }
            let col = (0..self.first_artificial)
                .filter(|&c| self.data[r * w + c].abs() > 1e-9)
                .max_by(|&a, &b| {
                    self.data[r * w + a]
                        .abs()
                        .total_cmp(&self.data[r * w + b].abs())
                });
            match col {
                Some(c) => self.pivot(r, c),
                None => {
                    for c in 0..w {
                        self.data[r * w + c] = 0.0;
                    }
                    self.basis[r] = None;
                }
            }
        }
    }
}
