//! Level-set oracles used by the samplers.
//!
//! A body is `{p : level(p) <= 1}`. The grid walk only needs to decide
//! membership, and it avoids most solves by tracking an upper bound on the
//! current level together with a per-step increment bound.

use std::sync::Arc;

use super::frank_wolfe::distance_bounds;
use super::gauge::GaugeOracle;
use crate::error::Result;
use crate::query::QueryMatrix;

pub trait LevelOracle: Send {
    fn dim(&self) -> usize;

    /// Level of `p`. An upper bound is acceptable when it is `<= 1` and a lower
    /// bound when it is `> 1`; the membership decision is what must be right.
    fn level(&mut self, p: &[f64]) -> Result<f64>;

    /// Upper bound on `level(p + s) - level(p)` valid for every `p`.
    fn increment_bound(&mut self, s: &[f64]) -> Result<f64>;

    /// A cheap lower bound on `level(p)`; zero when nothing better is known.
    fn quick_lower_bound(&self, _p: &[f64]) -> f64 {
        0.0
    }

    fn box_clone(&self) -> Box<dyn LevelOracle>;
}

/// `K = F B_1^n`, level = exact gauge.
impl LevelOracle for GaugeOracle {
    fn dim(&self) -> usize {
        GaugeOracle::dim(self)
    }

    fn level(&mut self, p: &[f64]) -> Result<f64> {
        self.gauge(p)
    }

    fn increment_bound(&mut self, s: &[f64]) -> Result<f64> {
        // Gauges are sublinear.
        self.gauge(s)
    }

    fn quick_lower_bound(&self, p: &[f64]) -> f64 {
        self.dual_lower_bound(p)
    }

    fn box_clone(&self) -> Box<dyn LevelOracle> {
        Box::new(self.clone())
    }
}

/// `K' = K + rho B_2^d`, level = `dist(p, K) / rho`, decided to accuracy `eta`.
#[derive(Clone, Debug)]
pub struct InflatedOracle {
    query: Arc<QueryMatrix>,
    rho: f64,
    eta: f64,
    max_iter: usize,
}

impl InflatedOracle {
    pub fn new(query: Arc<QueryMatrix>, rho: f64, eta: f64) -> Self {
        let max_iter = super::frank_wolfe::default_iteration_cap(query.rows(), query.cols(), eta);
        Self {
            query,
            rho,
            eta,
            max_iter,
        }
    }
}

impl LevelOracle for InflatedOracle {
    fn dim(&self) -> usize {
        self.query.rows()
    }

    fn level(&mut self, p: &[f64]) -> Result<f64> {
        let (rho, eta) = (self.rho, self.eta);
        let b = distance_bounds(&self.query, p, 1.0, self.max_iter, |lo, up| {
            up <= rho || lo > rho || up - lo <= eta
        })?;
        if b.upper <= rho {
            Ok(b.upper / rho)
        } else if b.lower > rho {
            Ok(b.lower / rho)
        } else {
            // Inside the eta band: the weak oracle answers yes.
            Ok(1.0)
        }
    }

    fn increment_bound(&mut self, s: &[f64]) -> Result<f64> {
        Ok(s.iter().map(|v| v * v).sum::<f64>().sqrt() / self.rho)
    }

    fn box_clone(&self) -> Box<dyn LevelOracle> {
        Box::new(self.clone())
    }
}
