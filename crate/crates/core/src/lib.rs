//! Geometry-aware private release of linear queries.
//!
//! A query is a `d x n` matrix `F`; the noise of the K-norm mechanisms is
//! shaped by the body `K = F B_1^n`. The crate covers sampling from `K`,
//! its volume and covariance, the mechanisms themselves, volume lower
//! bounds, and empirical privacy audits.

pub mod auditor;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod lp;
pub mod mechanisms;
pub mod query;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::PolytopeHandle;
pub use mechanisms::{Mechanism, MechanismKind, NoiseSample};
pub use query::{Database, NeighborPair, QueryMatrix};
pub use rng::RngStream;
