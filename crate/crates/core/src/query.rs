//! Query matrices, histogram databases, and exact evaluation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest `d` accepted by [`hypercube_query`]; the matrix has `2^d` columns.
pub const HYPERCUBE_MAX_DIM: usize = 20;

/// A `d x n` linear query map, stored dense and row-major.
///
/// Matrices built with [`QueryMatrix::new`] satisfy `|F_ij| <= 1` and `d <= n`.
/// Queries expressed in rotated subspace coordinates (see
/// `geometry::project_query`) relax the entry bound and are built with
/// [`QueryMatrix::relaxed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    bounded: bool,
}

impl QueryMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if rows > cols {
            return Err(Error::InvalidDimensions(format!(
                "need d <= n, got d = {rows}, n = {cols}"
            )));
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(value.abs() <= 1.0) {
                return Err(Error::EntryOutOfRange {
                    row: idx / cols,
                    col: idx % cols,
                    value,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            data,
            bounded: true,
        })
    }

    /// A query without the `[-1, 1]` entry bound or the `d <= n` requirement.
    pub fn relaxed(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite query entry".into()));
        }
        Ok(Self {
            rows,
            cols,
            data,
            bounded: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDimensions("ragged rows".into()));
        }
        Self::new(d, n, rows.concat())
    }

    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        Self::new(d, d, data).expect("identity is a valid query")
    }

    /// Number of queries `d`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Histogram dimension `n`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    /// `out = F x`, no allocation.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = F^T y`.
    pub fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &f) in out.iter_mut().zip(self.row(i)) {
                *o += yi * f;
            }
        }
    }

    /// Half-widths of the tightest axis-aligned box around `F B_1^n`: `max_j |F_ij|`.
    pub fn row_extents(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    }

    /// Returns a copy with column `col` appended again at the end.
    pub fn with_duplicate_column(&self, col: usize) -> Self {
        let n = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * n);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.push(self.get(i, col));
        }
        Self {
            rows: self.rows,
            cols: n,
            data,
            bounded: self.bounded,
        }
    }

    /// Text format: a `d n` header line, then `d` lines of `n` decimals.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
        let [d, n] = dims[..] else {
            return Err(Error::Parse(format!("header must be `d n`, got {header:?}")));
        };
        let mut data = Vec::with_capacity(d * n);
        for (i, line) in lines.by_ref().take(d).enumerate() {
            let row = parse_decimals(line)?;
            if row.len() != n {
                return Err(Error::Parse(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend(row);
        }
        if data.len() != d * n {
            return Err(Error::Parse(format!("expected {d} rows")));
        }
        Self::new(d, n, data)
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions(format!("empty matrix {rows}x{cols}")));
    }
    if len != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: len,
        });
    }
    Ok(())
}

fn parse_decimals(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

/// A histogram database `x` in `R^n`. Fractional entries are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Database(pub Vec<f64>);

impl Database {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn l1_distance(&self, other: &Database) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Database file: one line of `n` decimals.
    pub fn parse_text(text: &str) -> Result<Self> {
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Parse("empty database file".into()))?;
        Ok(Self(parse_decimals(line)?))
    }

    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        format!("{}\n", parts.join(" "))
    }
}

/// Two databases at `l1` distance at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborPair {
    x: Database,
    y: Database,
}

impl NeighborPair {
    pub fn new(x: Database, y: Database) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let dist = x.l1_distance(&y);
        if dist > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "neighbors must be within l1 distance 1, got {dist}"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn first(&self) -> &Database {
        &self.x
    }

    pub fn second(&self) -> &Database {
        &self.y
    }
}

/// The exact answer `F x`.
pub fn evaluate(query: &QueryMatrix, x: &Database) -> Result<Vec<f64>> {
    if x.len() != query.cols() {
        return Err(Error::DimensionMismatch {
            expected: query.cols(),
            got: x.len(),
        });
    }
    let mut out = vec![0.0; query.rows()];
    query.apply_into(x.as_slice(), &mut out);
    Ok(out)
}

/// `sup_{x in B_1^n} ||F x||_1`, which for a linear map is the largest column `l1` norm.
pub fn sensitivity(query: &QueryMatrix) -> f64 {
    let mut sums = vec![0.0f64; query.cols()];
    for i in 0..query.rows() {
        for (s, v) in sums.iter_mut().zip(query.row(i)) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// A `d x n` matrix of independent fair `+-1` entries.
pub fn random_bernoulli_query(d: usize, n: usize, rng: &mut RngStream) -> Result<QueryMatrix> {
    if d == 0 || d > n {
        return Err(Error::InvalidDimensions(format!(
            "need 1 <= d <= n, got d = {d}, n = {n}"
        )));
    }
    let data = (0..d * n)
        .map(|_| if rng.coin() { 1.0 } else { -1.0 })
        .collect();
    QueryMatrix::new(d, n, data)
}

/// All `2^d` sign vectors of `{-1, 1}^d` as columns.
///
/// Column `j` has entry `-1` in row `i` when bit `d-1-i` of `j` is set, so
/// columns run lexicographically from `(+1, ..., +1)` to `(-1, ..., -1)`.
pub fn hypercube_query(d: usize) -> Result<QueryMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimensions("hypercube query needs d >= 1".into()));
    }
    if d > HYPERCUBE_MAX_DIM {
        return Err(Error::CapacityExceeded(format!(
            "hypercube query limited to d <= {HYPERCUBE_MAX_DIM}, got {d}"
        )));
    }
    let n = 1usize << d;
    let mut data = Vec::with_capacity(d * n);
    for i in 0..d {
        let bit = d - 1 - i;
        data.extend((0..n).map(|j| if (j >> bit) & 1 == 1 { -1.0 } else { 1.0 }));
    }
    QueryMatrix::new(d, n, data)
}
