//! Spatial weight matrices: regular lattice grids (rook/queen, optional torus
//! wrap) and general adjacency lists.
//!
//! Every public constructor row-standardizes, so downstream code can assume
//! `sum_j w_ij = 1` for every row. The raw (pre-standardization) weights are
//! kept alongside for connectivity bookkeeping and lossless export.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Contiguity scheme on a regular grid: shared edges only, or edges plus corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rook,
    Queen,
}

impl Scheme {
    fn offsets(self) -> &'static [(i64, i64)] {
        const ROOK: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const QUEEN: [(i64, i64); 8] = [
            (-1, 0),
            (1, 0),
            (0, -1),
            (0, 1),
            (-1, -1),
            (-1, 1),
            (1, -1),
            (1, 1),
        ];
        match self {
            Scheme::Rook => &ROOK,
            Scheme::Queen => &QUEEN,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rook => "rook",
            Scheme::Queen => "queen",
        }
    }

    /// Single-letter label used in the study tables.
    pub fn letter(self) -> &'static str {
        match self {
            Scheme::Rook => "R",
            Scheme::Queen => "Q",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rook" | "r" => Ok(Scheme::Rook),
            "queen" | "q" => Ok(Scheme::Queen),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A regular rows x cols grid with a contiguity scheme and optional wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub scheme: Scheme,
    pub torus: bool,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize, scheme: Scheme, torus: bool) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::DegenerateGrid { rows, cols });
        }
        Ok(LatticeSpec {
            rows,
            cols,
            scheme,
            torus,
        })
    }

    /// Number of locations on the grid.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }
}

impl std::fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{} {}{}",
            self.rows,
            self.cols,
            self.scheme,
            if self.torus { " torus" } else { "" }
        )
    }
}

/// Default tolerance for the symmetry check, calibrated for f64 weights.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Sparse row-standardized spatial weight matrix.
///
/// Rows are neighbor lists sorted by column index. `connectivity` holds the
/// pre-standardization row sums (eta_i), and the raw weights are retained so
/// that exporting and re-ingesting reproduces the matrix bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    n: usize,
    rows: Vec<Vec<(usize, T)>>,
    raw: Vec<Vec<T>>,
    connectivity: Vec<T>,
    eta_bar: T,
    tr_w2: T,
    standardized: bool,
}

impl<T: Scalar> WeightMatrix<T> {
    /// Binary contiguity weights for a regular grid, then row-standardized.
    ///
    /// Wrap-around duplicates (possible on torus dimensions of length 2)
    /// collapse to a single binary edge.
    pub fn from_lattice(spec: &LatticeSpec) -> Result<Self> {
        if spec.rows < 2 || spec.cols < 2 {
            return Err(Error::DegenerateGrid {
                rows: spec.rows,
                cols: spec.cols,
            });
        }
        let (rows, cols) = (spec.rows as i64, spec.cols as i64);
        let n = spec.len();
        let mut raw_rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        for r in 0..rows {
            for c in 0..cols {
                let mut nbrs = BTreeSet::new();
                for &(dr, dc) in spec.scheme.offsets() {
                    let (mut rr, mut cc) = (r + dr, c + dc);
                    if spec.torus {
                        rr = rr.rem_euclid(rows);
                        cc = cc.rem_euclid(cols);
                    } else if rr < 0 || rr >= rows || cc < 0 || cc >= cols {
                        continue;
                    }
                    let j = (rr * cols + cc) as usize;
                    nbrs.insert(j);
                }
                raw_rows.push(nbrs.into_iter().map(|j| (j, T::one())).collect());
            }
        }
        Self::finish(n, raw_rows)
    }

    /// Build from `(i, j, raw_weight)` edges, then row-standardize.
    pub fn from_adjacency(pairs: &[(usize, usize, T)], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("adjacency list with n = 0"));
        }
        let mut raw_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for &(i, j, w) in pairs {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !w.is_finite() || w <= T::zero() {
                return Err(Error::NonpositiveWeight { i, j });
            }
            if raw_rows[i].iter().any(|&(col, _)| col == j) {
                return Err(Error::DuplicateEdge { i, j });
            }
            raw_rows[i].push((j, w));
        }
        for row in &mut raw_rows {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        Self::finish(n, raw_rows)
    }

    fn finish(n: usize, raw_rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let isolated: Vec<usize> = (0..n).filter(|&i| raw_rows[i].is_empty()).collect();
        if !isolated.is_empty() {
            return Err(Error::IsolatedNodes(isolated));
        }
        let mut rows = Vec::with_capacity(n);
        let mut raw = Vec::with_capacity(n);
        let mut connectivity = Vec::with_capacity(n);
        for row in raw_rows {
            let eta: T = row.iter().map(|&(_, w)| w).sum();
            connectivity.push(eta);
            raw.push(row.iter().map(|&(_, w)| w).collect());
            rows.push(row.into_iter().map(|(j, w)| (j, w / eta)).collect());
        }
        let mut wm = WeightMatrix {
            n,
            rows,
            raw,
            connectivity,
            eta_bar: T::zero(),
            tr_w2: T::zero(),
            standardized: true,
        };
        let total: T = wm.rows.iter().flatten().map(|&(_, w)| w).sum();
        wm.eta_bar = total / cast(n as f64);
        wm.tr_w2 = wm.compute_tr_w2();
        Ok(wm)
    }

    fn compute_tr_w2(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for &(j, wij) in &self.rows[i] {
                acc += wij * self.weight(j, i);
            }
        }
        acc
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Standardized neighbor list of location `i`, sorted by column.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    /// Standardized weight w_ij (zero when j is not a neighbor of i).
    pub fn weight(&self, i: usize, j: usize) -> T {
        match self.rows[i].binary_search_by_key(&j, |&(col, _)| col) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => T::zero(),
        }
    }

    /// Pre-standardization row sums eta_i.
    pub fn connectivity(&self) -> &[T] {
        &self.connectivity
    }

    /// Average connectivity of the standardized matrix (1 up to rounding).
    pub fn eta_bar(&self) -> T {
        self.eta_bar
    }

    /// Trace of W^2 over the standardized weights.
    pub fn tr_w2(&self) -> T {
        self.tr_w2
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Raw-weight edge list; re-ingesting it through [`WeightMatrix::from_adjacency`]
    /// reproduces this matrix exactly.
    pub fn to_adjacency(&self) -> Vec<(usize, usize, T)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for (&(j, _), &w) in self.rows[i].iter().zip(&self.raw[i]) {
                edges.push((i, j, w));
            }
        }
        edges
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric_within(cast(SYMMETRY_TOL))
    }

    /// True iff |w_ij - w_ji| <= tol for every stored pair.
    pub fn is_symmetric_within(&self, tol: T) -> bool {
        for i in 0..self.n {
            for &(j, wij) in &self.rows[i] {
                if (wij - self.weight(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}
