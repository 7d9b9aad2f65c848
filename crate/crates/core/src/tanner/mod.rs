//! Parity-check matrices and their Tanner graphs.
//!
//! Indices are 0-based everywhere in the library; the alist and culprit file
//! formats and all user-facing output are 1-based.

mod alist;
mod culprits;
mod generate;
mod gf2;
mod graph;

pub use alist::{parse_alist, to_alist};
pub use culprits::{parse_culprits_file, select_culprits, CulpritSet};
pub use generate::random_regular;
pub use gf2::{gf2_rank, nullspace_basis};
pub use graph::{build_graph, EdgeRef, FourCycle, TannerGraph};

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};

/// Sparse binary parity-check matrix `H`, stored as sorted column lists per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-row column indices. Rows are sorted; duplicate
    /// or out-of-range indices are rejected.
    pub fn new(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut rows = rows;
        for (j, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(&i) = row.iter().find(|&&i| i >= n_cols) {
                return Err(Error::Matrix(format!(
                    "row {j}: column {i} out of range for {n_cols} columns"
                )));
            }
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Matrix(format!("row {j}: duplicate column index")));
            }
        }
        Ok(ParityCheckMatrix { n_cols, rows })
    }

    /// Builds a matrix from dense 0/1 rows.
    pub fn from_dense<R: AsRef<[u8]>>(dense: &[R]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, |r| r.as_ref().len());
        let mut rows = Vec::with_capacity(dense.len());
        for (j, r) in dense.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::Matrix(format!("row {j} has {} entries, expected {n_cols}", r.len())));
            }
            let mut row = Vec::new();
            for (i, &b) in r.iter().enumerate() {
                match b {
                    0 => {}
                    1 => row.push(i),
                    _ => return Err(Error::Matrix(format!("entry ({j}, {i}) is not binary"))),
                }
            }
            rows.push(row);
        }
        Self::new(n_cols, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[usize] {
        &self.rows[j]
    }

    /// Number of 1-entries.
    pub fn n_ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, check: usize, var: usize) -> bool {
        self.rows
            .get(check)
            .is_some_and(|row| row.binary_search(&var).is_ok())
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_cols];
        for &i in self.rows.iter().flatten() {
            deg[i] += 1;
        }
        deg
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&j| self.rows[j].is_empty()).collect()
    }

    pub fn zero_cols(&self) -> Vec<usize> {
        let deg = self.col_degrees();
        (0..self.n_cols).filter(|&i| deg[i] == 0).collect()
    }

    /// Logs a warning for every all-zero row or column.
    pub fn warn_degenerate(&self) {
        let rows = self.zero_rows();
        if !rows.is_empty() {
            log::warn!("parity-check matrix has all-zero rows (0-based): {rows:?}");
        }
        let cols = self.zero_cols();
        if !cols.is_empty() {
            log::warn!("parity-check matrix has all-zero columns (0-based): {cols:?}");
        }
    }

    /// Rows of odd weight. The tanh check rule with the `log P(1)/P(0)` LLR
    /// sign convention is only exact on checks of even degree.
    pub fn odd_weight_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&j| self.rows[j].len() % 2 == 1).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = vec![0u8; self.n_cols];
                for &i in row {
                    r[i] = 1;
                }
                r
            })
            .collect()
    }

    /// Copy of `self` with the listed 1-entries cleared.
    pub fn without_edges(&self, edges: &[EdgeRef]) -> Result<Self> {
        let mut rows = self.rows.clone();
        for e in edges {
            let row = rows.get_mut(e.check).ok_or(Error::NotAnEdge { check: e.check, var: e.var })?;
            match row.binary_search(&e.var) {
                Ok(pos) => {
                    row.remove(pos);
                }
                Err(_) => return Err(Error::NotAnEdge { check: e.check, var: e.var }),
            }
        }
        Ok(ParityCheckMatrix { n_cols: self.n_cols, rows })
    }

    /// `H·bitsᵀ` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        assert_eq!(bits.len(), self.n_cols, "bit vector length");
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &i| acc ^ (bits[i] & 1)))
            .collect()
    }

    /// True iff every row parity of `bits` is even.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.n_cols, "bit vector length");
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &i| acc ^ (bits[i] & 1)) == 0)
    }

    /// Hex SHA-256 of the canonical alist serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(to_alist(self).as_bytes()))
    }
}
