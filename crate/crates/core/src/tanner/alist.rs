//! The alist sparse-matrix text format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based check indices of each column>
//! <m lines: 1-based variable indices of each row>
//! ```
//!
//! Neighbor lists may be zero-padded to the maximum degree; trailing zeros
//! are ignored, so an empty list is written as a single `0`. Blank lines are
//! skipped.

use super::ParityCheckMatrix;
use crate::error::{Error, Result};
use std::fmt::Write;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as `(1-based line number, tokens)`.
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (idx, line) in self.inner.by_ref() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                return Ok((idx + 1, tokens));
            }
        }
        Err(Error::Alist { line: 0, msg: format!("unexpected end of input, expected {what}") })
    }

    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        let (line, tokens) = self.next_tokens(what)?;
        let nums = tokens
            .iter()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Alist {
                    line,
                    msg: format!("{what}: `{t}` is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((line, nums))
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Alist { line, msg: msg.into() }
}

/// Reads a neighbor list, dropping trailing zero padding and converting to
/// 0-based indices.
fn neighbor_list(
    lines: &mut Lines,
    what: &str,
    degree: usize,
    bound: usize,
) -> Result<(usize, Vec<usize>)> {
    let (line, mut nums) = lines.next_numbers(what)?;
    while nums.last() == Some(&0) {
        nums.pop();
    }
    if nums.len() != degree {
        return Err(err(
            line,
            format!("{what}: declared degree {degree} but {} neighbors listed", nums.len()),
        ));
    }
    let mut out = Vec::with_capacity(degree);
    for &x in &nums {
        if x == 0 || x > bound {
            return Err(err(line, format!("{what}: index {x} out of range 1..={bound}")));
        }
        out.push(x - 1);
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(err(line, format!("{what}: duplicate neighbor index")));
    }
    Ok((line, sorted))
}

fn expect_len(line: usize, nums: &[usize], len: usize, what: &str) -> Result<()> {
    if nums.len() != len {
        return Err(err(line, format!("{what}: expected {len} values, found {}", nums.len())));
    }
    Ok(())
}

/// Parses an alist document into a matrix, cross-checking the column and row
/// views against each other.
pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut lines = Lines { inner: text.lines().enumerate() };

    let (line, dims) = lines.next_numbers("header `n m`")?;
    expect_len(line, &dims, 2, "header `n m`")?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(err(line, "matrix dimensions must be positive"));
    }

    let (line, maxes) = lines.next_numbers("maximum degrees")?;
    expect_len(line, &maxes, 2, "maximum degrees")?;
    let (max_col, max_row) = (maxes[0], maxes[1]);

    let (col_line, col_deg) = lines.next_numbers("column degrees")?;
    expect_len(col_line, &col_deg, n, "column degrees")?;
    if let Some(&d) = col_deg.iter().find(|&&d| d > max_col) {
        return Err(err(col_line, format!("column degree {d} exceeds declared maximum {max_col}")));
    }

    let (row_line, row_deg) = lines.next_numbers("row degrees")?;
    expect_len(row_line, &row_deg, m, "row degrees")?;
    if let Some(&d) = row_deg.iter().find(|&&d| d > max_row) {
        return Err(err(row_line, format!("row degree {d} exceeds declared maximum {max_row}")));
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(err(row_line, "row and column degrees have different totals"));
    }

    let mut cols = Vec::with_capacity(n);
    for (i, &d) in col_deg.iter().enumerate() {
        let (_, list) = neighbor_list(&mut lines, &format!("column {}", i + 1), d, m)?;
        cols.push(list);
    }

    let mut rows = Vec::with_capacity(m);
    for (j, &d) in row_deg.iter().enumerate() {
        let (line, list) = neighbor_list(&mut lines, &format!("row {}", j + 1), d, n)?;
        for &i in &list {
            if cols[i].binary_search(&j).is_err() {
                return Err(err(
                    line,
                    format!("row {} lists column {} but that column does not list the row", j + 1, i + 1),
                ));
            }
        }
        rows.push(list);
    }

    if let Ok((line, _)) = lines.next_tokens("") {
        return Err(err(line, "trailing content after the last row list"));
    }

    let h = ParityCheckMatrix::new(n, rows)?;
    h.warn_degenerate();
    Ok(h)
}

/// Canonical alist serialization (no zero padding, `\n` line endings).
pub fn to_alist(h: &ParityCheckMatrix) -> String {
    let col_deg = h.col_degrees();
    let row_deg = h.row_degrees();
    let mut cols = vec![Vec::new(); h.n_cols()];
    for (j, row) in h.rows().iter().enumerate() {
        for &i in row {
            cols[i].push(j);
        }
    }

    fn join(it: impl Iterator<Item = usize>) -> String {
        let s = it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "{} {}", h.n_cols(), h.n_rows());
    let _ = writeln!(
        out,
        "{} {}",
        col_deg.iter().copied().max().unwrap_or(0),
        row_deg.iter().copied().max().unwrap_or(0)
    );
    let degrees = |d: &[usize]| d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{}", degrees(&col_deg));
    let _ = writeln!(out, "{}", degrees(&row_deg));
    for col in &cols {
        let _ = writeln!(out, "{}", join(col.iter().map(|j| j + 1)));
    }
    for row in h.rows() {
        let _ = writeln!(out, "{}", join(row.iter().map(|i| i + 1)));
    }
    out
}
