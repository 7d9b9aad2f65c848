//! Dense GF(2) elimination on bit-packed rows.

use super::ParityCheckMatrix;

fn packed_rows(h: &ParityCheckMatrix) -> (Vec<Vec<u64>>, usize) {
    let words = h.n_cols().div_ceil(64);
    let rows = h
        .rows()
        .iter()
        .map(|row| {
            let mut r = vec![0u64; words];
            for &i in row {
                r[i / 64] |= 1 << (i % 64);
            }
            r
        })
        .collect();
    (rows, words)
}

fn bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(rows: &mut Vec<Vec<u64>>, n_cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n_cols {
        let Some(p) = (r..rows.len()).find(|&k| bit(&rows[k], c)) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != r && bit(row, c) {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Rank of `H` over GF(2).
pub fn gf2_rank(h: &ParityCheckMatrix) -> usize {
    let (mut rows, _) = packed_rows(h);
    rref(&mut rows, h.n_cols()).len()
}

/// A basis of the code `{c : H·cᵀ = 0}`, one 0/1 vector per basis element.
pub fn nullspace_basis(h: &ParityCheckMatrix) -> Vec<Vec<u8>> {
    let n = h.n_cols();
    let (mut rows, _) = packed_rows(h);
    let pivots = rref(&mut rows, n);
    let is_pivot = {
        let mut v = vec![false; n];
        pivots.iter().for_each(|&c| v[c] = true);
        v
    };
    (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|free| {
            let mut c = vec![0u8; n];
            c[free] = 1;
            for (r, &p) in pivots.iter().enumerate() {
                if bit(&rows[r], free) {
                    c[p] = 1;
                }
            }
            c
        })
        .collect()
}
