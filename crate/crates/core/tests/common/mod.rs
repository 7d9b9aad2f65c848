//! Independent oracles shared by the integration tests.
//!
//! The reference decoder works on a dense 0/1 matrix with plain nested loops
//! and per-iteration weight tables. It shares no code with the library's
//! decoder beyond the formulas themselves.

#![allow(dead_code)]

use neurolat::tanner::ParityCheckMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-12;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dense matrix where every row has at least two ones.
pub fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> Vec<Vec<u8>> {
    (0..m)
        .map(|_| loop {
            let row: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(density))).collect();
            if row.iter().filter(|&&b| b == 1).count() >= 2 {
                break row;
            }
        })
        .collect()
}

pub fn matrix(dense: &[Vec<u8>]) -> ParityCheckMatrix {
    ParityCheckMatrix::from_dense(dense).unwrap()
}

/// Per-edge messages of one iteration, indexed `[check][var]`.
#[derive(Debug, Clone)]
pub struct RefState {
    pub vc: Vec<Vec<f64>>,
    pub cv: Vec<Vec<f64>>,
    pub o_pre: Vec<f64>,
}

/// Weight tables indexed `[iteration][check][var]`.
pub struct RefWeights {
    pub vn: Vec<Vec<Vec<f64>>>,
    pub out: Vec<Vec<Vec<f64>>>,
}

impl RefWeights {
    pub fn unit(h: &[Vec<u8>], l: usize) -> Self {
        let ones = vec![vec![1.0; h[0].len()]; h.len()];
        RefWeights { vn: vec![ones.clone(); l], out: vec![ones; l] }
    }
}

fn clip(x: f64) -> f64 {
    x.clamp(-1.0 + EPS, 1.0 - EPS)
}

/// LLR whose tanh-domain value sits exactly at the clip boundary.
fn limit() -> f64 {
    2.0 * (1.0 - EPS).atanh()
}

/// `2 atanh(tanh(a/2) tanh(b/2))` in the stable pairwise form
/// `sgn(a) sgn(b) min(|a|,|b|) + ln(1+e^{-|a+b|}) - ln(1+e^{-|a-b|})`.
fn box_plus(a: f64, b: f64) -> f64 {
    let s = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    s * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Weighted sum-product for `l` iterations with no early exit.
pub fn reference_decode(h: &[Vec<u8>], llr: &[f64], l: usize, w: &RefWeights, updated: bool) -> Vec<RefState> {
    let m = h.len();
    let n = h[0].len();
    let mut out: Vec<RefState> = Vec::new();
    for t in 0..l {
        let mut vc = vec![vec![0.0; n]; m];
        for j in 0..m {
            for i in 0..n {
                if h[j][i] == 0 {
                    continue;
                }
                let mut s = match (updated, out.last()) {
                    (true, Some(p)) => p.o_pre[i],
                    _ => llr[i],
                };
                if let Some(p) = out.last() {
                    for k in 0..m {
                        if k != j && h[k][i] == 1 {
                            s += w.vn[t][k][i] * p.cv[k][i];
                        }
                    }
                }
                vc[j][i] = s;
            }
        }
        let mut cv = vec![vec![0.0; n]; m];
        for j in 0..m {
            for i in 0..n {
                if h[j][i] == 0 {
                    continue;
                }
                let acc = (0..n)
                    .filter(|&k| k != i && h[j][k] == 1)
                    .map(|k| vc[j][k].clamp(-limit(), limit()))
                    .reduce(box_plus)
                    .unwrap_or(f64::INFINITY);
                cv[j][i] = acc.clamp(-limit(), limit());
            }
        }
        for row in vc.iter_mut() {
            for x in row.iter_mut() {
                *x = clip((*x / 2.0).tanh());
            }
        }
        let o_pre = (0..n)
            .map(|i| llr[i] + (0..m).filter(|&j| h[j][i] == 1).map(|j| w.out[t][j][i] * cv[j][i]).sum::<f64>())
            .collect();
        out.push(RefState { vc, cv, o_pre });
    }
    out
}

/// Multiloss of a reference run against codeword `c`, computed through the
/// sigmoid directly.
pub fn reference_multiloss(states: &[RefState], c: &[u8]) -> f64 {
    let n = c.len() as f64;
    states
        .iter()
        .map(|s| {
            -s.o_pre
                .iter()
                .zip(c)
                .map(|(&x, &b)| {
                    let o = 1.0 / (1.0 + (-x).exp());
                    if b == 1 {
                        o.log2()
                    } else {
                        (1.0 - o).log2()
                    }
                })
                .sum::<f64>()
                / n
        })
        .sum()
}

/// The 7×8 parity-check matrix behind the BW8 lattice.
pub fn bw8_dense() -> Vec<Vec<u8>> {
    vec![
        vec![1, 1, 1, 1, 1, 1, 1, 1],
        vec![1, 0, 1, 0, 1, 0, 1, 0],
        vec![1, 1, 0, 0, 1, 1, 0, 0],
        vec![1, 1, 1, 1, 0, 0, 0, 0],
        vec![1, 0, 0, 0, 1, 0, 0, 0],
        vec![1, 0, 1, 0, 0, 0, 0, 0],
        vec![1, 1, 0, 0, 0, 0, 0, 0],
    ]
}

/// The seven hand-picked culprit edges for BW8, 0-based `(check, var)`.
pub const BW8_CULPRITS: [(usize, usize); 7] = [(0, 0), (0, 2), (0, 4), (1, 0), (2, 0), (3, 0), (3, 3)];

/// Counts 4-cycles of a dense matrix by checking every pair of rows and
/// every pair of columns.
pub fn brute_force_4cycles(h: &[Vec<u8>]) -> usize {
    let (m, n) = (h.len(), h[0].len());
    let mut count = 0;
    for a in 0..m {
        for b in a + 1..m {
            for x in 0..n {
                for y in x + 1..n {
                    if h[a][x] & h[a][y] & h[b][x] & h[b][y] == 1 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}
