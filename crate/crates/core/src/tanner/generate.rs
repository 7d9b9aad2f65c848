use super::{build_graph, ParityCheckMatrix};
use crate::error::{Error, Result};
use crate::rng;
use rand::seq::SliceRandom;

/// Random `(col_weight, row_weight)`-regular matrix with `n_rows` checks and
/// `n_cols` variables, built by socket matching.
///
/// `attempts` independent matchings are drawn from `seed`; among those without
/// repeated entries the one with the fewest 4-cycles wins, earliest first.
pub fn random_regular(n_rows: usize, n_cols: usize, col_weight: usize, seed: u64, attempts: usize) -> Result<ParityCheckMatrix> {
    if n_rows == 0 || n_cols == 0 || col_weight == 0 || col_weight > n_rows {
        return Err(Error::Config(format!(
            "cannot build a {n_rows}x{n_cols} matrix with column weight {col_weight}"
        )));
    }
    if (n_cols * col_weight) % n_rows != 0 {
        return Err(Error::Config(format!(
            "{n_cols} columns of weight {col_weight} do not split evenly over {n_rows} rows"
        )));
    }
    let row_weight = n_cols * col_weight / n_rows;
    if row_weight > n_cols {
        return Err(Error::Config("row weight exceeds the number of columns".into()));
    }

    let mut best: Option<(usize, ParityCheckMatrix)> = None;
    for attempt in 0..attempts.max(1) {
        let mut rng = rng::substream(seed, 0, attempt as u64);
        let mut sockets: Vec<usize> = (0..n_cols).flat_map(|v| std::iter::repeat(v).take(col_weight)).collect();
        sockets.shuffle(&mut rng);
        let mut rows: Vec<Vec<usize>> = sockets.chunks(row_weight).map(<[usize]>::to_vec).collect();
        let mut simple = true;
        for r in &mut rows {
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                simple = false;
                break;
            }
        }
        if !simple {
            continue;
        }
        let h = ParityCheckMatrix::new(n_cols, rows)?;
        let cycles = build_graph(&h).enumerate_4cycles().len();
        if best.as_ref().map_or(true, |(c, _)| cycles < *c) {
            best = Some((cycles, h));
        }
    }
    best.map(|(_, h)| h)
        .ok_or_else(|| Error::Config(format!("no simple matching found in {attempts} attempts")))
}
