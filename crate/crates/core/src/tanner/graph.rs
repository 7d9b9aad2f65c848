use super::ParityCheckMatrix;
use std::collections::VecDeque;
use std::fmt;

/// A 1-entry `(check j, variable i)` of `H`, i.e. one Tanner graph edge.
///
/// The derived ordering is row-major, which is the canonical edge order used
/// by weight vectors and files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub check: usize,
    pub var: usize,
}

impl EdgeRef {
    pub fn new(check: usize, var: usize) -> Self {
        EdgeRef { check, var }
    }
}

impl fmt::Display for EdgeRef {
    /// 1-based `check var`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.check + 1, self.var + 1)
    }
}

/// A 4-cycle: two checks sharing two variables. Stored with `checks.0 <
/// checks.1` and `vars.0 < vars.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FourCycle {
    pub checks: (usize, usize),
    pub vars: (usize, usize),
}

impl FourCycle {
    pub fn edges(&self) -> [EdgeRef; 4] {
        let (j1, j2) = self.checks;
        let (i1, i2) = self.vars;
        [
            EdgeRef::new(j1, i1),
            EdgeRef::new(j1, i2),
            EdgeRef::new(j2, i1),
            EdgeRef::new(j2, i2),
        ]
    }
}

/// Bipartite adjacency of a parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    var_adj: Vec<Vec<usize>>,
    chk_adj: Vec<Vec<usize>>,
    edges: Vec<EdgeRef>,
    var_edges: Vec<Vec<usize>>,
    chk_edges: Vec<Vec<usize>>,
}

pub fn build_graph(h: &ParityCheckMatrix) -> TannerGraph {
    TannerGraph::new(h)
}

impl TannerGraph {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n_cols();
        let mut var_adj = vec![Vec::new(); n];
        let mut var_edges = vec![Vec::new(); n];
        let mut chk_adj = Vec::with_capacity(h.n_rows());
        let mut chk_edges = Vec::with_capacity(h.n_rows());
        let mut edges = Vec::with_capacity(h.n_ones());
        for (j, row) in h.rows().iter().enumerate() {
            let mut ids = Vec::with_capacity(row.len());
            for &i in row {
                let e = edges.len();
                edges.push(EdgeRef::new(j, i));
                var_adj[i].push(j);
                var_edges[i].push(e);
                ids.push(e);
            }
            chk_adj.push(row.clone());
            chk_edges.push(ids);
        }
        TannerGraph { var_adj, chk_adj, edges, var_edges, chk_edges }
    }

    pub fn n_vars(&self) -> usize {
        self.var_adj.len()
    }

    pub fn n_checks(&self) -> usize {
        self.chk_adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical (row-major) edge list.
    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }

    /// `V_i`: checks adjacent to variable `i`, ascending.
    pub fn var_adj(&self, i: usize) -> &[usize] {
        &self.var_adj[i]
    }

    /// `CH_j`: variables adjacent to check `j`, ascending.
    pub fn chk_adj(&self, j: usize) -> &[usize] {
        &self.chk_adj[j]
    }

    /// Edge indices incident to variable `i`, parallel to [`Self::var_adj`].
    pub fn var_edges(&self, i: usize) -> &[usize] {
        &self.var_edges[i]
    }

    /// Edge indices incident to check `j`, parallel to [`Self::chk_adj`].
    pub fn chk_edges(&self, j: usize) -> &[usize] {
        &self.chk_edges[j]
    }

    pub fn edge_index(&self, e: EdgeRef) -> Option<usize> {
        let row = self.chk_adj.get(e.check)?;
        row.binary_search(&e.var).ok().map(|pos| self.chk_edges[e.check][pos])
    }

    pub fn to_matrix(&self) -> ParityCheckMatrix {
        ParityCheckMatrix::new(self.n_vars(), self.chk_adj.clone())
            .expect("graph adjacency is a valid matrix")
    }

    /// True iff the bits satisfy every check.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.chk_adj
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &i| acc ^ (bits[i] & 1)) == 0)
    }

    /// All 4-cycles, each reported once, ordered by `(checks, vars)`.
    pub fn enumerate_4cycles(&self) -> Vec<FourCycle> {
        let mut out = Vec::new();
        let mut shared = Vec::new();
        for j1 in 0..self.n_checks() {
            for j2 in j1 + 1..self.n_checks() {
                shared.clear();
                intersect_sorted(&self.chk_adj[j1], &self.chk_adj[j2], &mut shared);
                for (a, &i1) in shared.iter().enumerate() {
                    for &i2 in &shared[a + 1..] {
                        out.push(FourCycle { checks: (j1, j2), vars: (i1, i2) });
                    }
                }
            }
        }
        out
    }

    /// Number of 4-cycles through each edge, indexed like [`Self::edges`].
    pub fn edge_cycle_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_edges()];
        for c in self.enumerate_4cycles() {
            for e in c.edges() {
                counts[self.edge_index(e).expect("cycle edge exists")] += 1;
            }
        }
        counts
    }

    /// Length of the shortest cycle, `None` for a forest.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n_vars();
        let total = n + self.n_checks();
        let neighbors = |u: usize| -> Box<dyn Iterator<Item = usize> + '_> {
            if u < n {
                Box::new(self.var_adj[u].iter().map(move |&j| n + j))
            } else {
                Box::new(self.chk_adj[u - n].iter().copied())
            }
        };

        let mut best: Option<usize> = None;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        let mut queue = VecDeque::new();
        for root in 0..total {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[root] = 0;
            parent[root] = usize::MAX;
            queue.clear();
            queue.push_back(root);
            'bfs: while let Some(u) = queue.pop_front() {
                // no shorter cycle can be closed from this depth on
                if let Some(b) = best {
                    if 2 * dist[u] >= b {
                        break 'bfs;
                    }
                }
                for w in neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let len = dist[u] + dist[w] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best
    }

    /// Graph with the listed edges removed.
    pub fn without_edges(&self, edges: &[EdgeRef]) -> crate::Result<TannerGraph> {
        Ok(TannerGraph::new(&self.to_matrix().without_edges(edges)?))
    }
}

fn intersect_sorted(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
}
