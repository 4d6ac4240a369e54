//! Exact transportation solver: network simplex on the bipartite graph,
//! dual extraction, and an independent vertex-enumeration oracle.

use crate::types::{Coupling, ProbabilityVector, SUPPORT_THRESHOLD};
use thiserror::Error;

/// Hard cap on `|X| * |Y|` for the enumeration oracle.
pub const ENUMERATION_CAP: usize = 36;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("cost matrix is {rows}x{cols} but marginals have lengths {mu_len} and {nu_len}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        mu_len: usize,
        nu_len: usize,
    },
    #[error("cost entry at [{row}][{col}] is not finite")]
    NonFiniteCost { row: usize, col: usize },
    #[error("instance has {cells} cells; enumeration is capped at {cap}")]
    TooLargeForEnumeration { cells: usize, cap: usize },
    #[error("pivot limit exceeded; this signals a solver bug")]
    PivotLimit,
    #[error("slackness fails at [{row}][{col}]: the coupling is not an optimal plan")]
    InconsistentPotentials { row: usize, col: usize },
}

/// An optimal coupling together with its value and dual potentials.
///
/// The potentials satisfy `v[j] - u[i] <= cost[i][j]` everywhere, with
/// equality on the support of the coupling, and `u` is anchored to 0 at
/// the first point carrying positive `mu`-mass.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub coupling: Coupling,
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn check_shape(
    cost: &[Vec<f64>],
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Result<(usize, usize), SolveError> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || cost.iter().any(|r| r.len() != cols) {
        return Err(SolveError::DimensionMismatch {
            rows,
            cols,
            mu_len: mu.len(),
            nu_len: nu.len(),
        });
    }
    if mu.len() != rows || nu.len() != cols {
        return Err(SolveError::DimensionMismatch {
            rows,
            cols,
            mu_len: mu.len(),
            nu_len: nu.len(),
        });
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolveError::NonFiniteCost { row: i, col: j });
            }
        }
    }
    Ok((rows, cols))
}

/// Basic feasible start: walk the marginals in index order, exhausting one
/// side per step. Produces exactly `m + n - 1` basic cells, some possibly
/// carrying zero mass.
fn northwest_corner(mu: &[f64], nu: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    let m = mu.len();
    let n = nu.len();
    let mut flow = vec![vec![0.0; n]; m];
    let mut basis = vec![vec![false; n]; m];
    let mut rem_mu = mu.to_vec();
    let mut rem_nu = nu.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let t = rem_mu[i].min(rem_nu[j]);
        flow[i][j] = t;
        basis[i][j] = true;
        rem_mu[i] -= t;
        rem_nu[j] -= t;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || rem_mu[i] <= rem_nu[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    (flow, basis)
}

/// Potentials from tree propagation over the basis, rooted at X-node
/// `root` with `u[root] = 0`. The basis is a spanning tree, so every
/// node is reached.
fn potentials(cost: &[Vec<f64>], basis: &[Vec<bool>], root: usize) -> (Vec<f64>, Vec<f64>) {
    let m = basis.len();
    let n = basis[0].len();
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut u_known = vec![false; m];
    let mut v_known = vec![false; n];
    u_known[root] = true;
    // nodes 0..m are X, m..m+n are Y
    let mut queue = vec![root];
    while let Some(node) = queue.pop() {
        if node < m {
            let i = node;
            for j in 0..n {
                if basis[i][j] && !v_known[j] {
                    v[j] = u[i] + cost[i][j];
                    v_known[j] = true;
                    queue.push(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basis[i][j] && !u_known[i] {
                    u[i] = v[j] - cost[i][j];
                    u_known[i] = true;
                    queue.push(i);
                }
            }
        }
    }
    debug_assert!(u_known.iter().all(|&k| k) && v_known.iter().all(|&k| k));
    (u, v)
}

/// Unique path through the basis tree from X-node `si` to Y-node `sj`,
/// returned as the alternating list of basic cells along it.
fn tree_path(basis: &[Vec<bool>], si: usize, sj: usize) -> Vec<(usize, usize)> {
    let m = basis.len();
    let n = basis[0].len();
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    seen[si] = true;
    let mut queue = std::collections::VecDeque::from([si]);
    while let Some(node) = queue.pop_front() {
        if node == m + sj {
            break;
        }
        if node < m {
            for j in 0..n {
                if basis[node][j] && !seen[m + j] {
                    seen[m + j] = true;
                    parent[m + j] = node;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if basis[i][j] && !seen[i] {
                    seen[i] = true;
                    parent[i] = m + j;
                    queue.push_back(i);
                }
            }
        }
    }
    debug_assert!(seen[m + sj], "basis is not spanning");
    let mut nodes = vec![m + sj];
    while *nodes.last().unwrap() != si {
        nodes.push(parent[*nodes.last().unwrap()]);
    }
    nodes.reverse();
    nodes
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a < m {
                (a, b - m)
            } else {
                (b, a - m)
            }
        })
        .collect()
}

/// Solves `min sum cost * pi` over couplings of `(mu, nu)` exactly.
///
/// Network simplex with a northwest-corner start; the entering arc is the
/// first negative reduced cost in row-major order and ties for the leaving
/// arc break lexicographically, so runs are deterministic and finite.
///
/// Costs must be finite: infinite entries are rejected rather than being
/// treated as forbidden arcs.
pub fn solve_transport(
    cost: &[Vec<f64>],
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Result<SolveResult, SolveError> {
    let (m, n) = check_shape(cost, mu, nu)?;
    let (mut flow, mut basis) = northwest_corner(&mu.mass, &nu.mass);

    let scale = cost
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, &c| acc.max(c.abs()));
    let enter_tol = 1e-12 * (1.0 + scale);
    let pivot_cap = 10_000 + 200 * m * n;

    for _ in 0..pivot_cap {
        let (u, v) = potentials(cost, &basis, 0);
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if !basis[i][j] && cost[i][j] - (v[j] - u[i]) < -enter_tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((si, sj)) = entering else {
            // optimal basis: anchor duals at the first positive-mass row
            let root = mu.mass.iter().position(|&w| w > 0.0).unwrap_or(0);
            let (u, v) = potentials(cost, &basis, root);
            let coupling = Coupling::new(flow);
            let mut value = 0.0;
            for (crow, prow) in cost.iter().zip(&coupling.pi) {
                for (c, p) in crow.iter().zip(prow) {
                    value += c * p;
                }
            }
            return Ok(SolveResult { coupling, value, u, v });
        };

        let path = tree_path(&basis, si, sj);
        // cells at even positions leave mass, odd positions gain it
        let mut theta = f64::INFINITY;
        for (t, &(i, j)) in path.iter().enumerate() {
            if t % 2 == 0 && flow[i][j] < theta {
                theta = flow[i][j];
            }
        }
        let mut leaving = (usize::MAX, usize::MAX);
        for (t, &(i, j)) in path.iter().enumerate() {
            if t % 2 == 0 && flow[i][j] == theta && (i, j) < leaving {
                leaving = (i, j);
            }
        }
        for (t, &(i, j)) in path.iter().enumerate() {
            if t % 2 == 0 {
                flow[i][j] -= theta;
            } else {
                flow[i][j] += theta;
            }
        }
        flow[si][sj] += theta;
        basis[si][sj] = true;
        basis[leaving.0][leaving.1] = false;
    }
    Err(SolveError::PivotLimit)
}

/// Optimal value by exhausting every basic feasible solution.
///
/// Spanning trees of the complete bipartite graph are enumerated through
/// parent assignments toward a fixed root, pruned by a union-find; each
/// tree is solved by leaf elimination and infeasible (negative-flow) trees
/// are skipped. Completely independent of the simplex path.
pub fn brute_force_value(
    cost: &[Vec<f64>],
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Result<f64, SolveError> {
    let (m, n) = check_shape(cost, mu, nu)?;
    if m * n > ENUMERATION_CAP {
        return Err(SolveError::TooLargeForEnumeration {
            cells: m * n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut en = TreeEnumerator::new(m, n, cost, &mu.mass, &nu.mass);
    en.assign(0);
    debug_assert!(en.best.is_finite(), "no feasible spanning tree found");
    Ok(en.best)
}

/// DFS over parent assignments: Y-nodes pick a parent in X, non-root
/// X-nodes pick a parent in Y. Acyclic complete assignments are exactly
/// the spanning trees, each visited once.
struct TreeEnumerator<'a> {
    m: usize,
    n: usize,
    cost: &'a [Vec<f64>],
    mu: &'a [f64],
    nu: &'a [f64],
    parent: Vec<usize>,
    uf: UnionFind,
    best: f64,
    // leaf-elimination scratch, reused across trees
    rem: Vec<f64>,
    deg: Vec<u32>,
    alive: Vec<bool>,
}

impl<'a> TreeEnumerator<'a> {
    fn new(m: usize, n: usize, cost: &'a [Vec<f64>], mu: &'a [f64], nu: &'a [f64]) -> Self {
        let total = m + n;
        Self {
            m,
            n,
            cost,
            mu,
            nu,
            parent: vec![usize::MAX; total],
            uf: UnionFind::new(total),
            best: f64::INFINITY,
            rem: vec![0.0; total],
            deg: vec![0; total],
            alive: vec![true; total],
        }
    }

    /// Assignment order: Y-nodes in slots `0..n`, then X-nodes `1..m`.
    fn assign(&mut self, slot: usize) {
        if slot == self.m + self.n - 1 {
            self.evaluate();
            return;
        }
        let (node, choices) = if slot < self.n {
            (self.m + slot, 0..self.m)
        } else {
            (slot - self.n + 1, self.m..self.m + self.n)
        };
        for cand in choices {
            if let Some(mark) = self.uf.union(node, cand) {
                self.parent[node] = cand;
                self.assign(slot + 1);
                self.uf.undo(mark);
            }
        }
    }

    /// Solve the current spanning tree by leaf elimination; keep the cost
    /// if every edge flow is nonnegative.
    ///
    /// A live non-root node of degree 1 always has its parent edge as the
    /// only incident edge, so flows peel off deterministically.
    fn evaluate(&mut self) {
        let m = self.m;
        let total = m + self.n;
        self.rem[..m].copy_from_slice(self.mu);
        self.rem[m..total].copy_from_slice(self.nu);
        self.deg[..total].fill(0);
        for node in 1..total {
            self.deg[node] += 1;
            self.deg[self.parent[node]] += 1;
        }
        self.alive[..total].fill(true);
        let mut cost_total = 0.0;
        for _ in 0..total - 1 {
            let mut leaf = usize::MAX;
            for node in 1..total {
                if self.alive[node] && self.deg[node] == 1 {
                    leaf = node;
                    break;
                }
            }
            debug_assert_ne!(leaf, usize::MAX, "subtree of a tree lost its leaves");
            let f = self.rem[leaf];
            if f < -1e-12 {
                return; // negative flow: this basis is infeasible
            }
            let p = self.parent[leaf];
            let (i, j) = if leaf < m { (leaf, p - m) } else { (p, leaf - m) };
            cost_total += f * self.cost[i][j];
            self.rem[p] -= f;
            self.deg[leaf] = 0;
            self.deg[p] -= 1;
            self.alive[leaf] = false;
        }
        if cost_total < self.best {
            self.best = cost_total;
        }
    }
}

/// Union-find with an undo log; union by size, no path compression.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    log: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            log: Vec::with_capacity(n),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Returns a rollback mark, or `None` if the edge would close a cycle.
    fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.log.push(small);
        Some(self.log.len())
    }

    /// Rolls back every union recorded at or after `mark`.
    fn undo(&mut self, mark: usize) {
        while self.log.len() >= mark {
            let small = self.log.pop().unwrap();
            let big = self.parent[small];
            self.size[big] -= self.size[small];
            self.parent[small] = small;
        }
    }
}

/// Dual potentials certifying optimality of `coupling`.
///
/// Solves the instance internally (couplings whose support holds a cycle
/// are thereby replaced by a vertex) and checks slackness of the resulting
/// potentials against the support of the supplied coupling. Fails exactly
/// when the supplied coupling is not optimal.
pub fn extract_duals(
    cost: &[Vec<f64>],
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    coupling: &Coupling,
) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    let (m, n) = check_shape(cost, mu, nu)?;
    if coupling.rows() != m || coupling.pi.iter().any(|r| r.len() != n) {
        return Err(SolveError::DimensionMismatch {
            rows: m,
            cols: n,
            mu_len: coupling.rows(),
            nu_len: coupling.cols(),
        });
    }
    let solved = solve_transport(cost, mu, nu)?;
    for (i, row) in coupling.pi.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > SUPPORT_THRESHOLD
                && (solved.v[j] - solved.u[i] - cost[i][j]).abs() > crate::types::FEAS_TOL
            {
                return Err(SolveError::InconsistentPotentials { row: i, col: j });
            }
        }
    }
    Ok((solved.u, solved.v))
}
