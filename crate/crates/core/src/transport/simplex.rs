//! Network simplex on the bipartite transportation graph.
//!
//! The basis is a spanning tree over `m` source and `n` target nodes with
//! `m + n − 1` basic cells (zero-flow cells included). Potentials satisfy
//! `u_a + v_b = c_ab` on basic cells; a cell with negative reduced cost enters,
//! the tree path closes a cycle, and the decreasing cell with smallest flow
//! leaves.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERACY_LIMIT: usize = 64;

/// One nonzero entry of a coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// Optimal coupling with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    /// `Σ π_ab c_ab`.
    pub cost: f64,
    /// Potential per source atom (zero-mass atoms included).
    pub dual_u: Vec<f64>,
    /// Potential per target atom (zero-mass atoms included).
    pub dual_v: Vec<f64>,
    pub pivots: usize,
}

impl TransportPlan {
    /// `Σ u_a s_a + Σ v_b d_b`.
    pub fn dual_value(&self, supply: &[f64], demand: &[f64]) -> f64 {
        let a: f64 = self.dual_u.iter().zip(supply).map(|(u, s)| u * s).sum();
        let b: f64 = self.dual_v.iter().zip(demand).map(|(v, d)| v * d).sum();
        a + b
    }

    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut r = vec![0.0; m];
        for e in &self.entries {
            r[e.from] += e.mass;
        }
        r
    }

    pub fn col_sums(&self, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        for e in &self.entries {
            c[e.to] += e.mass;
        }
        c
    }
}

/// Solve `min Σ c_ab π_ab` subject to row sums `supply` and column sums
/// `demand`. `cost` is row-major `m × n`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m_all, n_all) = (supply.len(), demand.len());
    if cost.len() != m_all * n_all {
        return Err(Error::InvalidArgument("cost matrix shape mismatch".into()));
    }
    if supply.iter().chain(demand).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("negative or non-finite mass".into()));
    }
    let rows: Vec<usize> = (0..m_all).filter(|&a| supply[a] > 0.0).collect();
    let cols: Vec<usize> = (0..n_all).filter(|&b| demand[b] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidArgument("a marginal has no mass".into()));
    }
    let total_s: f64 = rows.iter().map(|&a| supply[a]).sum();
    let total_d: f64 = cols.iter().map(|&b| demand[b]).sum();
    if ((total_s - total_d) / total_s).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("unbalanced marginals: {total_s} vs {total_d}")));
    }

    let s: Vec<f64> = rows.iter().map(|&a| supply[a]).collect();
    let d: Vec<f64> = cols.iter().map(|&b| demand[b] * total_s / total_d).collect();
    let c: Vec<f64> = rows.iter().flat_map(|&a| cols.iter().map(move |&b| cost[a * n_all + b])).collect();

    let mut solver = Simplex::new(&s, &d, c);
    solver.run()?;

    let (m, n) = (rows.len(), cols.len());
    let mut entries = Vec::new();
    let mut total = 0.0;
    for &(i, j) in &solver.basis {
        let x = solver.flow[i * n + j];
        if x > 0.0 {
            entries.push(PlanEntry { from: rows[i], to: cols[j], mass: x });
            total += x * cost[rows[i] * n_all + cols[j]];
        }
    }
    entries.sort_by_key(|e| (e.from, e.to));

    // Potentials of pruned atoms by c-transform keep dual feasibility without
    // changing the dual value (their mass is zero).
    let mut dual_u = vec![f64::NAN; m_all];
    let mut dual_v = vec![f64::NAN; n_all];
    for (i, &a) in rows.iter().enumerate() {
        dual_u[a] = solver.u[i];
    }
    for (j, &b) in cols.iter().enumerate() {
        dual_v[b] = solver.v[j];
    }
    for a in 0..m_all {
        if dual_u[a].is_nan() {
            dual_u[a] = cols.iter().map(|&b| cost[a * n_all + b] - dual_v[b]).fold(f64::INFINITY, f64::min);
        }
    }
    for b in 0..n_all {
        if dual_v[b].is_nan() {
            dual_v[b] = (0..m_all).map(|a| cost[a * n_all + b] - dual_u[a]).fold(f64::INFINITY, f64::min);
        }
    }
    debug_assert_eq!(m + n - 1, solver.basis.len());

    Ok(TransportPlan { entries, cost: total, dual_u, dual_v, pivots: solver.pivots })
}

struct Simplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    is_basic: Vec<bool>,
    basis: Vec<(usize, usize)>,
    u: Vec<f64>,
    v: Vec<f64>,
    pivots: usize,
}

impl Simplex {
    fn new(s: &[f64], d: &[f64], cost: Vec<f64>) -> Self {
        let (m, n) = (s.len(), d.len());
        let mut flow = vec![0.0; m * n];
        let mut is_basic = vec![false; m * n];
        let mut basis = Vec::with_capacity(m + n - 1);
        // North-west corner start: each step fixes one cell and advances one index.
        let (mut rs, mut cd) = (s.to_vec(), d.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let x = if i == m - 1 && j == n - 1 { rs[i].max(0.0) } else { rs[i].min(cd[j]).max(0.0) };
            flow[i * n + j] = x;
            is_basic[i * n + j] = true;
            basis.push((i, j));
            rs[i] -= x;
            cd[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || rs[i] <= cd[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cost, flow, is_basic, basis, u: vec![0.0; m], v: vec![0.0; n], pivots: 0 }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        // Nodes 0..m are sources, m..m+n targets.
        let mut adj = vec![Vec::new(); self.m + self.n];
        for &(i, j) in &self.basis {
            adj[i].push(self.m + j);
            adj[self.m + j].push(i);
        }
        adj
    }

    fn potentials(&mut self, adj: &[Vec<usize>]) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if node < m {
                    let j = next - m;
                    self.v[j] = self.cost[node * n + j] - self.u[node];
                } else {
                    let j = node - m;
                    self.u[next] = self.cost[next * n + j] - self.v[j];
                }
                queue.push_back(next);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Internal("transportation basis is not a spanning tree".into()));
        }
        Ok(())
    }

    /// Tree path from node `from` to node `to` as a node list.
    fn tree_path(&self, adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.m + self.n];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    fn cell(&self, a: usize, b: usize) -> (usize, usize) {
        if a < self.m {
            (a, b - self.m)
        } else {
            (b, a - self.m)
        }
    }

    fn run(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let scale = self.cost.iter().fold(0.0_f64, |a, c| a.max(c.abs())).max(1.0);
        let eps = 1e-12 * scale;
        let max_pivots = 10_000 + 50 * m * n;
        let mut start = 0;
        let mut degenerate_run = 0;
        let mut bland = false;

        loop {
            let adj = self.adjacency();
            self.potentials(&adj)?;

            let origin = if bland { 0 } else { start };
            let entering = (0..m * n)
                .map(|k| (origin + k) % (m * n))
                .find(|&k| !self.is_basic[k] && self.cost[k] - self.u[k / n] - self.v[k % n] < -eps);
            let Some(k) = entering else {
                return Ok(());
            };
            if self.pivots >= max_pivots {
                return Err(Error::Internal(format!("network simplex exceeded {max_pivots} pivots")));
            }
            start = k + 1;
            let (ei, ej) = (k / n, k % n);

            // Cycle: entering cell (+), then the tree path from column ej back
            // to row ei, alternating −, +, …, −.
            let path = self.tree_path(&adj, m + ej, ei);
            let cycle: Vec<(usize, usize)> = path.windows(2).map(|w| self.cell(w[0], w[1])).collect();
            let (mut theta, mut leave) = (f64::INFINITY, None::<(usize, usize)>);
            for (idx, &(i, j)) in cycle.iter().enumerate() {
                if idx % 2 == 0 {
                    let x = self.flow[i * n + j];
                    let better = match leave {
                        None => true,
                        Some(l) => x < theta || (x == theta && (i, j) < l),
                    };
                    if better {
                        theta = x;
                        leave = Some((i, j));
                    }
                }
            }
            let leave = leave.ok_or_else(|| Error::Internal("empty pivot cycle".into()))?;

            self.flow[k] += theta;
            for (idx, &(i, j)) in cycle.iter().enumerate() {
                let f = &mut self.flow[i * n + j];
                if idx % 2 == 0 {
                    *f = (*f - theta).max(0.0);
                } else {
                    *f += theta;
                }
            }
            self.flow[leave.0 * n + leave.1] = 0.0;
            self.is_basic[leave.0 * n + leave.1] = false;
            self.is_basic[k] = true;
            let pos = self.basis.iter().position(|&c| c == leave).expect("leaving cell is basic");
            self.basis[pos] = (ei, ej);
            self.pivots += 1;

            if theta <= eps {
                degenerate_run += 1;
                if degenerate_run > DEGENERACY_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
    }
}
