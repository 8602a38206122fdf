//! Primal network simplex for the bipartite transportation problem.
//!
//! The spanning tree is kept strongly feasible (zero-flow tree arcs point
//! away from the root), which rules out cycling under degenerate pivots.
//! After each pivot the tree order and node potentials are rebuilt by a
//! breadth-first pass from the artificial root; the problems solved here are
//! desk scale, so the O(nodes) rebuild is not the bottleneck.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};

pub(crate) struct SimplexSolution {
    /// `(source, target, flow)` for every real arc with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    /// Potentials with `w[i] + v[j] >= S[i][j]`, equality on tree arcs.
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

struct Network {
    ns: usize,
    nt: usize,
    real: usize,
    cost: Vec<f64>,
    art_src: Vec<usize>,
    art_dst: Vec<usize>,
}

impl Network {
    fn ends(&self, arc: usize) -> (usize, usize) {
        if arc < self.real {
            (arc / self.nt, self.ns + arc % self.nt)
        } else {
            let u = arc - self.real;
            (self.art_src[u], self.art_dst[u])
        }
    }
}

/// Maximises `sum flow * S` subject to row sums `a` and column sums `b`.
pub(crate) fn solve(a: &[f64], b: &[f64], s: &Array2<f64>) -> Result<SimplexSolution> {
    let (ns, nt) = s.dim();
    let nodes = ns + nt;
    let root = nodes;
    let real = ns * nt;
    let smax = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cost: Vec<f64> = s.iter().map(|v| smax - v).collect();
    let cmax = cost.iter().cloned().fold(0.0, f64::max);
    let art_cost = (cmax + 1.0) * (nodes + 1) as f64;

    let supply: Vec<f64> = a.iter().cloned().chain(b.iter().map(|v| -v)).collect();
    let mut art_src = vec![0; nodes];
    let mut art_dst = vec![0; nodes];
    let mut flow = vec![0.0; real + nodes];
    let mut in_tree = vec![false; real + nodes];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes + 1];
    for u in 0..nodes {
        let arc = real + u;
        if supply[u] > 0.0 {
            art_src[u] = u;
            art_dst[u] = root;
            flow[arc] = supply[u];
            cost.push(0.0);
        } else {
            art_src[u] = root;
            art_dst[u] = u;
            flow[arc] = -supply[u];
            cost.push(art_cost);
        }
        in_tree[arc] = true;
        adj[u].push(arc);
        adj[root].push(arc);
    }
    let net = Network { ns, nt, real, cost, art_src, art_dst };
    let total_arcs = real + nodes;

    let mut parent = vec![usize::MAX; nodes + 1];
    let mut parent_arc = vec![usize::MAX; nodes + 1];
    let mut depth = vec![0usize; nodes + 1];
    let mut pi = vec![0.0; nodes + 1];
    let mut queue = VecDeque::with_capacity(nodes + 1);
    let mut rebuild = |adj: &Vec<Vec<usize>>,
                       parent: &mut Vec<usize>,
                       parent_arc: &mut Vec<usize>,
                       depth: &mut Vec<usize>,
                       pi: &mut Vec<f64>| {
        parent[root] = usize::MAX;
        parent_arc[root] = usize::MAX;
        depth[root] = 0;
        pi[root] = 0.0;
        queue.clear();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &arc in &adj[u] {
                if arc == parent_arc[u] {
                    continue;
                }
                let (src, dst) = net.ends(arc);
                let (other, pot) = if src == u {
                    (dst, pi[u] + net.cost[arc])
                } else {
                    (src, pi[u] - net.cost[arc])
                };
                parent[other] = u;
                parent_arc[other] = arc;
                depth[other] = depth[u] + 1;
                pi[other] = pot;
                queue.push_back(other);
            }
        }
    };
    rebuild(&adj, &mut parent, &mut parent_arc, &mut depth, &mut pi);

    let tol = 1e-13 * (1.0 + cmax);
    let block = ((total_arcs as f64).sqrt().ceil() as usize).max(16);
    let max_pivots = 50 * total_arcs + 10_000;
    let mut next = 0usize;
    let mut pivots = 0usize;
    let mut path_s: Vec<usize> = Vec::new();
    let mut path_t: Vec<usize> = Vec::new();

    loop {
        // Block search pricing.
        let mut entering = usize::MAX;
        let mut best = -tol;
        let mut scanned = 0;
        let mut in_block = 0;
        while scanned < total_arcs {
            let arc = next;
            next += 1;
            if next == total_arcs {
                next = 0;
            }
            scanned += 1;
            in_block += 1;
            if !in_tree[arc] {
                let (src, dst) = net.ends(arc);
                let rc = net.cost[arc] + pi[src] - pi[dst];
                if rc < best {
                    best = rc;
                    entering = arc;
                }
            }
            if in_block >= block {
                if entering != usize::MAX {
                    break;
                }
                in_block = 0;
            }
        }
        if entering == usize::MAX {
            break;
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::InvalidArgument("network simplex pivot limit exceeded".into()));
        }

        let (s_node, t_node) = net.ends(entering);
        path_s.clear();
        path_t.clear();
        let (mut a_node, mut b_node) = (s_node, t_node);
        while a_node != b_node {
            if depth[a_node] >= depth[b_node] {
                path_s.push(a_node);
                a_node = parent[a_node];
            } else {
                path_t.push(b_node);
                b_node = parent[b_node];
            }
        }
        // Cycle order from the apex: down to s, across the entering arc,
        // then from t back up. Backward arcs bound the step.
        let mut delta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &u in path_s.iter().rev() {
            let arc = parent_arc[u];
            // Traversed parent -> u; backward when the arc points u -> parent.
            if net.ends(arc).0 == u && flow[arc] <= delta {
                delta = flow[arc];
                leaving = arc;
            }
        }
        for &u in path_t.iter() {
            let arc = parent_arc[u];
            // Traversed u -> parent; backward when the arc points parent -> u.
            if net.ends(arc).1 == u && flow[arc] <= delta {
                delta = flow[arc];
                leaving = arc;
            }
        }
        if leaving == usize::MAX {
            return Err(Error::InvalidArgument("transportation problem is unbounded".into()));
        }
        if delta > 0.0 {
            for &u in &path_s {
                let arc = parent_arc[u];
                if net.ends(arc).1 == u {
                    flow[arc] += delta;
                } else {
                    flow[arc] -= delta;
                }
            }
            for &u in &path_t {
                let arc = parent_arc[u];
                if net.ends(arc).0 == u {
                    flow[arc] += delta;
                } else {
                    flow[arc] -= delta;
                }
            }
        }
        flow[entering] = delta;
        flow[leaving] = 0.0;
        in_tree[leaving] = false;
        in_tree[entering] = true;
        let (ls, ld) = net.ends(leaving);
        for end in [ls, ld] {
            let pos = adj[end].iter().position(|&x| x == leaving).expect("tree arc");
            adj[end].swap_remove(pos);
        }
        adj[s_node].push(entering);
        adj[t_node].push(entering);
        rebuild(&adj, &mut parent, &mut parent_arc, &mut depth, &mut pi);
    }

    let residual: f64 = (real..total_arcs).map(|arc| flow[arc]).sum();
    if residual > 1e-9 {
        return Err(Error::InvalidArgument(format!("transportation problem infeasible (residual {residual})")));
    }
    let mut flows = Vec::new();
    for arc in 0..real {
        if flow[arc] > 0.0 {
            flows.push((arc / nt, arc % nt, flow[arc]));
        }
    }
    let w = (0..ns).map(|i| smax + pi[i]).collect();
    let v = (0..nt).map(|j| -pi[ns + j]).collect();
    Ok(SimplexSolution { flows, w, v })
}
