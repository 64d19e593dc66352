//! Exact W₁ between discrete measures by the transportation network simplex.

use std::collections::VecDeque;

use super::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Largest admissible n_a·n_b.
pub const W1_SIZE_CAP: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct W1Report<T> {
    pub value: T,
    /// Primal objective minus dual objective at termination.
    pub gap: T,
    pub pivots: usize,
}

pub fn wasserstein1<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<T> {
    wasserstein1_with_report(a, b).map(|r| r.value)
}

pub fn wasserstein1_with_report<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<W1Report<T>> {
    if a.spec != b.spec {
        return Err(Error::Domain("W1 between measures on different manifolds".into()));
    }
    if a.len().saturating_mul(b.len()) > W1_SIZE_CAP {
        return Err(Error::Capacity(format!("{}x{} exceeds the W1 size cap {W1_SIZE_CAP}", a.len(), b.len())));
    }
    let (pa, wa) = a.positive_part();
    let (pb, wb) = b.positive_part();
    let spec = &a.spec;
    let cost: Vec<T> = pa
        .iter()
        .flat_map(|x| pb.iter().map(move |y| spec.dist_raw(&x.coords, &y.coords)))
        .collect();
    transport_simplex(&wa, &wb, &cost)
}

struct Tree<T> {
    n: usize,
    m: usize,
    /// basic arcs as (source, sink) and their flows
    arcs: Vec<(usize, usize)>,
    flow: Vec<T>,
    /// incident arc ids per node; sinks are numbered n..n+m
    adj: Vec<Vec<usize>>,
    parent_arc: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    u: Vec<T>,
    v: Vec<T>,
}

const NONE: usize = usize::MAX;

impl<T: Real> Tree<T> {
    fn rebuild(&mut self, cost: &[T]) {
        let total = self.n + self.m;
        self.parent.iter_mut().for_each(|p| *p = NONE);
        self.parent_arc.iter_mut().for_each(|p| *p = NONE);
        let mut seen = vec![false; total];
        let mut queue = VecDeque::with_capacity(total);
        seen[0] = true;
        self.depth[0] = 0;
        self.u[0] = T::zero();
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &e in &self.adj[node] {
                let (i, j) = self.arcs[e];
                let other = if node < self.n { self.n + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                self.parent[other] = node;
                self.parent_arc[other] = e;
                self.depth[other] = self.depth[node] + 1;
                let c = cost[i * self.m + j];
                if other >= self.n {
                    self.v[j] = c - self.u[i];
                } else {
                    self.u[i] = c - self.v[j];
                }
                queue.push_back(other);
            }
        }
    }
}

/// Solves min Σ c_ij f_ij subject to row sums `a` and column sums `b`.
pub(crate) fn transport_simplex<T: Real>(a: &[T], b: &[T], cost: &[T]) -> Result<W1Report<T>> {
    let n = a.len();
    let m = b.len();
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("empty marginal".into()));
    }
    // Rescale b so both marginals have the same total in floating point.
    let sa = compensated_sum(a.iter().copied());
    let sb = compensated_sum(b.iter().copied());
    let b: Vec<T> = b.iter().map(|&x| x * (sa / sb)).collect();

    let mut tree = Tree {
        n,
        m,
        arcs: Vec::with_capacity(n + m - 1),
        flow: Vec::with_capacity(n + m - 1),
        adj: vec![Vec::new(); n + m],
        parent_arc: vec![NONE; n + m],
        parent: vec![NONE; n + m],
        depth: vec![0; n + m],
        u: vec![T::zero(); n],
        v: vec![T::zero(); m],
    };
    // North-west corner: one arc per step, n+m−1 arcs, degenerate zeros kept.
    let (mut ra, mut rb) = (a.to_vec(), b.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let f = ra[i].min(rb[j]).max(T::zero());
        let id = tree.arcs.len();
        tree.arcs.push((i, j));
        tree.flow.push(f);
        tree.adj[i].push(id);
        tree.adj[n + j].push(id);
        ra[i] -= f;
        rb[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if j == m - 1 || (i < n - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    tree.rebuild(cost);

    let scale = cost.iter().fold(T::zero(), |acc, &c| acc.max(c.abs())).max(T::min_positive_value());
    let rc_tol = T::epsilon() * T::lit(64.0) * scale;
    let total = n * m;
    let block = ((total as f64).sqrt().ceil() as usize).max(16).min(total);
    let max_pivots = 50 * (n + m) * (n + m) + 10_000;
    let mut next = 0usize;
    let mut pivots = 0usize;
    let mut in_basis = vec![false; total];
    for &(i, j) in &tree.arcs {
        in_basis[i * m + j] = true;
    }

    loop {
        // Block search: best reduced cost in the first block that has a candidate.
        let mut best = NONE;
        let mut best_rc = -rc_tol;
        let mut scanned = 0usize;
        while scanned < total {
            let end = (scanned + block).min(total);
            for _ in scanned..end {
                let k = next;
                next += 1;
                if next == total {
                    next = 0;
                }
                if in_basis[k] {
                    continue;
                }
                let (i, j) = (k / m, k % m);
                let rc = cost[k] - tree.u[i] - tree.v[j];
                if rc < best_rc {
                    best_rc = rc;
                    best = k;
                }
            }
            scanned = end;
            if best != NONE {
                break;
            }
        }
        if best == NONE {
            break;
        }
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Capacity(format!("network simplex exceeded {max_pivots} pivots")));
        }
        let (ei, ej) = (best / m, best % m);

        // Cycle: entering arc (+), then the tree path sink ej → ... → source ei.
        let mut up_j = Vec::new();
        let mut up_i = Vec::new();
        let (mut x, mut y) = (n + ej, ei);
        while tree.depth[x] > tree.depth[y] {
            up_j.push(tree.parent_arc[x]);
            x = tree.parent[x];
        }
        while tree.depth[y] > tree.depth[x] {
            up_i.push(tree.parent_arc[y]);
            y = tree.parent[y];
        }
        while x != y {
            up_j.push(tree.parent_arc[x]);
            x = tree.parent[x];
            up_i.push(tree.parent_arc[y]);
            y = tree.parent[y];
        }
        let path: Vec<usize> = up_j.iter().copied().chain(up_i.iter().rev().copied()).collect();
        // Odd positions along the path (0-based even) carry −θ.
        let mut theta = T::infinity();
        let mut leave = NONE;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 && tree.flow[e] < theta {
                theta = tree.flow[e];
                leave = e;
            }
        }
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.flow[e] = (tree.flow[e] - theta).max(T::zero());
            } else {
                tree.flow[e] += theta;
            }
        }
        // Replace the leaving arc slot by the entering arc.
        let (li, lj) = tree.arcs[leave];
        in_basis[li * m + lj] = false;
        tree.adj[li].retain(|&e| e != leave);
        tree.adj[n + lj].retain(|&e| e != leave);
        tree.arcs[leave] = (ei, ej);
        tree.flow[leave] = theta;
        tree.adj[ei].push(leave);
        tree.adj[n + ej].push(leave);
        in_basis[best] = true;
        tree.rebuild(cost);
    }

    let primal = compensated_sum(tree.arcs.iter().zip(&tree.flow).map(|(&(i, j), &f)| f * cost[i * m + j]));
    let dual = compensated_sum(a.iter().zip(&tree.u).map(|(&x, &u)| x * u))
        + compensated_sum(b.iter().zip(&tree.v).map(|(&x, &v)| x * v));
    Ok(W1Report { value: primal.max(T::zero()), gap: primal - dual, pivots })
}
