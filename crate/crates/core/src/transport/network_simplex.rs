//! Primal network simplex on the bipartite transportation polytope.
//!
//! The basis is a spanning tree of the complete bipartite graph on
//! `rows + cols` nodes. Entering arcs come from block-search pricing (the
//! most negative reduced cost within a window of about `sqrt(arcs)` arcs);
//! after `rows + cols` consecutive degenerate pivots the solver switches to
//! Bland's rule (first eligible arc in row-major order). Among tied leaving
//! arcs the one with the smallest row-major index leaves.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optimal basic flow with its certificate.
#[derive(Debug, Clone)]
pub struct TransportPlan<T> {
    pub rows: usize,
    pub cols: usize,
    /// Row-major flow.
    pub flow: Vec<T>,
    /// Row potentials.
    pub u: Vec<T>,
    /// Column potentials.
    pub v: Vec<T>,
    pub cost: T,
    pub pivots: usize,
    /// `max(0, -min reduced cost)`.
    pub max_dual_violation: f64,
    /// `sum flow * |reduced cost|`.
    pub complementary_slackness: f64,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn reduced_cost(&self, cost: &[T], i: usize, j: usize) -> T {
        cost[i * self.cols + j].clone() - self.u[i].clone() - self.v[j].clone()
    }
}

struct Tree {
    rows: usize,
    cols: usize,
    basic: Vec<(usize, usize)>,
}

/// The basis tree hung from node 0, with the potentials it determines.
struct Rooted<T> {
    /// `(parent node, arc index)`; the root points to itself.
    parent: Vec<(usize, usize)>,
    depth: Vec<usize>,
    u: Vec<T>,
    v: Vec<T>,
}

impl Tree {
    /// Node `i < rows` is a row, `rows + j` a column.
    fn root<T: Scalar>(&self, cost: &[T]) -> Rooted<T> {
        let nodes = self.rows + self.cols;
        // compressed adjacency: (neighbour, arc index)
        let mut start = vec![0usize; nodes + 1];
        for &(i, j) in &self.basic {
            start[i + 1] += 1;
            start[self.rows + j + 1] += 1;
        }
        for k in 0..nodes {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut adj = vec![(0usize, 0usize); 2 * self.basic.len()];
        for (k, &(i, j)) in self.basic.iter().enumerate() {
            adj[fill[i]] = (self.rows + j, k);
            fill[i] += 1;
            adj[fill[self.rows + j]] = (i, k);
            fill[self.rows + j] += 1;
        }

        let mut parent = vec![(usize::MAX, usize::MAX); nodes];
        let mut depth = vec![0; nodes];
        let mut pot = vec![T::zero(); nodes];
        let mut queue = VecDeque::with_capacity(nodes);
        parent[0] = (0, usize::MAX);
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &(next, k) in &adj[start[node]..start[node + 1]] {
                if parent[next].0 == usize::MAX {
                    let (i, j) = self.basic[k];
                    // u_i + v_j = c_ij
                    pot[next] = cost[i * self.cols + j].clone() - pot[node].clone();
                    parent[next] = (node, k);
                    depth[next] = depth[node] + 1;
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.rows);
        Rooted {
            parent,
            depth,
            u: pot,
            v,
        }
    }
}

impl<T> Rooted<T> {
    /// Arc indices along the tree path from `from` to `to`, in walking order.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let (mut a, mut b) = (from, to);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[a] > self.depth[b] {
            up.push(self.parent[a].1);
            a = self.parent[a].0;
        }
        while self.depth[b] > self.depth[a] {
            down.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        while a != b {
            up.push(self.parent[a].1);
            a = self.parent[a].0;
            down.push(self.parent[b].1);
            b = self.parent[b].0;
        }
        down.reverse();
        up.extend(down);
        up
    }
}

/// Minimum-cost flow from `supply` (rows) to `demand` (columns).
///
/// Masses need not be normalized but must balance. `cost` is row-major.
pub fn solve_transport<T: Scalar>(supply: &[T], demand: &[T], cost: &[T]) -> Result<TransportPlan<T>> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::ZeroMass);
    }
    if cost.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: cost.len(),
        });
    }
    if let Some(i) = supply.iter().chain(demand).position(|s| *s < T::zero()) {
        return Err(Error::InvalidMass(i));
    }
    let total_a = T::sum(supply);
    let total_b = T::sum(demand);
    if total_a <= T::zero() || total_b <= T::zero() {
        return Err(Error::ZeroMass);
    }
    let slack = T::mass_tolerance() * T::from_usize(m + n) * T::max_of(&T::one(), &total_a);
    if (total_a.clone() - total_b.clone()).abs() > slack {
        return Err(Error::Unbalanced(total_a.to_f64(), total_b.to_f64()));
    }

    let tol = T::tolerance();
    let mut flow = vec![T::zero(); m * n];
    let mut tree = Tree {
        rows: m,
        cols: n,
        basic: Vec::with_capacity(m + n - 1),
    };

    // north-west corner start; exactly m + n - 1 arcs, degenerate ones included
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = T::min_of(&a[i], &b[j]);
            flow[i * n + j] = x.clone();
            tree.basic.push((i, j));
            a[i] = a[i].clone() - x.clone();
            b[j] = b[j].clone() - x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || a[i].is_zero() {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let max_pivots = 50 * m * n + 10_000;
    let mut pivots = 0;
    // block-search pricing from a rotating start; after a long run of
    // degenerate pivots fall back to the first eligible arc, which cannot cycle
    let arcs = m * n;
    let block = ((arcs as f64).sqrt().ceil() as usize).clamp(1, arcs);
    let mut start = 0;
    let mut degenerate_run = 0;
    let mut bland = false;
    let (u, v) = loop {
        let rooted = tree.root(cost);
        let (u, v) = (&rooted.u, &rooted.v);
        let reduced = |k: usize| cost[k].clone() - u[k / n].clone() - v[k % n].clone();
        let mut entering = None;
        if bland {
            entering = (0..arcs).find(|&k| reduced(k) < -tol.clone());
        } else {
            let mut best = -tol.clone();
            for step in 0..arcs {
                let k = (start + step) % arcs;
                let rc = reduced(k);
                if rc < best {
                    best = rc;
                    entering = Some(k);
                }
                if entering.is_some() && (step + 1) % block == 0 {
                    start = (k + 1) % arcs;
                    break;
                }
            }
        }
        let Some(ek) = entering else {
            break (rooted.u, rooted.v);
        };
        let (ei, ej) = (ek / n, ek % n);
        if pivots >= max_pivots {
            return Err(Error::PivotLimit);
        }
        pivots += 1;

        // walking from column ej back to row ei, signs alternate starting with minus
        let path = rooted.path(m + ej, ei);
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&k| {
                let (i, j) = tree.basic[k];
                flow[i * n + j].clone()
            })
            .fold(None::<T>, |acc, f| match acc {
                None => Some(f),
                Some(a) => Some(T::min_of(&a, &f)),
            })
            .expect("cycle has a minus arc");
        let leaving = minus
            .iter()
            .copied()
            .filter(|&k| {
                let (i, j) = tree.basic[k];
                flow[i * n + j].clone() - theta.clone() <= tol
            })
            .min_by_key(|&k| {
                let (i, j) = tree.basic[k];
                i * n + j
            })
            .expect("some arc attains the ratio");

        for (pos, &k) in path.iter().enumerate() {
            let (i, j) = tree.basic[k];
            let cell = &mut flow[i * n + j];
            *cell = if pos % 2 == 0 {
                cell.clone() - theta.clone()
            } else {
                cell.clone() + theta.clone()
            };
        }
        if theta.is_zero() {
            degenerate_run += 1;
            bland |= degenerate_run > m + n;
        } else {
            degenerate_run = 0;
        }
        flow[ei * n + ej] = theta;
        let (li, lj) = tree.basic[leaving];
        flow[li * n + lj] = T::zero();
        tree.basic[leaving] = (ei, ej);
    };

    let mut min_rc = 0.0f64;
    let mut cs = 0.0f64;
    let mut total = T::zero();
    for i in 0..m {
        for j in 0..n {
            let c = cost[i * n + j].clone();
            let rc = (c.clone() - u[i].clone() - v[j].clone()).to_f64();
            min_rc = min_rc.min(rc);
            let f = flow[i * n + j].clone();
            cs += f.to_f64() * rc.abs();
            total = total + f * c;
        }
    }

    Ok(TransportPlan {
        rows: m,
        cols: n,
        flow,
        u,
        v,
        cost: total,
        pivots,
        max_dual_violation: -min_rc,
        complementary_slackness: cs,
    })
}
