//! s-t minimum cuts on real-capacity networks.
//!
//! The max-flow engine is highest-label push-relabel with the gap heuristic.
//! After the flow is computed, two canonical minimum cuts are read off the
//! residual graph: the nodes reachable from the source (smallest source side)
//! and the complement of the nodes that reach the sink (largest source side).

use crate::error::{Error, Result};

/// Residual capacities at or below this (times the capacity scale) count as saturated.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    rev: usize,
    cap: f64,
}

/// A directed network with non-negative real capacities.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    source: usize,
    sink: usize,
    max_cap: f64,
}

/// Result of a max-flow computation.
#[derive(Clone, Debug)]
pub struct MinCut {
    pub flow: f64,
    /// Source side of the inclusion-minimal minimum cut.
    pub min_source_side: Vec<bool>,
    /// Source side of the inclusion-maximal minimum cut.
    pub max_source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= nodes || sink >= nodes {
            return Err(Error::InvalidArgument(format!(
                "terminal out of range for {nodes} nodes"
            )));
        }
        if source == sink {
            return Err(Error::InvalidArgument("source equals sink".into()));
        }
        Ok(Self {
            adj: vec![Vec::new(); nodes],
            source,
            sink,
            max_cap: 0.0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Adds a directed arc `from -> to`. Zero capacities are ignored.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> Result<()> {
        self.add_pair(from, to, cap, 0.0)
    }

    /// Adds an undirected edge, i.e. two opposite arcs with the same capacity.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64) -> Result<()> {
        self.add_pair(a, b, cap, cap)
    }

    fn add_pair(&mut self, a: usize, b: usize, cap_ab: f64, cap_ba: f64) -> Result<()> {
        let n = self.adj.len();
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!(
                "arc ({a}, {b}) out of range for {n} nodes"
            )));
        }
        if a == b {
            return Ok(());
        }
        if !(cap_ab >= 0.0 && cap_ba >= 0.0) || !cap_ab.is_finite() || !cap_ba.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "capacities must be finite and non-negative, got {cap_ab}, {cap_ba}"
            )));
        }
        if cap_ab == 0.0 && cap_ba == 0.0 {
            return Ok(());
        }
        self.max_cap = self.max_cap.max(cap_ab).max(cap_ba);
        let ra = self.adj[b].len();
        let rb = self.adj[a].len();
        self.adj[a].push(Arc {
            to: b,
            rev: ra,
            cap: cap_ab,
        });
        self.adj[b].push(Arc {
            to: a,
            rev: rb,
            cap: cap_ba,
        });
        Ok(())
    }

    /// Computes a maximum flow and both canonical minimum cuts. Consumes the
    /// network since the capacities are overwritten by residuals.
    pub fn min_cut(mut self) -> MinCut {
        let flow = self.push_relabel();
        let tol = RESIDUAL_TOL * self.max_cap.max(1.0);
        let min_source_side = self.reach_from_source(tol);
        let reaches_sink = self.reach_sink(tol);
        let max_source_side = reaches_sink.iter().map(|&r| !r).collect();
        MinCut {
            flow,
            min_source_side,
            max_source_side,
        }
    }

    fn push_relabel(&mut self) -> f64 {
        let n = self.adj.len();
        let (s, t) = (self.source, self.sink);
        let eps = 1e-14 * self.max_cap.max(1.0);
        let max_h = 2 * n + 1;
        let mut height = vec![0usize; n];
        let mut excess = vec![0.0f64; n];
        let mut count = vec![0usize; max_h + 1];
        let mut current = vec![0usize; n];
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_h + 1];

        // Exact distance labels towards the sink.
        let dist = self.residual_distances_to(t, eps);
        for v in 0..n {
            height[v] = dist[v].unwrap_or(n);
        }
        height[s] = n;
        for v in 0..n {
            count[height[v]] += 1;
        }

        let mut highest = 0usize;
        for i in 0..self.adj[s].len() {
            let cap = self.adj[s][i].cap;
            if cap > 0.0 {
                let v = self.adj[s][i].to;
                let r = self.adj[s][i].rev;
                self.adj[s][i].cap = 0.0;
                self.adj[v][r].cap += cap;
                let was_active = excess[v] > eps;
                excess[v] += cap;
                excess[s] -= cap;
                if v != t && !was_active && excess[v] > eps {
                    buckets[height[v]].push(v);
                    highest = highest.max(height[v]);
                }
            }
        }

        loop {
            while highest > 0 && buckets[highest].is_empty() {
                highest -= 1;
            }
            let Some(u) = buckets[highest].pop() else {
                if highest == 0 {
                    break;
                }
                continue;
            };
            if height[u] != highest || excess[u] <= eps || u == s || u == t {
                continue;
            }
            // Discharge u.
            while excess[u] > eps {
                if current[u] == self.adj[u].len() {
                    // Relabel.
                    let old = height[u];
                    let mut new_h = usize::MAX;
                    for arc in &self.adj[u] {
                        if arc.cap > eps {
                            new_h = new_h.min(height[arc.to] + 1);
                        }
                    }
                    if new_h == usize::MAX || new_h > max_h {
                        // Stranded excess (numerically negligible); drop it.
                        excess[u] = 0.0;
                        break;
                    }
                    count[old] -= 1;
                    height[u] = new_h;
                    count[new_h] += 1;
                    current[u] = 0;
                    if count[old] == 0 && old < n {
                        // Gap: nodes above `old` and below n can no longer reach the sink.
                        for v in 0..n {
                            if v != s && height[v] > old && height[v] < n {
                                count[height[v]] -= 1;
                                height[v] = n + 1;
                                count[n + 1] += 1;
                                current[v] = 0;
                                if v != u && excess[v] > eps {
                                    buckets[n + 1].push(v);
                                    highest = highest.max(n + 1);
                                }
                            }
                        }
                    }
                    continue;
                }
                let i = current[u];
                let (v, r, cap) = {
                    let a = &self.adj[u][i];
                    (a.to, a.rev, a.cap)
                };
                if cap > eps && height[u] == height[v] + 1 {
                    let delta = excess[u].min(cap);
                    self.adj[u][i].cap -= delta;
                    self.adj[v][r].cap += delta;
                    excess[u] -= delta;
                    let was_active = excess[v] > eps;
                    excess[v] += delta;
                    if v != s && v != t && !was_active && excess[v] > eps {
                        buckets[height[v]].push(v);
                        highest = highest.max(height[v]);
                    }
                    if self.adj[u][i].cap <= eps {
                        current[u] += 1;
                    }
                } else {
                    current[u] += 1;
                }
            }
            if height[u] > highest {
                highest = height[u];
            }
        }
        excess[t]
    }

    fn residual_distances_to(&self, t: usize, eps: f64) -> Vec<Option<usize>> {
        let n = self.adj.len();
        let mut dist = vec![None; n];
        dist[t] = Some(0);
        let mut queue = std::collections::VecDeque::from([t]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for arc in &self.adj[u] {
                // arc u -> v; its reverse v -> u has residual self.adj[v][arc.rev].cap
                let v = arc.to;
                if dist[v].is_none() && self.adj[v][arc.rev].cap > eps {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn reach_from_source(&self, tol: f64) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(u) = stack.pop() {
            for arc in &self.adj[u] {
                if arc.cap > tol && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }

    fn reach_sink(&self, tol: f64) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[self.sink] = true;
        let mut stack = vec![self.sink];
        while let Some(u) = stack.pop() {
            for arc in &self.adj[u] {
                let v = arc.to;
                if !seen[v] && self.adj[v][arc.rev].cap > tol {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut_capacity(arcs: &[(usize, usize, f64)], side: &[bool]) -> f64 {
        arcs.iter()
            .filter(|&&(a, b, _)| side[a] && !side[b])
            .map(|&(_, _, c)| c)
            .sum()
    }

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1, max flow 23.
        let arcs = [
            (0, 1, 16.0),
            (0, 2, 13.0),
            (2, 1, 4.0),
            (1, 3, 12.0),
            (3, 2, 9.0),
            (2, 4, 14.0),
            (4, 3, 7.0),
            (3, 5, 20.0),
            (4, 5, 4.0),
        ];
        let mut net = FlowNetwork::new(6, 0, 5).unwrap();
        for &(a, b, c) in &arcs {
            net.add_arc(a, b, c).unwrap();
        }
        let cut = net.min_cut();
        assert!((cut.flow - 23.0).abs() < 1e-9);
        assert!((cut_capacity(&arcs, &cut.min_source_side) - 23.0).abs() < 1e-9);
        assert!((cut_capacity(&arcs, &cut.max_source_side) - 23.0).abs() < 1e-9);
    }

    #[test]
    fn minimal_and_maximal_cuts_differ_on_ties() {
        // s -> a (1), a -> t (1): both {s} and {s, a} are minimum cuts.
        let mut net = FlowNetwork::new(3, 0, 2).unwrap();
        net.add_arc(0, 1, 1.0).unwrap();
        net.add_arc(1, 2, 1.0).unwrap();
        let cut = net.min_cut();
        assert_eq!(cut.min_source_side, vec![true, false, false]);
        assert_eq!(cut.max_source_side, vec![true, true, false]);
    }

    #[test]
    fn rejects_bad_terminals_and_capacities() {
        assert!(FlowNetwork::new(2, 0, 0).is_err());
        assert!(FlowNetwork::new(2, 0, 5).is_err());
        let mut net = FlowNetwork::new(2, 0, 1).unwrap();
        assert!(net.add_arc(0, 1, -1.0).is_err());
        assert!(net.add_arc(0, 7, 1.0).is_err());
    }

    #[test]
    fn random_networks_match_bruteforce_cut() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(3..9);
            let mut arcs = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.random_bool(0.4) {
                        arcs.push((a, b, rng.random_range(0.0..3.0)));
                    }
                }
            }
            let mut net = FlowNetwork::new(n, 0, n - 1).unwrap();
            for &(a, b, c) in &arcs {
                net.add_arc(a, b, c).unwrap();
            }
            let cut = net.min_cut();
            let mut best = f64::INFINITY;
            let inner = n - 2;
            for mask in 0..(1u32 << inner) {
                let mut side = vec![false; n];
                side[0] = true;
                for k in 0..inner {
                    side[k + 1] = mask >> k & 1 == 1;
                }
                best = best.min(cut_capacity(&arcs, &side));
            }
            assert!((cut.flow - best).abs() < 1e-9, "{} vs {}", cut.flow, best);
            assert!((cut_capacity(&arcs, &cut.min_source_side) - best).abs() < 1e-9);
            assert!((cut_capacity(&arcs, &cut.max_source_side) - best).abs() < 1e-9);
            for v in 0..n {
                assert!(!cut.min_source_side[v] || cut.max_source_side[v]);
            }
        }
    }
}
