//! Graph kernels used by the network system functions: Dijkstra over usable
//! edges with deterministic path reconstruction, and max-flow / min-cut on
//! undirected capacity networks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::NetworkTopology;

/// Per-node adjacency: `(neighbor, edge index)`.
pub(crate) fn adjacency(topology: &NetworkTopology) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); topology.n_nodes()];
    for (e, (u, v)) in topology.endpoints().enumerate() {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    adj
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (dist, node); weights are finite so unwrap is safe.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest distances from `source` over edges where `usable` holds, with
/// non-negative weights. Unreachable nodes get `f64::INFINITY`.
pub(crate) fn shortest_distances(
    adj: &[Vec<(usize, usize)>],
    weights: &[f64],
    usable: impl Fn(usize) -> bool,
    source: usize,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e) in &adj[u] {
            if !usable(e) {
                continue;
            }
            let nd = d + weights[e];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Walks a shortest path from `from` towards the node where `dist` is zero,
/// following `dist` computed from the path's far end. At each step the
/// lexicographically smallest next node (then smallest edge index) among
/// exact shortest continuations is taken, which yields the lexicographically
/// smallest node sequence whenever the greedy walk completes. Zero-weight
/// cycles can strand the greedy walk; it then restarts ignoring ties, taking
/// any strictly progressing continuation.
///
/// Returns the edge indices along the path.
pub(crate) fn reconstruct_path(
    adj: &[Vec<(usize, usize)>],
    weights: &[f64],
    usable: impl Fn(usize) -> bool + Copy,
    dist: &[f64],
    from: usize,
) -> Option<Vec<usize>> {
    for lexicographic in [true, false] {
        if let Some(path) = walk(adj, weights, usable, dist, from, lexicographic) {
            return Some(path);
        }
    }
    None
}

fn walk(
    adj: &[Vec<(usize, usize)>],
    weights: &[f64],
    usable: impl Fn(usize) -> bool,
    dist: &[f64],
    from: usize,
    lexicographic: bool,
) -> Option<Vec<usize>> {
    if !dist[from].is_finite() {
        return None;
    }
    let mut visited = vec![false; adj.len()];
    let mut path = Vec::new();
    let mut u = from;
    visited[u] = true;
    while dist[u] > 0.0 {
        let mut best: Option<(usize, usize)> = None;
        for &(v, e) in &adj[u] {
            if !usable(e) || visited[v] {
                continue;
            }
            let exact = weights[e] + dist[v] == dist[u];
            let ok = if lexicographic {
                exact
            } else {
                exact && dist[v] < dist[u]
            };
            if ok && best.map_or(true, |b| (v, e) < b) {
                best = Some((v, e));
            }
        }
        let (v, e) = best?;
        path.push(e);
        visited[v] = true;
        u = v;
        if path.len() > adj.len() {
            return None;
        }
    }
    Some(path)
}

/// Max-flow on an undirected network via Dinic's algorithm. Capacities are
/// integers so comparisons against the demand threshold are exact.
pub(crate) struct FlowNetwork {
    n_nodes: usize,
    /// Paired arcs: arc `2e` runs u -> v, arc `2e + 1` runs v -> u; each is
    /// the other's reverse. Residual capacities.
    to: Vec<usize>,
    cap: Vec<i64>,
    /// Initial capacity per undirected edge.
    init: Vec<i64>,
    heads: Vec<usize>,
}

impl FlowNetwork {
    pub(crate) fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut net = FlowNetwork {
            n_nodes,
            to: Vec::new(),
            cap: Vec::new(),
            init: Vec::new(),
            heads: Vec::new(),
        };
        for (u, v, c) in edges {
            net.heads.push(u);
            net.to.push(v);
            net.cap.push(c);
            net.to.push(u);
            net.cap.push(c);
            net.init.push(c);
        }
        net
    }

    fn arcs_from(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for e in 0..self.init.len() {
            adj[self.heads[e]].push(2 * e);
            adj[self.to[2 * e]].push(2 * e + 1);
        }
        adj
    }

    /// Runs Dinic from `source` to `sink`; returns the max-flow value.
    pub(crate) fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let adj = self.arcs_from();
        let mut total = 0i64;
        loop {
            // BFS level graph on residual arcs.
            let mut level = vec![usize::MAX; self.n_nodes];
            level[source] = 0;
            let mut queue = std::collections::VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for &a in &adj[u] {
                    let v = self.to[a];
                    if self.cap[a] > 0 && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[sink] == usize::MAX {
                return total;
            }
            let mut iter = vec![0usize; self.n_nodes];
            loop {
                let pushed = self.push(&adj, &level, &mut iter, source, sink, i64::MAX);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn push(
        &mut self,
        adj: &[Vec<usize>],
        level: &[usize],
        iter: &mut [usize],
        u: usize,
        sink: usize,
        limit: i64,
    ) -> i64 {
        if u == sink {
            return limit;
        }
        while iter[u] < adj[u].len() {
            let a = adj[u][iter[u]];
            let v = self.to[a];
            if self.cap[a] > 0 && level[v] == level[u] + 1 {
                let pushed = self.push(adj, level, iter, v, sink, limit.min(self.cap[a]));
                if pushed > 0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        0
    }

    /// Net flow carried by undirected edge `e` (absolute value).
    pub(crate) fn edge_flow(&self, e: usize) -> i64 {
        (self.init[e] - self.cap[2 * e]).abs()
    }

    /// Edges crossing the source-side min cut after a max-flow run.
    pub(crate) fn min_cut_edges(&self, source: usize) -> Vec<usize> {
        let adj = self.arcs_from();
        let mut seen = vec![false; self.n_nodes];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &a in &adj[u] {
                let v = self.to[a];
                if self.cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.init.len())
            .filter(|&e| seen[self.heads[e]] != seen[self.to[2 * e]])
            .collect()
    }

    /// Total current capacity of the given edges.
    pub(crate) fn cut_capacity(&self, edges: &[usize]) -> i64 {
        edges.iter().map(|&e| self.init[e]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_topology(weights: &[f64]) -> (Vec<Vec<(usize, usize)>>, Vec<f64>) {
        let topo = NetworkTopology::new(
            weights.len() + 1,
            (0..weights.len()).map(|i| (i, i + 1)).collect(),
        )
        .unwrap();
        (adjacency(&topo), weights.to_vec())
    }

    #[test]
    fn dijkstra_line() {
        let (adj, w) = line_topology(&[1.0, 2.0, 4.0]);
        let dist = shortest_distances(&adj, &w, |_| true, 0);
        assert_eq!(dist, vec![0.0, 1.0, 3.0, 7.0]);
    }

    #[test]
    fn dijkstra_respects_usability() {
        let (adj, w) = line_topology(&[1.0, 2.0, 4.0]);
        let dist = shortest_distances(&adj, &w, |e| e != 1, 0);
        assert!(dist[2].is_infinite());
        assert!(dist[3].is_infinite());
    }

    #[test]
    fn path_reconstruction_prefers_smaller_nodes_on_ties() {
        // 0 -> {1, 2} -> 3 with equal weights everywhere.
        let topo = NetworkTopology::new(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let adj = adjacency(&topo);
        let w = vec![1.0; 4];
        let dist = shortest_distances(&adj, &w, |_| true, 3);
        let path = reconstruct_path(&adj, &w, |_| true, &dist, 0).unwrap();
        assert_eq!(path, vec![0, 2]);
    }

    #[test]
    fn max_flow_equals_known_value() {
        // Two disjoint unit paths 0-1-3 and 0-2-3 plus a cross edge.
        let mut net = FlowNetwork::new(
            4,
            vec![(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1), (1, 2, 5)],
        );
        assert_eq!(net.max_flow(0, 3), 2);
    }

    #[test]
    fn min_cut_capacity_matches_flow() {
        let mut net = FlowNetwork::new(
            4,
            vec![(0, 1, 3), (0, 2, 2), (1, 3, 2), (2, 3, 3), (1, 2, 1)],
        );
        let flow = net.max_flow(0, 3);
        let cut = net.min_cut_edges(0);
        assert_eq!(net.cut_capacity(&cut), flow);
    }

    #[test]
    fn undirected_edges_carry_flow_either_way() {
        // Flow must route 0 -> 2 -> 1 -> 3 through the undirected 1-2 edge.
        let mut net = FlowNetwork::new(4, vec![(0, 2, 1), (1, 2, 1), (1, 3, 1)]);
        assert_eq!(net.max_flow(0, 3), 1);
        assert_eq!(net.edge_flow(1), 1);
    }
}
