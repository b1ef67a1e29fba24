//! Pluggable coherent system performance functions: network connectivity,
//! shortest-path thresholds, max-flow thresholds, and table-driven oracles.
//!
//! Every implementation maps a component vector to failure or survival and,
//! where the analysis result makes it cheap, extracts a (sub-)minimal rule
//! as a by-product.

mod graph;
mod metric;
mod table;

pub use metric::{
    MetricCache, MetricEvaluation, MetricOrientation, MetricSystem, ThresholdSystem,
};
pub use table::TablePhi;

use crate::engine::SystemFunction;
use crate::error::{Error, Result};
use crate::model::{ComponentSpace, Rule, State, SystemEvaluation, Verdict};

use graph::{adjacency, reconstruct_path, shortest_distances, FlowNetwork};

/// An undirected network whose edges are the system's components: edge `n`
/// is driven by component `X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    n_nodes: usize,
    edges: Vec<EdgeDef>,
}

/// One undirected edge with optional length (travel time or distance) and
/// optional per-state flow capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDef {
    pub u: usize,
    pub v: usize,
    pub length: Option<f64>,
    pub capacities: Option<Vec<i64>>,
}

impl NetworkTopology {
    /// Bare topology from node pairs.
    pub fn new(n_nodes: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        NetworkTopology::with_edges(
            n_nodes,
            pairs
                .into_iter()
                .map(|(u, v)| EdgeDef {
                    u,
                    v,
                    length: None,
                    capacities: None,
                })
                .collect(),
        )
    }

    pub fn with_edges(n_nodes: usize, edges: Vec<EdgeDef>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("a network needs at least one node"));
        }
        for (e, edge) in edges.iter().enumerate() {
            if edge.u >= n_nodes || edge.v >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge {e} touches a node outside 0..{n_nodes}"
                )));
            }
            if let Some(len) = edge.length {
                if !(len > 0.0) || !len.is_finite() {
                    return Err(Error::invalid(format!(
                        "edge {e} has non-positive length {len}"
                    )));
                }
            }
            if let Some(caps) = &edge.capacities {
                if caps.is_empty() {
                    return Err(Error::invalid(format!("edge {e} has an empty capacity map")));
                }
                if caps.iter().any(|&c| c < 0) {
                    return Err(Error::invalid(format!("edge {e} has a negative capacity")));
                }
                if caps.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::invalid(format!(
                        "edge {e} capacities must be non-decreasing in the component state"
                    )));
                }
            }
        }
        Ok(NetworkTopology { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeDef] {
        &self.edges
    }

    pub fn endpoints(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.u, e.v))
    }

    /// Edge lengths, defaulting to 1.0 where unspecified.
    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length.unwrap_or(1.0)).collect()
    }

    fn capacity_at(&self, e: usize, state: State) -> Result<i64> {
        let caps = self.edges[e].capacities.as_ref().ok_or_else(|| {
            Error::invalid(format!("edge {e} has no per-state capacities"))
        })?;
        caps.get(usize::from(state)).copied().ok_or_else(|| {
            Error::invalid(format!(
                "edge {e} has no capacity for state {state} (map has {} states)",
                caps.len()
            ))
        })
    }
}

/// Two-terminal connectivity of binary components: the system survives when
/// a path of working edges joins the origin to the destination.
///
/// On survival, the most probable survival rule is extracted from the
/// shortest path under edge weights `-ln P(x_n^1)`, so the path maximises
/// the product of component survival probabilities. Failure extracts no
/// rule.
pub struct ConnectivityPhi {
    topology: NetworkTopology,
    adj: Vec<Vec<(usize, usize)>>,
    origin: usize,
    destination: usize,
    /// `-ln P(x_n^1)` per edge.
    weights: Vec<f64>,
}

impl ConnectivityPhi {
    pub fn new(
        topology: NetworkTopology,
        origin: usize,
        destination: usize,
        space: &ComponentSpace,
    ) -> Result<Self> {
        check_binary_components(&topology, space)?;
        check_terminals(&topology, &[origin], destination)?;
        let weights = (0..topology.n_edges())
            .map(|n| weight_nonneg(space.state_probability(n, 1)))
            .collect();
        let adj = adjacency(&topology);
        Ok(ConnectivityPhi {
            topology,
            adj,
            origin,
            destination,
            weights,
        })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }
}

impl SystemFunction for ConnectivityPhi {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        check_vector_len(x, self.topology.n_edges())?;
        let usable = |e: usize| x[e] == 1;
        let dist = shortest_distances(&self.adj, &self.weights, usable, self.destination);
        if !dist[self.origin].is_finite() {
            return Ok(SystemEvaluation::fail());
        }
        let path = reconstruct_path(&self.adj, &self.weights, usable, &dist, self.origin)
            .ok_or_else(|| Error::SystemFunction("path reconstruction failed".into()))?;
        let rule = path_rule(&path, x)?;
        SystemEvaluation::new(Verdict::Survive, Some(rule))
    }
}

/// Shortest-distance threshold on binary components: the system fails when
/// the post-event distance from the target to its closest origin exceeds
/// `threshold_factor` times the pre-disaster distance (computed with all
/// edges up). Disconnection counts as infinite distance.
pub struct ShortestPathThresholdPhi {
    topology: NetworkTopology,
    adj: Vec<Vec<(usize, usize)>>,
    origins: Vec<usize>,
    target: usize,
    threshold_factor: f64,
    lengths: Vec<f64>,
    /// Pre-disaster distance to the closest origin.
    base_distance: f64,
}

impl ShortestPathThresholdPhi {
    pub fn new(
        topology: NetworkTopology,
        origins: Vec<usize>,
        target: usize,
        threshold_factor: f64,
        space: &ComponentSpace,
    ) -> Result<Self> {
        check_binary_components(&topology, space)?;
        check_terminals(&topology, &origins, target)?;
        if !(threshold_factor > 0.0) {
            return Err(Error::invalid("threshold factor must be positive"));
        }
        let lengths = topology.lengths();
        let adj = adjacency(&topology);
        let dist = shortest_distances(&adj, &lengths, |_| true, target);
        let base_distance = origins.iter().map(|&o| dist[o]).fold(f64::INFINITY, f64::min);
        if !base_distance.is_finite() {
            return Err(Error::invalid(
                "target is unreachable from every origin even pre-disaster",
            ));
        }
        Ok(ShortestPathThresholdPhi {
            topology,
            adj,
            origins,
            target,
            threshold_factor,
            lengths,
            base_distance,
        })
    }

    pub fn base_distance(&self) -> f64 {
        self.base_distance
    }

    /// Post-event distance to the closest origin plus the edges of the
    /// selected shortest path (empty on disconnection).
    fn closest_path(&self, x: &[State]) -> Result<(f64, Vec<usize>)> {
        check_vector_len(x, self.topology.n_edges())?;
        let usable = |e: usize| x[e] == 1;
        let dist = shortest_distances(&self.adj, &self.lengths, usable, self.target);
        let mut best = f64::INFINITY;
        let mut best_origin = None;
        for &o in &self.origins {
            if dist[o] < best {
                best = dist[o];
                best_origin = Some(o);
            }
        }
        let Some(origin) = best_origin else {
            return Ok((f64::INFINITY, Vec::new()));
        };
        let path = reconstruct_path(&self.adj, &self.lengths, usable, &dist, origin)
            .ok_or_else(|| Error::SystemFunction("path reconstruction failed".into()))?;
        Ok((best, path))
    }
}

impl SystemFunction for ShortestPathThresholdPhi {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        let (distance, path) = self.closest_path(x)?;
        if distance > self.threshold_factor * self.base_distance {
            return Ok(SystemEvaluation::fail());
        }
        let rule = path_rule(&path, x)?;
        SystemEvaluation::new(Verdict::Survive, Some(rule))
    }
}

impl MetricSystem for ShortestPathThresholdPhi {
    fn orientation(&self) -> MetricOrientation {
        MetricOrientation::CostLike
    }

    fn evaluate_metric(&self, x: &[State]) -> Result<MetricEvaluation> {
        let (distance, path) = self.closest_path(x)?;
        Ok(MetricEvaluation {
            value: distance,
            survival_support: path.iter().map(|&e| (e, x[e])).collect(),
        })
    }
}

/// Max-flow threshold on multi-state components with per-state integer
/// capacities: the system fails when the max flow from origin to
/// destination is at most `demand`. Demand is compared exactly.
///
/// On survival, the extracted rule pins every edge carrying positive flow
/// at its current state; that edge set keeps the flow feasible however the
/// remaining components degrade. Optionally, failure extracts a rule from a
/// minimum cut at the current states (disabled by default).
pub struct MaxFlowThresholdPhi {
    topology: NetworkTopology,
    origin: usize,
    destination: usize,
    demand: i64,
    min_cut_rules: bool,
    /// Best state per component, from the space.
    best_states: Vec<State>,
}

impl MaxFlowThresholdPhi {
    pub fn new(
        topology: NetworkTopology,
        origin: usize,
        destination: usize,
        demand: i64,
        space: &ComponentSpace,
    ) -> Result<Self> {
        check_terminals(&topology, &[origin], destination)?;
        if demand < 0 {
            return Err(Error::invalid("demand must be non-negative"));
        }
        if space.n_components() != topology.n_edges() {
            return Err(Error::invalid(format!(
                "space has {} components for a {}-edge network",
                space.n_components(),
                topology.n_edges()
            )));
        }
        for e in 0..topology.n_edges() {
            for s in 0..space.n_states(e) {
                topology.capacity_at(e, s)?;
            }
        }
        let best_states = (0..space.n_components()).map(|n| space.best_state(n)).collect();
        Ok(MaxFlowThresholdPhi {
            topology,
            origin,
            destination,
            demand,
            min_cut_rules: false,
            best_states,
        })
    }

    /// Also extract failure rules from minimum cuts.
    pub fn with_min_cut_rules(mut self) -> Self {
        self.min_cut_rules = true;
        self
    }

    /// Full flow analysis at a vector: the max-flow value, the edges
    /// carrying flow, and a minimum cut with its capacity.
    pub fn flow_details(&self, x: &[State]) -> Result<FlowDetails> {
        let (value, net) = self.solve(x)?;
        let flow_edges = (0..self.topology.n_edges())
            .filter(|&e| net.edge_flow(e) > 0)
            .collect();
        let cut_edges = net.min_cut_edges(self.origin);
        let cut_capacity = net.cut_capacity(&cut_edges);
        Ok(FlowDetails {
            value,
            flow_edges,
            cut_edges,
            cut_capacity,
        })
    }

    fn solve(&self, x: &[State]) -> Result<(i64, FlowNetwork)> {
        check_vector_len(x, self.topology.n_edges())?;
        let arcs: Vec<(usize, usize, i64)> = self
            .topology
            .endpoints()
            .enumerate()
            .map(|(e, (u, v))| Ok((u, v, self.topology.capacity_at(e, x[e])?)))
            .collect::<Result<_>>()?;
        let mut net = FlowNetwork::new(self.topology.n_nodes(), arcs);
        let value = net.max_flow(self.origin, self.destination);
        // Max-flow/min-cut duality holds on every instance; a mismatch means
        // the solver is broken.
        let cut = net.min_cut_edges(self.origin);
        debug_assert_eq!(net.cut_capacity(&cut), value);
        Ok((value, net))
    }

    fn flow_support(&self, net: &FlowNetwork, x: &[State]) -> Vec<(usize, State)> {
        (0..self.topology.n_edges())
            .filter(|&e| net.edge_flow(e) > 0)
            .map(|e| (e, x[e]))
            .collect()
    }
}

impl SystemFunction for MaxFlowThresholdPhi {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        let (value, net) = self.solve(x)?;
        if value > self.demand {
            let rule = survival_rule_from_support(self.flow_support(&net, x));
            return SystemEvaluation::new(Verdict::Survive, rule);
        }
        if self.min_cut_rules {
            let cut = net.min_cut_edges(self.origin);
            let support: Vec<(usize, State)> = cut.iter().map(|&e| (e, x[e])).collect();
            let rule = failure_rule_from_cut(support, &self.best_states);
            return SystemEvaluation::new(Verdict::Fail, rule);
        }
        Ok(SystemEvaluation::fail())
    }
}

/// Result of one max-flow analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDetails {
    pub value: i64,
    pub flow_edges: Vec<usize>,
    pub cut_edges: Vec<usize>,
    pub cut_capacity: i64,
}

impl MetricSystem for MaxFlowThresholdPhi {
    fn orientation(&self) -> MetricOrientation {
        MetricOrientation::CapacityLike
    }

    fn evaluate_metric(&self, x: &[State]) -> Result<MetricEvaluation> {
        let (value, net) = self.solve(x)?;
        Ok(MetricEvaluation {
            value: value as f64,
            survival_support: self.flow_support(&net, x),
        })
    }
}

fn weight_nonneg(p: f64) -> f64 {
    (-p.ln()).max(0.0)
}

fn check_binary_components(topology: &NetworkTopology, space: &ComponentSpace) -> Result<()> {
    if space.n_components() != topology.n_edges() {
        return Err(Error::invalid(format!(
            "space has {} components for a {}-edge network",
            space.n_components(),
            topology.n_edges()
        )));
    }
    for n in 0..space.n_components() {
        if space.n_states(n) != 2 {
            return Err(Error::invalid(format!(
                "component {n} is not binary; connectivity functions need binary edges"
            )));
        }
    }
    Ok(())
}

fn check_terminals(topology: &NetworkTopology, origins: &[usize], target: usize) -> Result<()> {
    if origins.is_empty() {
        return Err(Error::invalid("at least one origin node is required"));
    }
    for &o in origins {
        if o >= topology.n_nodes() {
            return Err(Error::invalid(format!("origin node {o} out of range")));
        }
        if o == target {
            return Err(Error::invalid(
                "target coincides with an origin; the event is trivial",
            ));
        }
    }
    if target >= topology.n_nodes() {
        return Err(Error::invalid(format!("target node {target} out of range")));
    }
    Ok(())
}

fn check_vector_len(x: &[State], n_edges: usize) -> Result<()> {
    if x.len() != n_edges {
        return Err(Error::invalid(format!(
            "component vector has {} entries for a {}-edge network",
            x.len(),
            n_edges
        )));
    }
    Ok(())
}

/// Survival rule from a path: every traversed edge at state 1.
fn path_rule(path: &[usize], x: &[State]) -> Result<Rule> {
    let support: Vec<(usize, State)> = path.iter().map(|&e| (e, x[e])).collect();
    survival_rule_from_support(support).ok_or_else(|| {
        Error::Degenerate(
            "a survival path uses only worst-state edges; the system cannot fail".into(),
        )
    })
}

/// Survival rule from an edge support set, stripping worst states. `None`
/// when nothing remains.
pub(crate) fn survival_rule_from_support(support: Vec<(usize, State)>) -> Option<Rule> {
    let kept: Vec<(usize, State)> = support.into_iter().filter(|&(_, s)| s > 0).collect();
    if kept.is_empty() {
        return None;
    }
    Some(Rule::from_reduction(Verdict::Survive, kept))
}

/// Failure rule from a cut's edge states, stripping best states.
fn failure_rule_from_cut(support: Vec<(usize, State)>, best: &[State]) -> Option<Rule> {
    let kept: Vec<(usize, State)> = support.into_iter().filter(|&(e, s)| s < best[e]).collect();
    if kept.is_empty() {
        return None;
    }
    Some(Rule::from_reduction(Verdict::Fail, kept))
}
