//! The multi-connection flow problem as a mixed-integer program.
//!
//! Flows are counted in packets per second. For connection `k = (s, t)` and
//! active edge `{u, v}` there are two integer variables `x[k,u,v]` and
//! `x[k,v,u]`; a continuous `rho` is maximized subject to, per edge,
//!
//! ```text
//! sum_k (x[k,u,v] + x[k,v,u])          <= c(u,v) / P     classical channel
//! sum_k beta_k (x[k,u,v] + x[k,v,u])   <= r(u,v) / P     key consumption
//! ```
//!
//! conservation of every connection at every node other than its endpoints,
//! and one linking row per connection,
//!
//! ```text
//! rho * d_k / P - sum_u (x[k,u,t] - x[k,t,u]) <= 0
//! ```
//!
//! which is `rho / P - [[x_k]] / d_k <= 0` multiplied through by `d_k`.

mod rounding;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::keyrate::key_rate;
use crate::model::{Edge, NetworkInstance, NodeId};
use crate::solver::{
    self, LinearProgram, MilpOptions, Relation, SolveStatus, SolverConfig, SolverError, VarKind,
};

#[derive(Debug, Error)]
pub enum McfpError {
    #[error("the connection set is empty")]
    EmptyConnectionSet,
    #[error("connection {source_node}->{sink} has zero demand")]
    ZeroDemand { source_node: NodeId, sink: NodeId },
    #[error("unknown connection {source_node}->{sink}")]
    UnknownConnection { source_node: NodeId, sink: NodeId },
    #[error("expected {expected} edge key rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Directed flow variable of one connection on one edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowVarKey {
    pub source: NodeId,
    pub sink: NodeId,
    pub from: NodeId,
    pub to: NodeId,
}

/// The program plus the bookkeeping to map solutions back to flows.
#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub program: LinearProgram,
    /// Flow variable `j` is `keys[j]`; `rho` comes after all of them.
    pub keys: Vec<FlowVarKey>,
    pub rho: usize,
    pub packet_bits: u32,
    /// `(source, sink, demand_bps)` in connection order.
    pub connections: Vec<(NodeId, NodeId, f64)>,
    layout: FlowLayout,
}

/// Index form of the program's flow structure. The variables of connection
/// `k` on active edge `e` are `2 (k E + e)` (`a -> b`) and the one after it.
#[derive(Debug, Clone)]
struct FlowLayout {
    nodes: usize,
    /// Node indices `(a, b)` of each active edge.
    ends: Vec<(usize, usize)>,
    /// Classical and key capacity of each active edge, in packets/s.
    classical: Vec<f64>,
    key: Vec<f64>,
    terminals: Vec<(usize, usize)>,
    beta: Vec<f64>,
    /// `d_k / P`: packets/s per unit of satisfaction.
    scale: Vec<f64>,
}

impl FlowLayout {
    fn var(&self, k: usize, e: usize, forward: bool) -> usize {
        2 * (k * self.ends.len() + e) + usize::from(!forward)
    }
}

impl MilpInstance {
    pub fn flow_variables(&self) -> Vec<usize> {
        (0..self.keys.len()).collect()
    }

    /// Maps a solution vector to a flow assignment (values in packets/s).
    pub fn assignment(&self, values: &[f64]) -> FlowAssignment {
        let mut flows = BTreeMap::new();
        for (key, &v) in self.keys.iter().zip(values) {
            flows.insert(key.clone(), v);
        }
        FlowAssignment {
            packet_bits: self.packet_bits,
            connections: self
                .connections
                .iter()
                .map(|(s, t, _)| (s.clone(), t.clone()))
                .collect(),
            flows,
        }
    }
}

/// Per-connection, per-direction flows in packets per second.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    pub packet_bits: u32,
    pub connections: Vec<(NodeId, NodeId)>,
    pub flows: BTreeMap<FlowVarKey, f64>,
}

impl FlowAssignment {
    /// All-zero assignment over every flow variable of `milp`.
    pub fn zero(milp: &MilpInstance) -> Self {
        milp.assignment(&vec![0.0; milp.keys.len()])
    }

    pub fn get(&self, key: &FlowVarKey) -> f64 {
        self.flows.get(key).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, key: FlowVarKey, packets: f64) {
        self.flows.insert(key, packets);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub status: SolveStatus,
    /// The ITS communication bound `B`.
    pub bound: f64,
    pub assignment: FlowAssignment,
    /// `M(s,t)` from the integral flows, in connection order.
    pub satisfactions: Vec<((NodeId, NodeId), f64)>,
    /// Objective reported by the solver (`rho`).
    pub rho: f64,
    pub nodes_explored: u64,
}

impl BoundResult {
    /// `B >= 1`: every connection's demand is met.
    pub fn satisfied(&self) -> bool {
        self.bound >= 1.0
    }
}

/// Key generation capability of one edge in bits/second.
pub fn edge_key_capability(edge: &Edge, params: &crate::keyrate::QkdSystemParams) -> f64 {
    if edge.classical_capacity_bps == 0.0 {
        return 0.0;
    }
    edge.system_count as f64 * key_rate(edge.length_km, params)
}

/// Key capability of every edge of the instance's topology, in declaration
/// order. Optional edges get 0.
pub fn key_capabilities(instance: &NetworkInstance) -> Vec<f64> {
    instance
        .topology()
        .edges
        .iter()
        .map(|e| {
            if e.optional {
                0.0
            } else {
                edge_key_capability(e, instance.params())
            }
        })
        .collect()
}

pub fn build_milp(instance: &NetworkInstance) -> Result<MilpInstance, McfpError> {
    build_milp_with_rates(instance, &key_capabilities(instance))
}

/// Builds the program with explicit per-edge key rates (bits/second, one per
/// topology edge in declaration order).
pub fn build_milp_with_rates(
    instance: &NetworkInstance,
    key_rates: &[f64],
) -> Result<MilpInstance, McfpError> {
    let topo = instance.topology();
    if key_rates.len() != topo.edges.len() {
        return Err(McfpError::RateCount {
            expected: topo.edges.len(),
            got: key_rates.len(),
        });
    }
    let demand = instance.demand();
    if demand.is_empty() {
        return Err(McfpError::EmptyConnectionSet);
    }
    let p = instance.packet_bits() as f64;
    let nodes: Vec<&NodeId> = topo.active_nodes().map(|n| &n.id).collect();
    let node_index: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let edges: Vec<(usize, &Edge)> = topo.active_edges().collect();

    let mut lp = LinearProgram::new();
    let mut keys = Vec::new();
    // var_of[k][e] = (index of u->v, index of v->u)
    let mut var_of: Vec<Vec<(usize, usize)>> = Vec::with_capacity(demand.len());
    for (k, c) in demand.connections().iter().enumerate() {
        if c.demand_bps <= 0.0 {
            return Err(McfpError::ZeroDemand {
                source_node: c.source.clone(),
                sink: c.sink.clone(),
            });
        }
        let mut row = Vec::with_capacity(edges.len());
        for (ti, e) in &edges {
            let (ia, ib) = (node_index[&e.a], node_index[&e.b]);
            // Implied by the edge's own capacity rows; keeps branching finite.
            let mut cap = e.classical_capacity_bps / p;
            if c.beta > 0.0 {
                cap = cap.min(key_rates[*ti] / p / c.beta);
            }
            let ub = (cap + 1e-9).floor();
            let fwd = lp.add_variable(format!("x{k}_{ia}_{ib}"), VarKind::Integer, 0.0, ub, 0.0);
            keys.push(FlowVarKey {
                source: c.source.clone(),
                sink: c.sink.clone(),
                from: e.a.clone(),
                to: e.b.clone(),
            });
            let bwd = lp.add_variable(format!("x{k}_{ib}_{ia}"), VarKind::Integer, 0.0, ub, 0.0);
            keys.push(FlowVarKey {
                source: c.source.clone(),
                sink: c.sink.clone(),
                from: e.b.clone(),
                to: e.a.clone(),
            });
            row.push((fwd, bwd));
        }
        var_of.push(row);
    }
    let rho = lp.add_variable("rho", VarKind::Continuous, 0.0, f64::INFINITY, 1.0);

    for (ei, (ti, e)) in edges.iter().enumerate() {
        let both = |k: usize| [var_of[k][ei].0, var_of[k][ei].1];
        lp.add_constraint(
            format!("cap{ei}"),
            (0..demand.len()).flat_map(|k| both(k).map(|j| (j, 1.0))),
            Relation::Le,
            e.classical_capacity_bps / p,
        );
        lp.add_constraint(
            format!("key{ei}"),
            demand
                .connections()
                .iter()
                .enumerate()
                .flat_map(|(k, c)| both(k).map(move |j| (j, c.beta))),
            Relation::Le,
            key_rates[*ti] / p,
        );
    }

    for (k, c) in demand.connections().iter().enumerate() {
        for node in &nodes {
            if *node == &c.source || *node == &c.sink {
                continue;
            }
            let mut terms = Vec::new();
            for (ei, (_, e)) in edges.iter().enumerate() {
                let (fwd, bwd) = var_of[k][ei];
                if &e.a == *node {
                    terms.push((fwd, 1.0));
                    terms.push((bwd, -1.0));
                } else if &e.b == *node {
                    terms.push((bwd, 1.0));
                    terms.push((fwd, -1.0));
                }
            }
            lp.add_constraint(
                format!("cons{k}_{}", node_index[*node]),
                terms,
                Relation::Eq,
                0.0,
            );
        }
    }

    for (k, c) in demand.connections().iter().enumerate() {
        let mut terms = vec![(rho, c.demand_bps / p)];
        for (ei, (_, e)) in edges.iter().enumerate() {
            let (fwd, bwd) = var_of[k][ei];
            if e.b == c.sink {
                terms.push((fwd, -1.0));
                terms.push((bwd, 1.0));
            } else if e.a == c.sink {
                terms.push((bwd, -1.0));
                terms.push((fwd, 1.0));
            }
        }
        lp.add_constraint(format!("link{k}"), terms, Relation::Le, 0.0);
    }

    let layout = FlowLayout {
        nodes: nodes.len(),
        ends: edges.iter().map(|(_, e)| (node_index[&e.a], node_index[&e.b])).collect(),
        classical: edges.iter().map(|(_, e)| e.classical_capacity_bps / p).collect(),
        key: edges.iter().map(|(ti, _)| key_rates[*ti] / p).collect(),
        terminals: demand
            .connections()
            .iter()
            .map(|c| (node_index[&c.source], node_index[&c.sink]))
            .collect(),
        beta: demand.connections().iter().map(|c| c.beta).collect(),
        scale: demand.connections().iter().map(|c| c.demand_bps / p).collect(),
    };
    Ok(MilpInstance {
        program: lp,
        keys,
        rho,
        layout,
        packet_bits: instance.packet_bits(),
        connections: demand
            .connections()
            .iter()
            .map(|c| (c.source.clone(), c.sink.clone(), c.demand_bps))
            .collect(),
    })
}

/// Net flow into the sink, in bits/second.
pub fn flow_value(assignment: &FlowAssignment, source: &NodeId, sink: &NodeId) -> Result<f64, McfpError> {
    if !assignment
        .connections
        .iter()
        .any(|(s, t)| s == source && t == sink)
    {
        return Err(McfpError::UnknownConnection {
            source_node: source.clone(),
            sink: sink.clone(),
        });
    }
    let mut net = 0.0;
    for (key, &v) in &assignment.flows {
        if &key.source != source || &key.sink != sink {
            continue;
        }
        if &key.to == sink {
            net += v;
        }
        if &key.from == sink {
            net -= v;
        }
    }
    Ok(assignment.packet_bits as f64 * net)
}

/// `M(s,t)`: delivered rate over demanded rate.
pub fn demand_satisfaction(
    assignment: &FlowAssignment,
    source: &NodeId,
    sink: &NodeId,
    demand_bps: f64,
) -> Result<f64, McfpError> {
    if demand_bps <= 0.0 {
        return Err(McfpError::ZeroDemand {
            source_node: source.clone(),
            sink: sink.clone(),
        });
    }
    Ok(flow_value(assignment, source, sink)? / demand_bps)
}

/// Minimum satisfaction over the connection set.
pub fn whole_satisfaction(
    assignment: &FlowAssignment,
    demand: &crate::model::DemandModel,
) -> Result<f64, McfpError> {
    if demand.is_empty() {
        return Err(McfpError::EmptyConnectionSet);
    }
    let mut worst = f64::INFINITY;
    for c in demand.connections() {
        worst = worst.min(demand_satisfaction(assignment, &c.source, &c.sink, c.demand_bps)?);
    }
    Ok(worst)
}

/// Upper bound on the reachable objective given a relaxation value: the best
/// integral `rho` is some `M(s,t)`, a multiple of `P / d(s,t)`.
fn lattice_bound(value: f64, packet_bits: f64, demands: &[f64]) -> f64 {
    demands
        .iter()
        .map(|&d| ((value * d / packet_bits) + 1e-6).floor() * packet_bits / d)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Computes the ITS communication bound with the instance's own key rates.
pub fn its_bound(instance: &NetworkInstance, cfg: &SolverConfig) -> Result<BoundResult, McfpError> {
    its_bound_with_rates(instance, &key_capabilities(instance), cfg)
}

pub fn its_bound_with_rates(
    instance: &NetworkInstance,
    key_rates: &[f64],
    cfg: &SolverConfig,
) -> Result<BoundResult, McfpError> {
    let milp = build_milp_with_rates(instance, key_rates)?;
    let p = instance.packet_bits() as f64;
    let demands: Vec<f64> = milp.connections.iter().map(|c| c.2).collect();
    let rounding = |v: f64| lattice_bound(v, p, &demands);
    let program = solver::round_integer_rows(&milp.program, &milp.flow_variables());
    let incumbent = rounding::round_relaxation(&milp, &program, &rounding, cfg)?;
    let options = MilpOptions {
        bound_rounding: Some(&rounding),
        incumbent,
    };
    let sol = solver::solve_milp_with(&program, &milp.flow_variables(), cfg, options)?;
    match sol.status {
        SolveStatus::Optimal => {}
        other => {
            return Err(McfpError::Internal(format!(
                "flow program reported {other:?}; the zero flow is always feasible"
            )))
        }
    }
    let assignment = milp.assignment(&sol.values);
    let mut satisfactions = Vec::with_capacity(milp.connections.len());
    for (s, t, d) in &milp.connections {
        satisfactions.push(((s.clone(), t.clone()), demand_satisfaction(&assignment, s, t, *d)?));
    }
    let bound = satisfactions
        .iter()
        .map(|(_, m)| *m)
        .fold(f64::INFINITY, f64::min);
    Ok(BoundResult {
        status: SolveStatus::Optimal,
        bound,
        assignment,
        satisfactions,
        rho: sol.objective,
        nodes_explored: sol.nodes,
    })
}

/// Optimum of the continuous relaxation, as a satisfaction value.
pub fn lp_relaxation_bound(instance: &NetworkInstance, cfg: &SolverConfig) -> Result<f64, McfpError> {
    let milp = build_milp(instance)?;
    let sol = solver::solve_lp_with(&milp.program, cfg)?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol.objective),
        other => Err(McfpError::Internal(format!("relaxation reported {other:?}"))),
    }
}

/// A violated flow condition, with how far it is off.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A flow that is not a whole number of packets, or negative.
    NotIntegral { key: FlowVarKey, value: f64 },
    /// A flow on an edge that is not active, or for an unknown connection.
    UnknownVariable { key: FlowVarKey },
    ClassicalCapacity { edge: String, used: f64, capacity: f64 },
    KeyCapacity { edge: String, used: f64, capacity: f64 },
    Conservation { source: NodeId, sink: NodeId, node: NodeId, imbalance: f64 },
}

impl Violation {
    /// Amount by which the condition is violated (packets/s, or the
    /// distance to the nearest integer).
    pub fn slack(&self) -> f64 {
        match self {
            Violation::NotIntegral { value, .. } => {
                if *value < 0.0 {
                    -value
                } else {
                    (value - value.round()).abs()
                }
            }
            Violation::UnknownVariable { .. } => f64::INFINITY,
            Violation::ClassicalCapacity { used, capacity, .. }
            | Violation::KeyCapacity { used, capacity, .. } => used - capacity,
            Violation::Conservation { imbalance, .. } => imbalance.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Rechecks an assignment against integrality, shared classical capacity,
/// key capacity and flow conservation, independently of the solver.
pub fn verify_assignment(instance: &NetworkInstance, assignment: &FlowAssignment) -> VerificationReport {
    verify_assignment_with_rates(instance, assignment, &key_capabilities(instance))
}

pub fn verify_assignment_with_rates(
    instance: &NetworkInstance,
    assignment: &FlowAssignment,
    key_rates: &[f64],
) -> VerificationReport {
    const TOL: f64 = 1e-6;
    let topo = instance.topology();
    let p = instance.packet_bits() as f64;
    let mut violations = Vec::new();

    let mut load: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut balance: BTreeMap<(&NodeId, &NodeId, &NodeId), f64> = BTreeMap::new();
    for (key, &v) in &assignment.flows {
        let conn = instance.demand().get(&key.source, &key.sink);
        let edge = topo
            .edges
            .iter()
            .position(|e| !e.optional && ((e.a == key.from && e.b == key.to) || (e.b == key.from && e.a == key.to)));
        let (Some(conn), Some(ei)) = (conn, edge) else {
            if v != 0.0 {
                violations.push(Violation::UnknownVariable { key: key.clone() });
            }
            continue;
        };
        if v < 0.0 || (v - v.round()).abs() > TOL {
            violations.push(Violation::NotIntegral {
                key: key.clone(),
                value: v,
            });
        }
        let entry = load.entry(ei).or_default();
        entry.0 += v;
        entry.1 += conn.beta * v;
        *balance.entry((&key.source, &key.sink, &key.from)).or_default() += v;
        *balance.entry((&key.source, &key.sink, &key.to)).or_default() -= v;
    }

    for (ei, (used, keyed)) in load {
        let e = &topo.edges[ei];
        let capacity = e.classical_capacity_bps / p;
        if used > capacity + TOL {
            violations.push(Violation::ClassicalCapacity {
                edge: e.name(),
                used,
                capacity,
            });
        }
        let capacity = key_rates[ei] / p;
        if keyed > capacity + TOL {
            violations.push(Violation::KeyCapacity {
                edge: e.name(),
                used: keyed,
                capacity,
            });
        }
    }

    for ((s, t, node), imbalance) in balance {
        if node != s && node != t && imbalance.abs() > TOL {
            violations.push(Violation::Conservation {
                source: s.clone(),
                sink: t.clone(),
                node: node.clone(),
                imbalance,
            });
        }
    }
    VerificationReport { violations }
}
