//! Network model: nodes, undirected edges, connections and their demands.
//!
//! A [`Topology`] may carry optional nodes and edges (candidate sites that are
//! not built yet). Optional elements are inactive: they contribute no flow
//! variables until [`apply_modification`] selects them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyrate::QkdSystemParams;

/// Default classical channel capacity when a topology file omits it: 1 Gbps.
pub const DEFAULT_CLASSICAL_CAPACITY_BPS: f64 = 1e9;

/// Default packet size: 500 bytes.
pub const DEFAULT_PACKET_BITS: u32 = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("node id must be non-empty")]
    EmptyNodeId,
    #[error("node {0} is declared more than once")]
    DuplicateNode(NodeId),
    #[error("edge {a}-{b} is declared more than once")]
    DuplicateEdge { a: NodeId, b: NodeId },
    #[error("edge {edge} references unknown node {node}")]
    DanglingEndpoint { edge: String, node: NodeId },
    #[error("edge {0}-{0} is a self-loop")]
    SelfLoop(NodeId),
    #[error("edge {edge}: {attribute} must be a finite non-negative number, got {value}")]
    NegativeAttribute {
        edge: String,
        attribute: &'static str,
        value: f64,
    },
    #[error("edge {edge} touches optional node {node} but is not marked optional")]
    MandatoryEdgeOnOptionalNode { edge: String, node: NodeId },
    #[error("edge label {0} is used more than once")]
    DuplicateLabel(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not optional")]
    NotOptional(NodeId),
    #[error("key consumption ratio {0} is outside [0, 1]")]
    InvalidBeta(f64),
    #[error("demand {0} bps must be a finite non-negative number")]
    InvalidDemand(f64),
    #[error("connection {source_node}->{sink} has identical endpoints")]
    DegenerateConnection { source_node: NodeId, sink: NodeId },
    #[error("connection {source_node}->{sink} is listed more than once")]
    DuplicateConnection { source_node: NodeId, sink: NodeId },
    #[error("connection endpoint {0} is not an active node of the topology")]
    InactiveEndpoint(NodeId),
    #[error("packet size must be positive")]
    ZeroPacketSize,
}

/// Opaque node identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            Err(ModelError::EmptyNodeId)
        } else {
            Ok(Self(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
}

impl Node {
    pub fn new(id: NodeId) -> Self {
        Self {
            id,
            optional: false,
        }
    }

    pub fn optional(id: NodeId) -> Self {
        Self { id, optional: true }
    }
}

fn default_capacity() -> f64 {
    DEFAULT_CLASSICAL_CAPACITY_BPS
}

fn default_systems() -> u32 {
    1
}

/// Undirected link. `{a, b}` identifies the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    /// Display name such as `e1`; defaults to `a-b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
    #[serde(default = "default_capacity")]
    pub classical_capacity_bps: f64,
    /// QKD systems installed on the link; key capability scales linearly.
    #[serde(default = "default_systems")]
    pub system_count: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, length_km: f64) -> Self {
        Self {
            label: None,
            a,
            b,
            length_km,
            classical_capacity_bps: DEFAULT_CLASSICAL_CAPACITY_BPS,
            system_count: 1,
            optional: false,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("{}-{}", self.a, self.b),
        }
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.a.clone(), self.b.clone())
    }

    pub fn touches(&self, node: &NodeId) -> bool {
        &self.a == node || &self.b == node
    }

    pub fn other(&self, node: &NodeId) -> Option<&NodeId> {
        if &self.a == node {
            Some(&self.b)
        } else if &self.b == node {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// Unordered endpoint pair, stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(NodeId, NodeId);

impl EdgeKey {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }

    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        (&self.0, &self.1)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    #[serde(default)]
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl Topology {
    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Non-optional nodes, in declaration order.
    pub fn active_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| !n.optional)
    }

    /// Non-optional edges with their declaration index.
    pub fn active_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| !e.optional)
    }

    pub fn edge_index(&self, key: &EdgeKey) -> Option<usize> {
        self.edges.iter().position(|e| &e.key() == key)
    }

    /// Resolves an edge by label, or by `a-b` / `a,b` endpoint notation.
    pub fn find_edge(&self, name: &str) -> Result<usize, ModelError> {
        if let Some(i) = self
            .edges
            .iter()
            .position(|e| e.label.as_deref() == Some(name))
        {
            return Ok(i);
        }
        for sep in ['-', ','] {
            if let Some((a, b)) = name.split_once(sep) {
                if let (Ok(a), Ok(b)) = (NodeId::new(a.trim()), NodeId::new(b.trim())) {
                    if let Some(i) = self.edge_index(&EdgeKey::new(a, b)) {
                        return Ok(i);
                    }
                }
            }
        }
        Err(ModelError::UnknownEdge(name.to_string()))
    }

    /// Applies a consistent node renaming; unmapped ids are kept.
    pub fn relabeled(&self, map: &HashMap<NodeId, NodeId>) -> Topology {
        let r = |id: &NodeId| map.get(id).cloned().unwrap_or_else(|| id.clone());
        Topology {
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    id: r(&n.id),
                    optional: n.optional,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    a: r(&e.a),
                    b: r(&e.b),
                    ..e.clone()
                })
                .collect(),
        }
    }
}

/// Checks every node and edge invariant and returns the topology unchanged.
pub fn validate_topology(t: Topology) -> Result<Topology, ModelError> {
    let mut optional: HashMap<&NodeId, bool> = HashMap::new();
    for n in &t.nodes {
        if optional.insert(&n.id, n.optional).is_some() {
            return Err(ModelError::DuplicateNode(n.id.clone()));
        }
    }
    let mut seen = HashSet::new();
    let mut labels = HashSet::new();
    for e in &t.edges {
        let name = e.name();
        if e.a == e.b {
            return Err(ModelError::SelfLoop(e.a.clone()));
        }
        for end in [&e.a, &e.b] {
            match optional.get(end) {
                None => {
                    return Err(ModelError::DanglingEndpoint {
                        edge: name,
                        node: end.clone(),
                    })
                }
                Some(true) if !e.optional => {
                    return Err(ModelError::MandatoryEdgeOnOptionalNode {
                        edge: name,
                        node: end.clone(),
                    })
                }
                _ => {}
            }
        }
        for (attribute, value) in [
            ("length_km", e.length_km),
            ("classical_capacity_bps", e.classical_capacity_bps),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::NegativeAttribute {
                    edge: name,
                    attribute,
                    value,
                });
            }
        }
        if !seen.insert(e.key()) {
            return Err(ModelError::DuplicateEdge {
                a: e.a.clone(),
                b: e.b.clone(),
            });
        }
        if let Some(l) = &e.label {
            if !labels.insert(l.as_str()) {
                return Err(ModelError::DuplicateLabel(l.clone()));
            }
        }
    }
    Ok(t)
}

/// An ordered source-sink pair with its demand and key consumption ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub source: NodeId,
    pub sink: NodeId,
    pub demand_bps: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

/// The connection set `K`. Zero-demand pairs are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandModel {
    connections: Vec<Connection>,
}

impl DemandModel {
    /// Builds a demand model, dropping zero-demand connections.
    pub fn new(connections: Vec<Connection>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(connections.len());
        for c in connections {
            if c.source == c.sink {
                return Err(ModelError::DegenerateConnection {
                    source_node: c.source,
                    sink: c.sink,
                });
            }
            if !(c.beta >= 0.0 && c.beta <= 1.0) {
                return Err(ModelError::InvalidBeta(c.beta));
            }
            if !(c.demand_bps.is_finite() && c.demand_bps >= 0.0) {
                return Err(ModelError::InvalidDemand(c.demand_bps));
            }
            if !seen.insert((c.source.clone(), c.sink.clone())) {
                return Err(ModelError::DuplicateConnection {
                    source_node: c.source,
                    sink: c.sink,
                });
            }
            if c.demand_bps > 0.0 {
                kept.push(c);
            }
        }
        Ok(Self { connections: kept })
    }

    /// Same demand `d` and ratio `beta` between every ordered pair of
    /// non-optional nodes.
    pub fn uniform(nodes: &[Node], demand_bps: f64, beta: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(ModelError::InvalidBeta(beta));
        }
        if !(demand_bps.is_finite() && demand_bps >= 0.0) {
            return Err(ModelError::InvalidDemand(demand_bps));
        }
        if demand_bps == 0.0 {
            return Ok(Self::default());
        }
        let active: Vec<&NodeId> = nodes.iter().filter(|n| !n.optional).map(|n| &n.id).collect();
        let mut connections = Vec::with_capacity(active.len() * active.len().saturating_sub(1));
        for s in &active {
            for t in &active {
                if s != t {
                    connections.push(Connection {
                        source: (*s).clone(),
                        sink: (*t).clone(),
                        demand_bps,
                        beta,
                    });
                }
            }
        }
        Ok(Self { connections })
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn len(&self) -> usize {
        self.connections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connections.is_empty()
    }

    pub fn get(&self, source: &NodeId, sink: &NodeId) -> Option<&Connection> {
        self.connections
            .iter()
            .find(|c| &c.source == source && &c.sink == sink)
    }

    /// Returns a copy with every ratio replaced by `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(Self {
            connections: self
                .connections
                .iter()
                .map(|c| Connection { beta, ..c.clone() })
                .collect(),
        })
    }

    pub fn relabeled(&self, map: &HashMap<NodeId, NodeId>) -> Self {
        let r = |id: &NodeId| map.get(id).cloned().unwrap_or_else(|| id.clone());
        Self {
            connections: self
                .connections
                .iter()
                .map(|c| Connection {
                    source: r(&c.source),
                    sink: r(&c.sink),
                    ..c.clone()
                })
                .collect(),
        }
    }
}

/// Everything needed to compute the ITS communication bound.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    topology: Topology,
    demand: DemandModel,
    packet_bits: u32,
    params: QkdSystemParams,
}

impl NetworkInstance {
    pub fn new(
        topology: Topology,
        demand: DemandModel,
        packet_bits: u32,
        params: QkdSystemParams,
    ) -> Result<Self, ModelError> {
        let topology = validate_topology(topology)?;
        if packet_bits == 0 {
            return Err(ModelError::ZeroPacketSize);
        }
        for c in demand.connections() {
            for end in [&c.source, &c.sink] {
                match topology.node(end) {
                    Some(n) if !n.optional => {}
                    _ => return Err(ModelError::InactiveEndpoint(end.clone())),
                }
            }
        }
        Ok(Self {
            topology,
            demand,
            packet_bits,
            params,
        })
    }

    /// Uniform demand over the topology's non-optional nodes.
    pub fn uniform(
        topology: Topology,
        demand_bps: f64,
        beta: f64,
        packet_bits: u32,
        params: QkdSystemParams,
    ) -> Result<Self, ModelError> {
        let demand = DemandModel::uniform(&topology.nodes, demand_bps, beta)?;
        Self::new(topology, demand, packet_bits, params)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn demand(&self) -> &DemandModel {
        &self.demand
    }

    pub fn packet_bits(&self) -> u32 {
        self.packet_bits
    }

    pub fn params(&self) -> &QkdSystemParams {
        &self.params
    }

    /// Same demand and parameters over a different topology.
    pub fn with_topology(&self, topology: Topology) -> Result<Self, ModelError> {
        Self::new(topology, self.demand.clone(), self.packet_bits, self.params.clone())
    }

    pub fn with_params(&self, params: QkdSystemParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn relabeled(&self, map: &HashMap<NodeId, NodeId>) -> Result<Self, ModelError> {
        Self::new(
            self.topology.relabeled(map),
            self.demand.relabeled(map),
            self.packet_bits,
            self.params.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Modification {
    /// One more QKD system on an existing edge.
    AddSystem(EdgeKey),
    /// Activate exactly these optional nodes; drop every other optional node.
    SelectNodes(Vec<NodeId>),
}

/// Applies a placement or selection to a topology.
///
/// `SelectNodes` keeps an optional edge iff both endpoints are present after
/// selection; the returned topology has no optional elements left.
pub fn apply_modification(t: &Topology, m: &Modification) -> Result<Topology, ModelError> {
    match m {
        Modification::AddSystem(key) => {
            let i = t
                .edge_index(key)
                .ok_or_else(|| ModelError::UnknownEdge(key.to_string()))?;
            let mut out = t.clone();
            out.edges[i].system_count += 1;
            Ok(out)
        }
        Modification::SelectNodes(selected) => {
            let mut chosen = BTreeSet::new();
            for id in selected {
                match t.node(id) {
                    None => return Err(ModelError::UnknownNode(id.clone())),
                    Some(n) if !n.optional => return Err(ModelError::NotOptional(id.clone())),
                    Some(_) => {
                        chosen.insert(id.clone());
                    }
                }
            }
            let nodes: Vec<Node> = t
                .nodes
                .iter()
                .filter(|n| !n.optional || chosen.contains(&n.id))
                .map(|n| Node::new(n.id.clone()))
                .collect();
            let present: HashSet<&NodeId> = nodes.iter().map(|n| &n.id).collect();
            let edges: Vec<Edge> = t
                .edges
                .iter()
                .filter(|e| present.contains(&e.a) && present.contains(&e.b))
                .map(|e| Edge {
                    optional: false,
                    ..e.clone()
                })
                .collect();
            Ok(Topology { nodes, edges })
        }
    }
}
