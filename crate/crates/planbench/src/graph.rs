//! Nodes, transformation rules, and task graphs.
//!
//! The JSON shape is fixed by the prompt contract: a rule's `target` is a
//! one-element list, the graph-level `target` is a plain string, and node
//! labels look like `N17`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Construction and validation failures for graphs and their parts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid node label {0:?}: expected \"N\" followed by digits, no leading zero")]
    InvalidNodeLabel(String),
    #[error("rule {0}: source list is empty")]
    EmptySource(u32),
    #[error("rule {0}: duplicate node in source list")]
    DuplicateSource(u32),
    #[error("rule {0}: target also appears in its source list")]
    TargetInSource(u32),
    #[error("rule {0}: time and cost must both be at least 1")]
    NonPositiveWeight(u32),
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(u32),
    #[error("initial_source is empty")]
    NoInitialSources,
    #[error("duplicate node in initial_source")]
    DuplicateInitialSource,
    #[error("target {0} is already an initial source")]
    TargetIsInitial(NodeId),
    #[error("initial source {node} is produced by rule {rule}")]
    ProducedInitialSource { node: NodeId, rule: u32 },
    #[error("the rule precedence relation contains a cycle")]
    CyclicPrecedence,
    #[error("target {0} cannot be reached from the initial sources")]
    UnachievableTarget(NodeId),
}

/// A node label of the form `N1`, `N2`, ...
///
/// Only the number is stored; ordering is numeric, so `N2 < N10` where string
/// comparison would disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    /// The node numbered `n` (1-based; the label grammar has no `N0`).
    pub fn new(n: u32) -> NodeId {
        assert!(n > 0, "node numbers start at 1");
        NodeId(n)
    }

    pub fn number(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || GraphError::InvalidNodeLabel(s.to_string());
        let digits = s.strip_prefix('N').ok_or_else(err)?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        digits.parse::<u32>().map(NodeId).map_err(|_| err())
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Serializes a single node as a one-element list, per the wire format, and
/// accepts either a one-element list or a bare string when deserializing.
pub(crate) mod one_node_list {
    use super::NodeId;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(node: &NodeId, s: S) -> Result<S::Ok, S::Error> {
        [*node].serialize(s)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Single(NodeId),
        List(Vec<NodeId>),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NodeId, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Single(n) => Ok(n),
            Repr::List(v) if v.len() == 1 => Ok(v[0]),
            Repr::List(v) => Err(D::Error::custom(format!(
                "target must name exactly one node, got {}",
                v.len()
            ))),
        }
    }
}

/// One transformation: once every source node is available, the target can be
/// produced after `time` units at `cost`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: u32,
    pub source: Vec<NodeId>,
    #[serde(with = "one_node_list")]
    pub target: NodeId,
    pub time: u64,
    pub cost: u64,
}

impl Rule {
    /// Source nodes as a set, for order-insensitive comparisons.
    pub fn source_set(&self) -> BTreeSet<NodeId> {
        self.source.iter().copied().collect()
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.source.is_empty() {
            return Err(GraphError::EmptySource(self.id));
        }
        if self.source_set().len() != self.source.len() {
            return Err(GraphError::DuplicateSource(self.id));
        }
        if self.source.contains(&self.target) {
            return Err(GraphError::TargetInSource(self.id));
        }
        if self.time == 0 || self.cost == 0 {
            return Err(GraphError::NonPositiveWeight(self.id));
        }
        Ok(())
    }
}

/// A full planning task: rules, initially available nodes, and the node to reach.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub rules: Vec<Rule>,
    pub initial_source: Vec<NodeId>,
    pub target: NodeId,
}

impl TaskGraph {
    pub fn initial_set(&self) -> BTreeSet<NodeId> {
        self.initial_source.iter().copied().collect()
    }

    /// Every node mentioned anywhere in the graph.
    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut nodes: BTreeSet<NodeId> = self.initial_source.iter().copied().collect();
        nodes.insert(self.target);
        for r in &self.rules {
            nodes.extend(r.source.iter().copied());
            nodes.insert(r.target);
        }
        nodes
    }

    /// Indices into `rules`, grouped by the rule's target node.
    pub fn rules_by_target(&self) -> BTreeMap<NodeId, Vec<usize>> {
        let mut map: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            map.entry(r.target).or_default().push(i);
        }
        map
    }

    /// Distinct precedence edges (source node, target node) induced by rules.
    pub fn edge_count(&self) -> usize {
        let mut edges = BTreeSet::new();
        for r in &self.rules {
            for &s in &r.source {
                edges.insert((s, r.target));
            }
        }
        edges.len()
    }

    /// Nodes obtainable from the initial sources by closing under rules whose
    /// full source set is already obtained (least fixed point).
    pub fn achievable(&self) -> BTreeSet<NodeId> {
        let mut got = self.initial_set();
        loop {
            let mut changed = false;
            for r in &self.rules {
                if !got.contains(&r.target) && r.source.iter().all(|s| got.contains(s)) {
                    got.insert(r.target);
                    changed = true;
                }
            }
            if !changed {
                return got;
            }
        }
    }

    /// Topological order of all nodes under the precedence relation, smallest
    /// label first among ready nodes. Fails on cycles.
    pub fn topo_order(&self) -> Result<Vec<NodeId>, GraphError> {
        let nodes = self.nodes();
        let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut indegree: BTreeMap<NodeId, usize> = nodes.iter().map(|&n| (n, 0)).collect();
        for r in &self.rules {
            for &s in &r.source {
                if out.entry(s).or_default().insert(r.target) {
                    *indegree.get_mut(&r.target).expect("target is in nodes()") += 1;
                }
            }
        }
        let mut ready: BTreeSet<NodeId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&n, _)| n)
            .collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(&n) = ready.iter().next() {
            ready.remove(&n);
            order.push(n);
            if let Some(succs) = out.get(&n) {
                for &t in succs {
                    let d = indegree.get_mut(&t).expect("successor is in nodes()");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(t);
                    }
                }
            }
        }
        if order.len() == nodes.len() {
            Ok(order)
        } else {
            Err(GraphError::CyclicPrecedence)
        }
    }

    /// Check every graph invariant: per-rule sanity, unique ids, sane initial
    /// set, initial sources are heads, acyclicity, and target achievability.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut ids = BTreeSet::new();
        for r in &self.rules {
            r.check()?;
            if !ids.insert(r.id) {
                return Err(GraphError::DuplicateRuleId(r.id));
            }
        }
        if self.initial_source.is_empty() {
            return Err(GraphError::NoInitialSources);
        }
        let initial = self.initial_set();
        if initial.len() != self.initial_source.len() {
            return Err(GraphError::DuplicateInitialSource);
        }
        if initial.contains(&self.target) {
            return Err(GraphError::TargetIsInitial(self.target));
        }
        for r in &self.rules {
            if initial.contains(&r.target) {
                return Err(GraphError::ProducedInitialSource {
                    node: r.target,
                    rule: r.id,
                });
            }
        }
        self.topo_order()?;
        if !self.achievable().contains(&self.target) {
            return Err(GraphError::UnachievableTarget(self.target));
        }
        Ok(())
    }

    /// The graph in the exact JSON layout embedded in prompts (4-space indent,
    /// field order `rules, initial_source, target`).
    pub fn to_pretty_json(&self) -> String {
        crate::io::to_json_pretty(self)
    }
}
