//! Random task-graph construction.
//!
//! Two families: uniformly ordered random DAGs, and depth-bounded trees whose
//! edges all point toward the root, densified with ancestral/cross edges. A
//! generated DAG becomes a task graph by partitioning each node's predecessors
//! into AND-source groups (one rule per group), drawing durations, and picking
//! the query endpoints: heads become the initial sources, the target is drawn
//! among tails.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::{IndexedRandom as _, SliceRandom as _};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Rule, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    Random,
    TreeBased,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Random => "Random",
            Structure::TreeBased => "TreeBased",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeRelation {
    Linear,
    Uniform,
}

impl fmt::Display for EdgeRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeRelation::Linear => "Linear",
            EdgeRelation::Uniform => "Uniform",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("cannot fit {m} edges on {n} nodes")]
    InfeasibleEdgeCount { n: u32, m: u64 },
    #[error("no usable target after {0} attempts")]
    DegenerateGraph(u32),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

fn default_max_groups() -> u32 {
    4
}

fn default_time_range() -> (u64, u64) {
    (1, 50)
}

fn default_fixed_cost() -> u64 {
    1
}

/// Everything that pins down one generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub node_count: u32,
    pub structure: Structure,
    pub edge_relation: EdgeRelation,
    pub seed: u64,
    #[serde(default = "default_max_groups")]
    pub max_groups_per_node: u32,
    #[serde(default = "default_time_range")]
    pub time_range: (u64, u64),
    #[serde(default = "default_fixed_cost")]
    pub fixed_cost: u64,
}

impl GenConfig {
    pub fn new(node_count: u32, structure: Structure, edge_relation: EdgeRelation, seed: u64) -> GenConfig {
        GenConfig {
            node_count,
            structure,
            edge_relation,
            seed,
            max_groups_per_node: default_max_groups(),
            time_range: default_time_range(),
            fixed_cost: default_fixed_cost(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.node_count < 3 {
            return Err(GenError::InvalidConfig("node_count must be at least 3".into()));
        }
        if self.edge_relation == EdgeRelation::Uniform && self.structure != Structure::Random {
            return Err(GenError::InvalidConfig(
                "uniform edge relation is only defined for random structure".into(),
            ));
        }
        if self.time_range.0 == 0 || self.time_range.0 > self.time_range.1 {
            return Err(GenError::InvalidConfig(format!(
                "time_range [{}, {}] must satisfy 1 <= lo <= hi",
                self.time_range.0, self.time_range.1
            )));
        }
        if self.fixed_cost == 0 {
            return Err(GenError::InvalidConfig("fixed_cost must be at least 1".into()));
        }
        if self.max_groups_per_node == 0 {
            return Err(GenError::InvalidConfig("max_groups_per_node must be at least 1".into()));
        }
        Ok(())
    }
}

/// A bare precedence DAG over labeled nodes, before rules are attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedenceDag {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl PrecedenceDag {
    /// Nodes without incoming edges, ascending.
    pub fn heads(&self) -> Vec<NodeId> {
        let targets: BTreeSet<NodeId> = self.edges.iter().map(|&(_, b)| b).collect();
        self.nodes.iter().copied().filter(|n| !targets.contains(n)).collect()
    }

    /// Nodes without outgoing edges, ascending.
    pub fn tails(&self) -> Vec<NodeId> {
        let sources: BTreeSet<NodeId> = self.edges.iter().map(|&(a, _)| a).collect();
        self.nodes.iter().copied().filter(|n| !sources.contains(n)).collect()
    }

    /// Predecessors per node (only nodes that have any).
    pub fn predecessors(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut map: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            map.entry(b).or_default().insert(a);
        }
        map
    }

    pub fn is_acyclic(&self) -> bool {
        self.longest_path_edges().is_some()
    }

    /// Length in edges of the longest directed path, or `None` on a cycle.
    pub fn longest_path_edges(&self) -> Option<usize> {
        let index: BTreeMap<NodeId, usize> =
            self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            let (i, j) = (index[&a], index[&b]);
            out[i].push(j);
            indegree[j] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut dist = vec![0usize; n];
        let mut seen = 0;
        while let Some(i) = queue.pop() {
            seen += 1;
            for &j in &out[i] {
                dist[j] = dist[j].max(dist[i] + 1);
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push(j);
                }
            }
        }
        (seen == n).then(|| dist.into_iter().max().unwrap_or(0))
    }

    /// Connectivity of the underlying undirected graph.
    pub fn is_weakly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let index: BTreeMap<NodeId, usize> =
            self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            let (i, j) = (index[&a], index[&b]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut count = 0;
        while let Some(i) = stack.pop() {
            count += 1;
            for &j in &adj[i] {
                if !visited[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        count == self.nodes.len()
    }

    /// Structural invariants: acyclic, loop-free, duplicate-free, connected.
    pub fn check(&self) -> Result<(), GenError> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a == b {
                return Err(GenError::InvalidConfig(format!("self-loop on {a}")));
            }
            if !seen.insert((a, b)) {
                return Err(GenError::InvalidConfig(format!("duplicate edge {a} -> {b}")));
            }
        }
        if !self.is_acyclic() {
            return Err(GenError::InvalidConfig("cycle in generated DAG".into()));
        }
        if !self.is_weakly_connected() {
            return Err(GenError::InvalidConfig("generated DAG is disconnected".into()));
        }
        Ok(())
    }
}

/// Relabel position-indexed edges with a random node permutation and package
/// them as a [`PrecedenceDag`]. Without this step the label would leak the
/// topological position.
fn into_dag(n: usize, edges: Vec<(usize, usize)>, rng: &mut impl Rng) -> PrecedenceDag {
    let mut perm: Vec<u32> = (1..=n as u32).collect();
    perm.shuffle(rng);
    let label = |i: usize| NodeId::new(perm[i]);
    let mut labeled: Vec<(NodeId, NodeId)> = edges.into_iter().map(|(a, b)| (label(a), label(b))).collect();
    labeled.sort();
    PrecedenceDag {
        nodes: (1..=n as u32).map(NodeId::new).collect(),
        edges: labeled,
    }
}

/// Random connected DAG with exactly `n` nodes and `m` edges.
///
/// Construction: take the identity order on positions `0..n` as a uniformly
/// random topological order (labels are permuted afterwards) and wire only
/// within a dependency horizon of `ceil(5m/n)` positions. Every non-first
/// position picks a parent uniformly among the preceding in-horizon
/// positions, which keeps the graph connected with a single head, then the
/// remaining `m - (n-1)` slots fill uniformly among unused in-horizon pairs.
///
/// The horizon scales with mean degree, so sparse draws get a layered, deep
/// dependency structure instead of shortcut edges that jump straight from the
/// sinks to the first positions, while dense draws (horizon >= n) degenerate
/// to unrestricted uniform wiring. Without the horizon, minimum-makespan
/// plans stay shallow near-chains at every graph size; with it their depth
/// and join width grow with the node count. The horizon always fits: for
/// `w = ceil(5m/n) < n` the in-horizon pair count exceeds `wn/2 >= 2.5m`.
pub fn gen_random_dag(n: u32, m: u64, rng: &mut impl Rng) -> Result<PrecedenceDag, GenError> {
    let nodes = n as usize;
    if n < 2 {
        return Err(GenError::InvalidConfig("random DAGs need at least 2 nodes".into()));
    }
    let max_edges = nodes as u64 * (nodes as u64 - 1) / 2;
    if m < nodes as u64 - 1 || m > max_edges {
        return Err(GenError::InfeasibleEdgeCount { n, m });
    }
    let horizon = (5 * m as usize).div_ceil(nodes).max(1);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..nodes {
        let lo = i.saturating_sub(horizon);
        edges.insert((rng.random_range(lo..i), i));
    }
    let mut pool: Vec<(usize, usize)> = Vec::new();
    for i in 0..nodes {
        for j in (i + 1)..(i + 1 + horizon).min(nodes) {
            if !edges.contains(&(i, j)) {
                pool.push((i, j));
            }
        }
    }
    pool.shuffle(rng);
    let mut all: Vec<(usize, usize)> = edges.into_iter().collect();
    all.extend(pool.into_iter().take(m as usize - all.len()));
    Ok(into_dag(nodes, all, rng))
}

/// Random DAG built from a rooted tree of depth at most 4, all edges pointing
/// child-to-parent, plus `extra_edges` ancestral/cross edges that also point
/// toward strictly shallower nodes (so acyclicity is preserved and the root
/// stays the unique tail).
///
/// Callers normally size `extra_edges` so the edge total lands in [n, 1.5n];
/// smaller values (down to a pure tree) are accepted. Sampled trees that cannot
/// host `extra_edges` are redrawn a bounded number of times before reporting
/// the count as infeasible.
pub fn gen_tree_based_dag(n: u32, extra_edges: u64, rng: &mut impl Rng) -> Result<PrecedenceDag, GenError> {
    const MAX_TREE_DEPTH: usize = 4;
    const ATTEMPTS: u32 = 64;
    let nodes = n as usize;
    if n < 3 {
        return Err(GenError::InvalidConfig("tree-based DAGs need at least 3 nodes".into()));
    }
    let max_edges = nodes as u64 * (nodes as u64 - 1) / 2;
    if nodes as u64 - 1 + extra_edges > max_edges {
        return Err(GenError::InfeasibleEdgeCount { n, m: nodes as u64 - 1 + extra_edges });
    }
    for _ in 0..ATTEMPTS {
        // Attach each new node below a uniformly chosen node that still has
        // room, i.e. sits above the depth limit.
        let mut parent = vec![usize::MAX; nodes];
        let mut depth = vec![0usize; nodes];
        for i in 1..nodes {
            let candidates: Vec<usize> = (0..i).filter(|&c| depth[c] < MAX_TREE_DEPTH).collect();
            let p = *candidates
                .choose(rng)
                .expect("the root always has depth 0 and thus room");
            parent[i] = p;
            depth[i] = depth[p] + 1;
        }
        let mut pool: Vec<(usize, usize)> = Vec::new();
        for u in 1..nodes {
            for w in 0..nodes {
                if depth[w] < depth[u] && w != parent[u] {
                    pool.push((u, w));
                }
            }
        }
        if (pool.len() as u64) < extra_edges {
            continue;
        }
        pool.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = (1..nodes).map(|i| (i, parent[i])).collect();
        edges.extend(pool.into_iter().take(extra_edges as usize));
        return Ok(into_dag(nodes, edges, rng));
    }
    Err(GenError::InfeasibleEdgeCount { n, m: nodes as u64 - 1 + extra_edges })
}

/// Draw the edge total for a config. Ranges: linear-random [2n, 3n],
/// linear-tree [n, 1.5n], uniform-random the full connected span
/// [n-1, n(n-1)/2]. Ranges are clamped into the feasible span, which only
/// matters below n=7 where 2n..3n would exceed a complete DAG.
pub fn sample_edge_count(cfg: &GenConfig, rng: &mut impl Rng) -> u64 {
    let n = cfg.node_count as u64;
    let max_edges = n * (n - 1) / 2;
    let (lo, hi) = match (cfg.edge_relation, cfg.structure) {
        (EdgeRelation::Linear, Structure::Random) => (2 * n, 3 * n),
        (EdgeRelation::Linear, Structure::TreeBased) => (n, n * 3 / 2),
        (EdgeRelation::Uniform, Structure::Random) => (n - 1, max_edges),
        (EdgeRelation::Uniform, Structure::TreeBased) => {
            unreachable!("rejected by GenConfig::validate")
        }
    };
    let lo = lo.clamp(n - 1, max_edges);
    let hi = hi.clamp(lo, max_edges);
    rng.random_range(lo..=hi)
}

/// Split a predecessor set into two near-equal random groups (a singleton
/// stays whole). Sizes differ by at most one, so no group exceeds two thirds
/// of the predecessors: ceil(p/2) <= floor(2p/3) for every p >= 2. Membership
/// is shuffled, the split point is not.
pub fn partition_predecessors(
    preds: &BTreeSet<NodeId>,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Vec<Vec<NodeId>> {
    let p = preds.len();
    assert!(p >= 1, "predecessor sets are never empty");
    if p == 1 {
        return vec![preds.iter().copied().collect()];
    }
    // Fewest admissible groups. The two-thirds bound forces >= 2 groups, even
    // when max_groups_per_node is configured to 1, and two near-equal halves
    // is what keeps multi-source rules common: more groups would splinter
    // predecessors into singletons, and optimal plans would collapse into
    // chains with hardly any parallel joins. The cap therefore never binds.
    debug_assert!(cfg.max_groups_per_node >= 1);
    let g = 2usize;
    let mut items: Vec<NodeId> = preds.iter().copied().collect();
    items.shuffle(rng);
    let base = p / g;
    let rem = p % g;
    let mut groups = Vec::with_capacity(g);
    let mut at = 0;
    for k in 0..g {
        let size = base + usize::from(k < rem);
        let mut group: Vec<NodeId> = items[at..at + size].to_vec();
        group.sort();
        groups.push(group);
        at += size;
    }
    groups
}

const BUILD_ATTEMPTS: u32 = 64;

/// Generate a full task graph from a config, using the config's seed.
pub fn build_task_graph(cfg: &GenConfig) -> Result<TaskGraph, GenError> {
    build_task_graph_with(cfg, &mut crate::rng::stream(cfg.seed))
}

/// Generate a full task graph, drawing from the supplied stream.
///
/// Heads become `initial_source`, the target is drawn uniformly among tails,
/// every predecessor group becomes one rule with a duration from
/// `cfg.time_range` and cost `cfg.fixed_cost`. Infeasible tree densities are
/// resampled; a graph whose every tail is also a head (impossible for
/// connected DAGs with n >= 2, kept as a guard) counts as a failed attempt.
pub fn build_task_graph_with(cfg: &GenConfig, rng: &mut impl Rng) -> Result<TaskGraph, GenError> {
    cfg.validate()?;
    let n = cfg.node_count;
    for _ in 0..BUILD_ATTEMPTS {
        let m = sample_edge_count(cfg, rng);
        let dag = match cfg.structure {
            Structure::Random => gen_random_dag(n, m, rng)?,
            Structure::TreeBased => {
                match gen_tree_based_dag(n, m - (n as u64 - 1), rng) {
                    Ok(dag) => dag,
                    // This tree density was unlucky; draw a new edge total.
                    Err(GenError::InfeasibleEdgeCount { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        };
        let preds = dag.predecessors();
        let mut rules = Vec::new();
        let mut id = 0u32;
        for node in &dag.nodes {
            let Some(ps) = preds.get(node) else { continue };
            for group in partition_predecessors(ps, cfg, rng) {
                rules.push(Rule {
                    id,
                    source: group,
                    target: *node,
                    time: rng.random_range(cfg.time_range.0..=cfg.time_range.1),
                    cost: cfg.fixed_cost,
                });
                id += 1;
            }
        }
        let heads = dag.heads();
        let head_set: BTreeSet<NodeId> = heads.iter().copied().collect();
        let candidates: Vec<NodeId> = dag
            .tails()
            .into_iter()
            .filter(|t| !head_set.contains(t))
            .collect();
        let Some(&target) = candidates.choose(rng) else { continue };
        let graph = TaskGraph {
            rules,
            initial_source: heads,
            target,
        };
        debug_assert_eq!(graph.validate(), Ok(()));
        return Ok(graph);
    }
    Err(GenError::DegenerateGraph(BUILD_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn random_dag_has_requested_shape() {
        let mut rng = stream(1);
        for _ in 0..50 {
            let dag = gen_random_dag(10, 20, &mut rng).unwrap();
            assert_eq!(dag.nodes.len(), 10);
            assert_eq!(dag.edges.len(), 20);
            dag.check().unwrap();
        }
    }

    #[test]
    fn random_dag_minimum_edges_is_a_tree() {
        let mut rng = stream(2);
        let dag = gen_random_dag(3, 2, &mut rng).unwrap();
        assert_eq!(dag.edges.len(), 2);
        dag.check().unwrap();
    }

    #[test]
    fn random_dag_rejects_impossible_counts() {
        let mut rng = stream(3);
        assert_eq!(
            gen_random_dag(10, 46, &mut rng),
            Err(GenError::InfeasibleEdgeCount { n: 10, m: 46 })
        );
        assert_eq!(
            gen_random_dag(10, 8, &mut rng),
            Err(GenError::InfeasibleEdgeCount { n: 10, m: 8 })
        );
    }

    #[test]
    fn random_dag_complete_case() {
        let mut rng = stream(4);
        let dag = gen_random_dag(6, 15, &mut rng).unwrap();
        assert_eq!(dag.edges.len(), 15);
        dag.check().unwrap();
    }

    #[test]
    fn tree_dag_depth_and_orientation() {
        let mut rng = stream(5);
        for extra in 0..=6u64 {
            let dag = gen_tree_based_dag(10, extra, &mut rng).unwrap();
            assert_eq!(dag.edges.len(), 9 + extra as usize);
            dag.check().unwrap();
            // Every edge strictly decreases depth, so the longest path equals
            // the tree depth.
            assert!(dag.longest_path_edges().unwrap() <= 4);
            assert_eq!(dag.tails().len(), 1, "the root is the unique tail");
        }
    }

    #[test]
    fn tree_dag_pure_tree_case() {
        let mut rng = stream(6);
        let dag = gen_tree_based_dag(4, 0, &mut rng).unwrap();
        assert_eq!(dag.edges.len(), 3);
        assert_eq!(dag.tails().len(), 1);
        dag.check().unwrap();
    }

    #[test]
    fn tree_dag_rejects_absurd_density() {
        let mut rng = stream(7);
        assert!(matches!(
            gen_tree_based_dag(4, 100, &mut rng),
            Err(GenError::InfeasibleEdgeCount { .. })
        ));
    }

    #[test]
    fn edge_count_ranges() {
        let mut rng = stream(8);
        let cases = [
            (GenConfig::new(10, Structure::Random, EdgeRelation::Linear, 0), 20, 30),
            (GenConfig::new(10, Structure::Random, EdgeRelation::Uniform, 0), 9, 45),
            (GenConfig::new(30, Structure::TreeBased, EdgeRelation::Linear, 0), 30, 45),
        ];
        for (cfg, lo, hi) in cases {
            let mut seen_lo = false;
            let mut seen_hi = false;
            for _ in 0..2000 {
                let m = sample_edge_count(&cfg, &mut rng);
                assert!((lo..=hi).contains(&m), "{m} outside [{lo}, {hi}]");
                seen_lo |= m == lo;
                seen_hi |= m == hi;
            }
            assert!(seen_lo && seen_hi, "range ends never sampled");
        }
    }

    #[test]
    fn edge_count_clamps_for_tiny_graphs() {
        // 2n..3n exceeds the complete-DAG bound below n=7.
        let cfg = GenConfig::new(4, Structure::Random, EdgeRelation::Linear, 0);
        let mut rng = stream(9);
        for _ in 0..100 {
            let m = sample_edge_count(&cfg, &mut rng);
            assert!(m <= 6 && m >= 3);
        }
    }

    #[test]
    fn partition_examples() {
        let mut rng = stream(10);
        let preds: BTreeSet<NodeId> = (1..=5).map(NodeId::new).collect();
        let mut cfg = GenConfig::new(10, Structure::Random, EdgeRelation::Linear, 0);
        cfg.max_groups_per_node = 2;
        let groups = partition_predecessors(&preds, &cfg, &mut rng);
        let mut sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);

        let single: BTreeSet<NodeId> = [NodeId::new(7)].into_iter().collect();
        assert_eq!(
            partition_predecessors(&single, &cfg, &mut rng),
            vec![vec![NodeId::new(7)]]
        );

        let pair: BTreeSet<NodeId> = (1..=2).map(NodeId::new).collect();
        let groups = partition_predecessors(&pair, &cfg, &mut rng);
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| g.len() == 1));
    }

    #[test]
    fn partition_respects_two_thirds_bound() {
        let cfg = GenConfig::new(10, Structure::Random, EdgeRelation::Linear, 0);
        let mut rng = stream(11);
        for p in 2usize..=12 {
            for _ in 0..200 {
                let preds: BTreeSet<NodeId> = (1..=p as u32).map(NodeId::new).collect();
                let groups = partition_predecessors(&preds, &cfg, &mut rng);
                let covered: BTreeSet<NodeId> = groups.iter().flatten().copied().collect();
                assert_eq!(covered, preds, "groups must cover the set");
                let total: usize = groups.iter().map(Vec::len).sum();
                assert_eq!(total, p, "groups must be disjoint");
                let max = groups.iter().map(Vec::len).max().unwrap();
                let min = groups.iter().map(Vec::len).min().unwrap();
                assert!(max - min <= 1, "sizes must differ by at most one");
                assert!(max <= 2 * p / 3, "group of {max} exceeds two thirds of {p}");
                assert!(groups.len() <= cfg.max_groups_per_node as usize);
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = GenConfig::new(10, Structure::Random, EdgeRelation::Linear, 42);
        let a = build_task_graph(&cfg).unwrap();
        let b = build_task_graph(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn built_graphs_satisfy_all_invariants() {
        for seed in 0..40u64 {
            for (structure, relation) in [
                (Structure::Random, EdgeRelation::Linear),
                (Structure::Random, EdgeRelation::Uniform),
                (Structure::TreeBased, EdgeRelation::Linear),
            ] {
                let cfg = GenConfig::new(10, structure, relation, seed);
                let g = build_task_graph(&cfg).unwrap();
                g.validate().unwrap();
                for r in &g.rules {
                    assert!((1..=50).contains(&r.time));
                    assert_eq!(r.cost, 1);
                }
                // Rule ids are dense and sequential.
                for (i, r) in g.rules.iter().enumerate() {
                    assert_eq!(r.id as usize, i);
                }
            }
        }
    }

    #[test]
    fn built_tree_graphs_keep_edge_totals_in_band() {
        for seed in 100..140u64 {
            let cfg = GenConfig::new(10, Structure::TreeBased, EdgeRelation::Linear, seed);
            let g = build_task_graph(&cfg).unwrap();
            let m = g.edge_count() as u64;
            assert!((10..=15).contains(&m), "edge total {m} outside [10, 15]");
        }
    }

    #[test]
    fn built_random_graphs_keep_edge_totals_in_band() {
        for seed in 200..240u64 {
            let cfg = GenConfig::new(10, Structure::Random, EdgeRelation::Linear, seed);
            let g = build_task_graph(&cfg).unwrap();
            let m = g.edge_count() as u64;
            assert!((20..=30).contains(&m), "edge total {m} outside [20, 30]");
        }
    }

    #[test]
    fn config_validation_rejects_bad_combinations() {
        let mut cfg = GenConfig::new(10, Structure::TreeBased, EdgeRelation::Uniform, 0);
        assert!(cfg.validate().is_err());
        cfg.edge_relation = EdgeRelation::Linear;
        cfg.node_count = 2;
        assert!(cfg.validate().is_err());
        cfg.node_count = 10;
        cfg.time_range = (0, 5);
        assert!(cfg.validate().is_err());
        cfg.time_range = (5, 1);
        assert!(cfg.validate().is_err());
    }
}
