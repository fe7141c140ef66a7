//! Shared test fixtures: the worked example graphs used across modules.

use crate::graph::{NodeId, Rule, TaskGraph};
use crate::plan::{Plan, SubPlan};

pub(crate) fn n(i: u32) -> NodeId {
    NodeId::new(i)
}

pub(crate) fn rule(id: u32, source: &[u32], target: u32, time: u64) -> Rule {
    Rule {
        id,
        source: source.iter().map(|&i| n(i)).collect(),
        target: n(target),
        time,
        cost: 1,
    }
}

pub(crate) fn sp(name: &str, source: &[u32], target: u32, deps: &[&str]) -> SubPlan {
    SubPlan {
        name: name.to_string(),
        source: source.iter().map(|&i| n(i)).collect(),
        target: n(target),
        dependencies: deps.iter().map(|d| d.to_string()).collect(),
    }
}

/// The worked example used throughout: two starts (N1, N6), target N5.
pub(crate) fn example_graph() -> TaskGraph {
    TaskGraph {
        rules: vec![
            rule(0, &[1], 2, 3),
            rule(1, &[6], 3, 4),
            rule(2, &[2, 3], 4, 2),
            rule(3, &[4], 5, 1),
            rule(4, &[2], 5, 5),
        ],
        initial_source: vec![n(1), n(6)],
        target: n(5),
    }
}

pub(crate) fn example_optimal_plan() -> Plan {
    Plan::new(vec![
        sp("Subtask1", &[1], 2, &[]),
        sp("Subtask2", &[6], 3, &[]),
        sp("Subtask3", &[2, 3], 4, &["Subtask1", "Subtask2"]),
        sp("Subtask4", &[4], 5, &["Subtask3"]),
    ])
}

/// The nine-rule construction-project graph: three starts (N1, N3, N7),
/// target N9, including a slow direct N1 -> N9 shortcut.
pub(crate) fn query_graph() -> TaskGraph {
    TaskGraph {
        rules: vec![
            rule(0, &[1], 2, 3),
            rule(1, &[3], 4, 3),
            rule(2, &[2], 5, 4),
            rule(3, &[4, 5], 6, 2),
            rule(4, &[2], 6, 8),
            rule(5, &[7], 8, 5),
            rule(6, &[4], 8, 1),
            rule(7, &[6, 8], 9, 2),
            rule(8, &[1], 9, 15),
        ],
        initial_source: vec![n(1), n(3), n(7)],
        target: n(9),
    }
}
