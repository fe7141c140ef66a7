//! Plans: named sub-plans wired together by explicit dependencies, plus the
//! (makespan, cost) comparison order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{one_node_list, NodeId};

/// One step of a plan: apply the rule matching `(source, target)` once every
/// dependency has finished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubPlan {
    pub name: String,
    pub source: Vec<NodeId>,
    #[serde(with = "one_node_list")]
    pub target: NodeId,
    pub dependencies: Vec<String>,
}

impl SubPlan {
    pub fn source_set(&self) -> BTreeSet<NodeId> {
        self.source.iter().copied().collect()
    }
}

/// A plan; serialized as a bare JSON array of sub-plans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub subtasks: Vec<SubPlan>,
}

/// A structural defect reported by [`Plan::validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanIssue {
    EmptyName { index: usize },
    EmptySource { name: String },
    DuplicateName { name: String },
    DuplicateDependency { name: String, dependency: String },
    UnknownDependency { name: String, dependency: String },
    SelfDependency { name: String },
    DependencyCycle,
}

impl PlanIssue {
    /// Whether the defect is a dependency cycle (self-loops included); the
    /// evaluator reports these separately from other malformations.
    pub fn is_cycle(&self) -> bool {
        matches!(self, PlanIssue::SelfDependency { .. } | PlanIssue::DependencyCycle)
    }
}

impl fmt::Display for PlanIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanIssue::EmptyName { index } => write!(f, "sub-plan {index} has an empty name"),
            PlanIssue::EmptySource { name } => write!(f, "sub-plan {name:?} has an empty source list"),
            PlanIssue::DuplicateName { name } => write!(f, "duplicate sub-plan name {name:?}"),
            PlanIssue::DuplicateDependency { name, dependency } => {
                write!(f, "sub-plan {name:?} lists dependency {dependency:?} twice")
            }
            PlanIssue::UnknownDependency { name, dependency } => {
                write!(f, "sub-plan {name:?} depends on unknown sub-plan {dependency:?}")
            }
            PlanIssue::SelfDependency { name } => write!(f, "sub-plan {name:?} depends on itself"),
            PlanIssue::DependencyCycle => write!(f, "the dependency relation contains a cycle"),
        }
    }
}

impl Plan {
    pub fn new(subtasks: Vec<SubPlan>) -> Plan {
        Plan { subtasks }
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SubPlan> {
        self.subtasks.iter()
    }

    pub fn subtask(&self, name: &str) -> Option<&SubPlan> {
        self.subtasks.iter().find(|sp| sp.name == name)
    }

    /// Collect every violation of the plan invariants: non-empty unique names,
    /// resolvable duplicate-free dependencies, and an acyclic dependency
    /// relation. An empty list means the plan is structurally sound.
    pub fn validate_structure(&self) -> Vec<PlanIssue> {
        let mut issues = Vec::new();
        let mut seen = BTreeSet::new();
        for (index, sp) in self.subtasks.iter().enumerate() {
            if sp.name.is_empty() {
                issues.push(PlanIssue::EmptyName { index });
            }
            if sp.source.is_empty() {
                issues.push(PlanIssue::EmptySource { name: sp.name.clone() });
            }
            if !sp.name.is_empty() && !seen.insert(sp.name.as_str()) {
                issues.push(PlanIssue::DuplicateName { name: sp.name.clone() });
            }
        }
        for sp in &self.subtasks {
            let mut deps = BTreeSet::new();
            for dep in &sp.dependencies {
                if !deps.insert(dep.as_str()) {
                    issues.push(PlanIssue::DuplicateDependency {
                        name: sp.name.clone(),
                        dependency: dep.clone(),
                    });
                } else if dep == &sp.name {
                    issues.push(PlanIssue::SelfDependency { name: sp.name.clone() });
                } else if !seen.contains(dep.as_str()) {
                    issues.push(PlanIssue::UnknownDependency {
                        name: sp.name.clone(),
                        dependency: dep.clone(),
                    });
                }
            }
        }
        // Cycle detection needs unambiguous name resolution; self-loops are
        // already reported as SelfDependency.
        let resolvable = !issues.iter().any(|i| {
            matches!(
                i,
                PlanIssue::DuplicateName { .. }
                    | PlanIssue::UnknownDependency { .. }
                    | PlanIssue::SelfDependency { .. }
            )
        });
        if resolvable && self.topo_indices().is_none() {
            issues.push(PlanIssue::DependencyCycle);
        }
        issues
    }

    /// Indices of `subtasks` in dependency order (dependencies first), stable
    /// with respect to the original order among independent sub-plans. `None`
    /// if names are ambiguous, a dependency is unresolved, or there is a cycle.
    pub fn topo_indices(&self) -> Option<Vec<usize>> {
        let n = self.subtasks.len();
        let mut index_of: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, sp) in self.subtasks.iter().enumerate() {
            if index_of.insert(sp.name.as_str(), i).is_some() {
                return None;
            }
        }
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, sp) in self.subtasks.iter().enumerate() {
            let mut deps = BTreeSet::new();
            for dep in &sp.dependencies {
                let &j = index_of.get(dep.as_str())?;
                if deps.insert(j) {
                    if j == i {
                        return None;
                    }
                    out[j].push(i);
                    indegree[i] += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(i);
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// The plan in the JSON layout used for prompt examples and dataset labels.
    pub fn to_pretty_json(&self) -> String {
        crate::io::to_json_pretty(self)
    }
}

/// Plan quality: makespan first, cost second. The derived order is exactly the
/// weighted objective `makespan + eps * cost` for every eps in (0, 1 / total
/// cost); with integer times and costs the two orders provably coincide, so no
/// numeric eps is ever materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanScore {
    pub makespan: u64,
    pub cost: u64,
}

impl PlanScore {
    pub fn new(makespan: u64, cost: u64) -> PlanScore {
        PlanScore { makespan, cost }
    }
}

impl fmt::Display for PlanScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(makespan {}, cost {})", self.makespan, self.cost)
    }
}

/// Total order on plan scores: smaller makespan wins, equal makespans compare
/// by smaller cost.
pub fn compare_plans(a: PlanScore, b: PlanScore) -> Ordering {
    a.cmp(&b)
}
