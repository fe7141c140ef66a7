//! Plan validation and outcome classification.
//!
//! A candidate plan (typically model output) is checked against a task graph
//! and classified as Optimal, Feasible, or Failed. Failures carry the full set
//! of detected error kinds rather than just the first one, so downstream
//! error-cause statistics can count every contributing cause.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, TaskGraph};
use crate::plan::{Plan, PlanScore};
use crate::schedule::{simulate, ScheduleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    /// A sub-plan's (source set, target) matches no rule in the graph.
    InvalidSubtask,
    /// A source node is neither initial nor supplied by a listed dependency.
    UnavailableSource,
    /// The dependency relation contains a cycle (including self-dependencies).
    CyclicDependencies,
    /// Structural defects: empty or duplicate names, empty sources,
    /// unresolvable or duplicated dependency references.
    MalformedPlan,
    /// No sub-plan produces the graph's target node.
    TargetNotReached,
}

impl std::fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorKind::InvalidSubtask => "InvalidSubtask",
            ErrorKind::UnavailableSource => "UnavailableSource",
            ErrorKind::CyclicDependencies => "CyclicDependencies",
            ErrorKind::MalformedPlan => "MalformedPlan",
            ErrorKind::TargetNotReached => "TargetNotReached",
        })
    }
}

pub const ALL_ERROR_KINDS: [ErrorKind; 5] = [
    ErrorKind::InvalidSubtask,
    ErrorKind::UnavailableSource,
    ErrorKind::CyclicDependencies,
    ErrorKind::MalformedPlan,
    ErrorKind::TargetNotReached,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlanStatus {
    Optimal,
    Feasible,
    Failed,
}

/// Outcome of validating one plan against one graph.
///
/// `status == Failed` exactly when `errors` is non-empty; otherwise the
/// schedule is present and the target was reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanVerdict {
    pub status: PlanStatus,
    pub errors: BTreeSet<ErrorKind>,
    pub schedule: Option<ScheduleResult>,
    pub redundant_subtasks: BTreeSet<String>,
}

impl PlanVerdict {
    pub fn is_success(&self) -> bool {
        matches!(self.status, PlanStatus::Optimal | PlanStatus::Feasible)
    }
}

/// Validate a plan and classify the outcome against the known optimum.
///
/// Checks, in order: structural validity (MalformedPlan, CyclicDependencies),
/// rule existence per sub-plan (InvalidSubtask), source availability under the
/// direct-dependency reading (UnavailableSource), and target production
/// (TargetNotReached). All detected kinds are reported together. An
/// error-free plan is simulated; it is Optimal when its (makespan, cost)
/// equals `opt` and Feasible otherwise, and its sub-plans with no dependency
/// path to a target-producing sub-plan are listed as redundant.
pub fn validate_plan(graph: &TaskGraph, plan: &Plan, opt: PlanScore) -> PlanVerdict {
    let mut errors: BTreeSet<ErrorKind> = BTreeSet::new();

    for issue in plan.validate_structure() {
        if issue.is_cycle() {
            errors.insert(ErrorKind::CyclicDependencies);
        } else {
            errors.insert(ErrorKind::MalformedPlan);
        }
    }

    // Rule existence, by the same (source set, target) signature the
    // simulator matches on.
    let signatures: BTreeSet<(Vec<NodeId>, NodeId)> = graph
        .rules
        .iter()
        .map(|r| {
            let mut src = r.source.clone();
            src.sort();
            (src, r.target)
        })
        .collect();
    for sp in plan.iter() {
        let mut src = sp.source.clone();
        src.sort();
        if !signatures.contains(&(src, sp.target)) {
            errors.insert(ErrorKind::InvalidSubtask);
        }
    }

    // Source availability: a source must be initial or supplied by a listed
    // dependency. Transitive supply without a listed dependency does not
    // count, because execution only waits on listed dependencies.
    let initial = graph.initial_set();
    let mut produced_by_name: BTreeMap<&str, BTreeSet<NodeId>> = BTreeMap::new();
    for sp in plan.iter() {
        produced_by_name
            .entry(sp.name.as_str())
            .or_default()
            .insert(sp.target);
    }
    for sp in plan.iter() {
        for s in &sp.source {
            if initial.contains(s) {
                continue;
            }
            let supplied = sp.dependencies.iter().any(|d| {
                produced_by_name
                    .get(d.as_str())
                    .is_some_and(|targets| targets.contains(s))
            });
            if !supplied {
                errors.insert(ErrorKind::UnavailableSource);
            }
        }
    }

    if !plan.iter().any(|sp| sp.target == graph.target) {
        errors.insert(ErrorKind::TargetNotReached);
    }

    if !errors.is_empty() {
        return PlanVerdict {
            status: PlanStatus::Failed,
            errors,
            schedule: None,
            redundant_subtasks: BTreeSet::new(),
        };
    }

    // All checks passed, so simulation cannot fail; stay defensive anyway.
    let Ok(schedule) = simulate(graph, plan) else {
        return PlanVerdict {
            status: PlanStatus::Failed,
            errors: [ErrorKind::MalformedPlan].into(),
            schedule: None,
            redundant_subtasks: BTreeSet::new(),
        };
    };
    let status = if schedule.score() == opt {
        PlanStatus::Optimal
    } else {
        PlanStatus::Feasible
    };
    PlanVerdict {
        status,
        errors,
        schedule: Some(schedule),
        redundant_subtasks: redundant_subtasks(graph, plan),
    }
}

/// Sub-plans with no dependency path to any sub-plan producing the target.
/// Assumes unique names (guaranteed once structural checks pass).
fn redundant_subtasks(graph: &TaskGraph, plan: &Plan) -> BTreeSet<String> {
    let deps_of: BTreeMap<&str, &[String]> = plan
        .iter()
        .map(|sp| (sp.name.as_str(), sp.dependencies.as_slice()))
        .collect();
    let mut needed: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = plan
        .iter()
        .filter(|sp| sp.target == graph.target)
        .map(|sp| sp.name.as_str())
        .collect();
    while let Some(name) = stack.pop() {
        if !needed.insert(name) {
            continue;
        }
        if let Some(deps) = deps_of.get(name) {
            stack.extend(deps.iter().map(String::as_str));
        }
    }
    plan.iter()
        .filter(|sp| !needed.contains(sp.name.as_str()))
        .map(|sp| sp.name.clone())
        .collect()
}

/// Fraction of verdicts containing each error kind. A verdict with several
/// kinds counts once per kind, so the fractions need not sum to anything in
/// particular. All kinds are present in the output (zero when unseen); an
/// empty input yields all zeros.
pub fn error_proportions(verdicts: &[PlanVerdict]) -> BTreeMap<ErrorKind, BigRational> {
    let n = verdicts.len();
    ALL_ERROR_KINDS
        .iter()
        .map(|&kind| {
            let count = verdicts.iter().filter(|v| v.errors.contains(&kind)).count();
            let fraction = if n == 0 {
                BigRational::from_integer(BigInt::from(0))
            } else {
                BigRational::new(BigInt::from(count), BigInt::from(n))
            };
            (kind, fraction)
        })
        .collect()
}
