//! Execution semantics: every sub-plan starts the moment its last dependency
//! finishes, so independent sub-plans run in parallel (no resource limits).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, TaskGraph};
use crate::plan::{Plan, PlanIssue, PlanScore};

/// End times per sub-plan plus the two aggregates a plan is judged by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub end_times: BTreeMap<String, u64>,
    pub makespan: u64,
    pub total_cost: u64,
}

impl ScheduleResult {
    pub fn score(&self) -> PlanScore {
        PlanScore::new(self.makespan, self.total_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("plan violates structural invariants: {}", format_issues(.0))]
    MalformedPlan(Vec<PlanIssue>),
    #[error("sub-plan {subtask:?} matches no rule in the graph")]
    UnmatchedRule { subtask: String },
}

fn format_issues(issues: &[PlanIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Compute end times for a structurally valid plan.
///
/// Each sub-plan is matched to a rule by identical (source set, target); if
/// several rules share that signature the lowest id wins. The end time is the
/// maximum end time of the listed dependencies (0 when none) plus the matched
/// rule's duration. A rule matched by k sub-plans contributes k times its cost;
/// redundancy is the evaluator's concern, not the scheduler's.
pub fn simulate(graph: &TaskGraph, plan: &Plan) -> Result<ScheduleResult, SimulateError> {
    let issues = plan.validate_structure();
    if !issues.is_empty() {
        return Err(SimulateError::MalformedPlan(issues));
    }

    // (sorted source set, target) -> (time, cost), lowest rule id winning.
    let mut by_signature: BTreeMap<(Vec<NodeId>, NodeId), (u64, u64, u32)> = BTreeMap::new();
    for r in &graph.rules {
        let key = (r.source_set().into_iter().collect::<Vec<_>>(), r.target);
        let entry = by_signature.entry(key).or_insert((r.time, r.cost, r.id));
        if r.id < entry.2 {
            *entry = (r.time, r.cost, r.id);
        }
    }

    let order = plan
        .topo_indices()
        .expect("structurally valid plans always have a dependency order");
    let mut end_times: BTreeMap<String, u64> = BTreeMap::new();
    let mut makespan = 0u64;
    let mut total_cost = 0u64;
    for i in order {
        let sp = &plan.subtasks[i];
        let key = (sp.source_set().into_iter().collect::<Vec<_>>(), sp.target);
        let &(time, cost, _) = by_signature
            .get(&key)
            .ok_or_else(|| SimulateError::UnmatchedRule {
                subtask: sp.name.clone(),
            })?;
        let start = sp
            .dependencies
            .iter()
            .map(|d| end_times[d.as_str()])
            .max()
            .unwrap_or(0);
        let end = start + time;
        end_times.insert(sp.name.clone(), end);
        makespan = makespan.max(end);
        total_cost += cost;
    }

    Ok(ScheduleResult {
        end_times,
        makespan,
        total_cost,
    })
}

/// Shorthand for the (makespan, cost) of a valid plan.
pub fn plan_score(graph: &TaskGraph, plan: &Plan) -> Result<PlanScore, SimulateError> {
    simulate(graph, plan).map(|s| s.score())
}
