//! Task-graph planning benchmark toolkit.
//!
//! Everything revolves around [`TaskGraph`]: AND-source transformation rules
//! over named nodes, a set of initially available nodes, and one target node.
//! A [`Plan`] names a set of rule applications and wires them together with
//! explicit dependencies; execution is maximally parallel, so a plan is judged
//! by its makespan first and its total cost second.
//!
//! The crate provides:
//! - random graph generators (random DAGs and depth-bounded tree DAGs),
//! - an exact solver for optimal and second-best plans plus a brute-force oracle,
//! - a plan validator with an error taxonomy, and aggregate metrics,
//! - dataset construction with SFT/DPO emission,
//! - a prompt/parse/score harness for evaluating chat models over HTTP.

pub mod dataset;
pub mod evaluate;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod plan;
pub mod rng;
pub mod schedule;
pub mod solver;
#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{
    build_dataset, emit_dpo, emit_sft, write_dataset, DatasetError, DatasetManifest, DatasetSpec,
    DpoRecord, EmitKind, InstanceMeta, LabeledInstance, LabeledPlan, RowSpec, SftMode, SftRecord,
};
pub use evaluate::{error_proportions, validate_plan, ErrorKind, PlanStatus, PlanVerdict};
pub use generate::{build_task_graph, EdgeRelation, GenConfig, GenError, Structure};
pub use graph::{GraphError, NodeId, Rule, TaskGraph};
pub use metrics::{
    aggregate_by, correlation_stats, parallel_sequential_ratio, score_run, CaseRow, GroupKey,
    MetricsError, RunReport,
};
pub use plan::{compare_plans, Plan, PlanScore, SubPlan};
pub use schedule::{simulate, ScheduleResult, SimulateError};
pub use solver::{
    brute_force_solve, earliest_finish_times, optimal_plan, second_best_plan, EftTable,
    SolveError, Solution, DEFAULT_EXACT_THRESHOLD,
};
