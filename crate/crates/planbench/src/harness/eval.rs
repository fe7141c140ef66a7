//! Driving a model over a batch of instances and scoring the results.
//!
//! Three pipelines share one loop: prompt the model, parse what comes back,
//! judge the plan against the gold graph. Requests run on a bounded worker
//! pool; every per-case failure (transport, parse, anything) is recorded as
//! a failed case and the run keeps going.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::endpoint::ChatModel;
use super::parse::{parse_extracted_graph, parse_plan};
use super::prompt::{extract_prompt, planning_prompt, query_planning_prompt};
use super::similarity::graph_similarity;
use crate::evaluate::{validate_plan, ErrorKind, PlanStatus, PlanVerdict};
use crate::generate::Structure;
use crate::graph::TaskGraph;
use crate::io::{to_jsonl, write_atomic};
use crate::metrics::{score_run, MetricsError, RunReport};
use crate::plan::{Plan, PlanScore};

/// How the model is asked for a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pipeline {
    /// One shot from the narrative query, no explicit graph.
    PlanDirect,
    /// One shot from the gold graph.
    PlanOnGraph,
    /// Two steps: extract a graph from the narrative, then plan on the
    /// extraction. Judged against the gold graph regardless of what was
    /// extracted.
    ExtractThenPlan,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::PlanDirect => "plan-direct",
            Pipeline::PlanOnGraph => "plan-on-graph",
            Pipeline::ExtractThenPlan => "extract-then-plan",
        })
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plan-direct" => Ok(Pipeline::PlanDirect),
            "plan-on-graph" => Ok(Pipeline::PlanOnGraph),
            "extract-then-plan" => Ok(Pipeline::ExtractThenPlan),
            other => Err(format!(
                "unknown pipeline {other:?}; expected plan-direct, plan-on-graph, or extract-then-plan"
            )),
        }
    }
}

/// One instance to evaluate: the gold graph, its known optimum, and the
/// narrative form when a pipeline needs it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub graph: TaskGraph,
    pub optimal: PlanScore,
    #[serde(default)]
    pub query: Option<String>,
    /// Generator family the instance came from, when known; carried through
    /// to the verdict rows so reports can group by it.
    #[serde(default)]
    pub structure: Option<Structure>,
}

impl EvalCase {
    pub fn new(id: impl Into<String>, graph: TaskGraph, optimal: PlanScore) -> EvalCase {
        EvalCase {
            id: id.into(),
            graph,
            optimal,
            query: None,
            structure: None,
        }
    }

    pub fn with_query(mut self, query: impl Into<String>) -> EvalCase {
        self.query = Some(query.into());
        self
    }

    pub fn with_structure(mut self, structure: Structure) -> EvalCase {
        self.structure = Some(structure);
        self
    }
}

/// One request/response exchange, persisted to responses.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub case_id: String,
    /// "plan" or "extract".
    pub step: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

/// Final judgment for one case, persisted to verdicts.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub case_id: String,
    pub verdict: PlanVerdict,
    /// Set when the case failed before evaluation (transport or parsing).
    pub parse_error: Option<String>,
    /// The decoded plan, when one was parsed.
    pub plan: Option<Plan>,
    /// Extraction round-trip quality, ExtractThenPlan only.
    pub extraction_exact: Option<bool>,
    pub extraction_similarity: Option<f64>,
    /// Scoring context copied from the case, so a verdict file can be
    /// re-aggregated on its own.
    pub optimal: PlanScore,
    pub node_count: u32,
    pub edge_count: u64,
    #[serde(default)]
    pub structure: Option<Structure>,
}

/// Everything a run produces. The same data lands in the artifact files when
/// an output directory is given.
#[derive(Debug)]
pub struct EvalOutcome {
    pub report: RunReport,
    pub verdicts: Vec<VerdictRecord>,
    pub responses: Vec<ResponseRecord>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("case {0} has no query text, which pipeline {1} requires")]
    MissingQuery(String, Pipeline),
    #[error(transparent)]
    Score(#[from] MetricsError),
    #[error("failed to write run artifacts: {0}")]
    Io(#[from] std::io::Error),
}

/// A verdict for a case that never reached the evaluator.
fn failed_before_evaluation() -> PlanVerdict {
    PlanVerdict {
        status: PlanStatus::Failed,
        errors: BTreeSet::from([ErrorKind::MalformedPlan]),
        schedule: None,
        redundant_subtasks: BTreeSet::new(),
    }
}

struct CaseResult {
    responses: Vec<ResponseRecord>,
    verdict: VerdictRecord,
}

fn run_case(case: &EvalCase, pipeline: Pipeline, model: &dyn ChatModel) -> CaseResult {
    let mut responses = Vec::new();
    let mut extraction_exact = None;
    let mut extraction_similarity = None;

    let context = || {
        (
            case.optimal,
            case.graph.nodes().len() as u32,
            case.graph.edge_count() as u64,
            case.structure,
        )
    };

    let fail = |responses: Vec<ResponseRecord>, why: String| {
        let (optimal, node_count, edge_count, structure) = context();
        CaseResult {
            responses,
            verdict: VerdictRecord {
                case_id: case.id.clone(),
                verdict: failed_before_evaluation(),
                parse_error: Some(why),
                plan: None,
                extraction_exact: None,
                extraction_similarity: None,
                optimal,
                node_count,
                edge_count,
                structure,
            },
        }
    };

    let query = || {
        case.query
            .as_deref()
            .expect("checked before the run started")
    };

    let plan_prompt = match pipeline {
        Pipeline::PlanDirect => query_planning_prompt(query()),
        Pipeline::PlanOnGraph => planning_prompt(&case.graph),
        Pipeline::ExtractThenPlan => {
            let text = match model.complete(&extract_prompt(query())) {
                Ok(text) => {
                    responses.push(ResponseRecord {
                        case_id: case.id.clone(),
                        step: "extract".into(),
                        response: Some(text.clone()),
                        error: None,
                    });
                    text
                }
                Err(e) => {
                    responses.push(ResponseRecord {
                        case_id: case.id.clone(),
                        step: "extract".into(),
                        response: None,
                        error: Some(e.to_string()),
                    });
                    return fail(responses, format!("extract request failed: {e}"));
                }
            };
            match parse_extracted_graph(&text) {
                Ok(extracted) => {
                    let (exact, similarity) = graph_similarity(&extracted, &case.graph);
                    extraction_exact = Some(exact);
                    extraction_similarity = Some(similarity);
                    planning_prompt(&extracted)
                }
                Err(e) => return fail(responses, format!("extraction did not parse: {e}")),
            }
        }
    };

    let text = match model.complete(&plan_prompt) {
        Ok(text) => {
            responses.push(ResponseRecord {
                case_id: case.id.clone(),
                step: "plan".into(),
                response: Some(text.clone()),
                error: None,
            });
            text
        }
        Err(e) => {
            responses.push(ResponseRecord {
                case_id: case.id.clone(),
                step: "plan".into(),
                response: None,
                error: Some(e.to_string()),
            });
            return fail(responses, format!("plan request failed: {e}"));
        }
    };

    let plan = match parse_plan(&text) {
        Ok(plan) => plan,
        Err(e) => {
            let mut result = fail(responses, format!("plan did not parse: {e}"));
            result.verdict.extraction_exact = extraction_exact;
            result.verdict.extraction_similarity = extraction_similarity;
            return result;
        }
    };

    // Plans are always judged against the gold graph and its optimum, even
    // when they were produced from a mismatched extraction.
    let verdict = validate_plan(&case.graph, &plan, case.optimal);
    let (optimal, node_count, edge_count, structure) = context();
    CaseResult {
        responses,
        verdict: VerdictRecord {
            case_id: case.id.clone(),
            verdict,
            parse_error: None,
            plan: Some(plan),
            extraction_exact,
            extraction_similarity,
            optimal,
            node_count,
            edge_count,
            structure,
        },
    }
}

/// Evaluate every case and aggregate the run.
///
/// At most `concurrency` requests are in flight at once (each worker thread
/// issues one request at a time). Output order matches input order no matter
/// how the workers are scheduled. When `out_dir` is given, writes
/// responses.jsonl, verdicts.jsonl, and report.csv into it.
pub fn run_eval(
    cases: &[EvalCase],
    pipeline: Pipeline,
    model: &dyn ChatModel,
    concurrency: usize,
    out_dir: Option<&Path>,
) -> Result<EvalOutcome, EvalError> {
    if pipeline != Pipeline::PlanOnGraph {
        if let Some(case) = cases.iter().find(|c| c.query.is_none()) {
            return Err(EvalError::MissingQuery(case.id.clone(), pipeline));
        }
    }

    let workers = concurrency.max(1).min(cases.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CaseResult>>> = Mutex::new((0..cases.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cases.len() {
                    break;
                }
                let result = run_case(&cases[i], pipeline, model);
                slots.lock().expect("result lock")[i] = Some(result);
            });
        }
    });

    let mut responses = Vec::new();
    let mut verdicts = Vec::with_capacity(cases.len());
    for slot in slots.into_inner().expect("result lock") {
        let result = slot.expect("every index was claimed by a worker");
        responses.extend(result.responses);
        verdicts.push(result.verdict);
    }

    let scored: Vec<(PlanVerdict, PlanScore)> = verdicts
        .iter()
        .zip(cases)
        .map(|(v, c)| (v.verdict.clone(), c.optimal))
        .collect();
    let report = score_run(&scored)?;

    if let Some(dir) = out_dir {
        write_atomic(&dir.join("responses.jsonl"), &to_jsonl(&responses).expect("serializable"))?;
        write_atomic(&dir.join("verdicts.jsonl"), &to_jsonl(&verdicts).expect("serializable"))?;
        let csv = format!("{}\n{}\n", RunReport::csv_header(), report.to_csv_row());
        write_atomic(&dir.join("report.csv"), csv.as_bytes())?;
    }

    Ok(EvalOutcome {
        report,
        verdicts,
        responses,
    })
}
