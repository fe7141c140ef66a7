//! Labeled dataset construction and training-record emission.
//!
//! A dataset is specified as rows of (node count, structure, edge relation,
//! sample count). Every instance gets its own seed derived from the master
//! seed and its global index, so the whole build is reproducible bit for bit
//! and insensitive to how work is scheduled across threads.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{build_task_graph, EdgeRelation, GenConfig, GenError, Structure};
use crate::graph::TaskGraph;
use crate::harness::prompt::planning_prompt;
use crate::io::{sha256_hex, to_json_pretty, to_jsonl, write_atomic};
use crate::plan::{Plan, PlanScore};
use crate::rng::derive_seed;
use crate::solver::{optimal_plan, second_best_plan, SolveError, Solution};

/// One homogeneous slice of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub node_count: u32,
    pub structure: Structure,
    pub edge_relation: EdgeRelation,
    pub sample_count: usize,
}

/// The full dataset recipe: rows are built in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub rows: Vec<RowSpec>,
}

impl DatasetSpec {
    /// The standard training mixture: 2000 samples each of six
    /// (size, structure, edge relation) combinations, 12,000 instances total.
    pub fn training_default() -> DatasetSpec {
        let row = |node_count, structure, edge_relation| RowSpec {
            node_count,
            structure,
            edge_relation,
            sample_count: 2000,
        };
        DatasetSpec {
            rows: vec![
                row(10, Structure::Random, EdgeRelation::Uniform),
                row(10, Structure::TreeBased, EdgeRelation::Linear),
                row(30, Structure::Random, EdgeRelation::Uniform),
                row(30, Structure::TreeBased, EdgeRelation::Linear),
                row(50, Structure::Random, EdgeRelation::Linear),
                row(50, Structure::TreeBased, EdgeRelation::Linear),
            ],
        }
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.sample_count).sum()
    }
}

/// Provenance of one instance: enough to regenerate it from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub node_count: u32,
    pub structure: Structure,
    pub edge_relation: EdgeRelation,
    pub edge_count: usize,
    pub seed: u64,
}

/// A plan label together with the score it achieves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPlan {
    pub plan: Plan,
    pub makespan: u64,
    pub cost: u64,
}

impl LabeledPlan {
    fn from_solution(solution: Solution) -> LabeledPlan {
        LabeledPlan {
            plan: solution.plan,
            makespan: solution.score.makespan,
            cost: solution.score.cost,
        }
    }

    pub fn score(&self) -> PlanScore {
        PlanScore::new(self.makespan, self.cost)
    }
}

/// A generated graph with its solved labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub graph: TaskGraph,
    pub optimal: LabeledPlan,
    /// Best plan that differs from the optimal in at least one rule;
    /// absent when the graph admits exactly one way to reach the target.
    pub second_best: Option<LabeledPlan>,
    pub meta: InstanceMeta,
}

/// A build failure, tagged with the row and per-instance seed it came from.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("row {row} (instance seed {seed}): generation failed: {source}")]
    Generate {
        row: usize,
        seed: u64,
        source: GenError,
    },
    #[error("row {row} (instance seed {seed}): solving failed: {source}")]
    Solve {
        row: usize,
        seed: u64,
        source: SolveError,
    },
}

/// Generate and label every instance the spec asks for.
///
/// Instance `i` (counting globally across rows) is built from
/// `derive_seed(master_seed, i)`, so identical spec and seed give identical
/// output, and per-instance work can run on any number of threads without
/// affecting the result. Output order follows the spec.
pub fn build_dataset(
    spec: &DatasetSpec,
    master_seed: u64,
) -> Result<Vec<LabeledInstance>, DatasetError> {
    let mut row_of_index: Vec<usize> = Vec::with_capacity(spec.total());
    for (row, r) in spec.rows.iter().enumerate() {
        row_of_index.extend(std::iter::repeat(row).take(r.sample_count));
    }
    row_of_index
        .par_iter()
        .enumerate()
        .map(|(index, &row)| {
            let r = &spec.rows[row];
            let seed = derive_seed(master_seed, index as u64);
            let cfg = GenConfig::new(r.node_count, r.structure, r.edge_relation, seed);
            let graph = build_task_graph(&cfg)
                .map_err(|source| DatasetError::Generate { row, seed, source })?;
            let optimal =
                optimal_plan(&graph).map_err(|source| DatasetError::Solve { row, seed, source })?;
            let second_best = second_best_plan(&graph, &optimal);
            Ok(LabeledInstance {
                meta: InstanceMeta {
                    node_count: r.node_count,
                    structure: r.structure,
                    edge_relation: r.edge_relation,
                    edge_count: graph.edge_count(),
                    seed,
                },
                graph,
                optimal: LabeledPlan::from_solution(optimal),
                second_best: second_best.map(LabeledPlan::from_solution),
            })
        })
        .collect()
}

/// Which labels go into supervised fine-tuning records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SftMode {
    /// One record per instance, optimal label only.
    OptOnly,
    /// Optimal plus the second-best label when one exists.
    Mixed,
}

/// One supervised training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub input: String,
    pub output: String,
}

/// Render supervised records: the input is the full planning prompt (the
/// instance graph appears in it byte-for-byte), the output a plan's JSON.
pub fn emit_sft(instances: &[LabeledInstance], mode: SftMode) -> Vec<SftRecord> {
    let mut records = Vec::new();
    for inst in instances {
        let input = planning_prompt(&inst.graph);
        records.push(SftRecord {
            input: input.clone(),
            output: inst.optimal.plan.to_pretty_json(),
        });
        if mode == SftMode::Mixed {
            if let Some(second) = &inst.second_best {
                records.push(SftRecord {
                    input,
                    output: second.plan.to_pretty_json(),
                });
            }
        }
    }
    records
}

/// One preference pair: the optimal plan is preferred over the second-best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpoRecord {
    pub input: String,
    pub chosen: String,
    pub rejected: String,
}

/// Preference records plus the number of instances that had nothing to
/// reject (no second-best plan exists) and were skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpoEmission {
    pub records: Vec<DpoRecord>,
    pub skipped: usize,
}

pub fn emit_dpo(instances: &[LabeledInstance]) -> DpoEmission {
    let mut records = Vec::new();
    let mut skipped = 0;
    for inst in instances {
        match &inst.second_best {
            Some(second) => records.push(DpoRecord {
                input: planning_prompt(&inst.graph),
                chosen: inst.optimal.plan.to_pretty_json(),
                rejected: second.plan.to_pretty_json(),
            }),
            None => skipped += 1,
        }
    }
    DpoEmission { records, skipped }
}

/// Restrict [`write_dataset`] to one training artifact (instances and the
/// manifest are always written).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitKind {
    SftOpt,
    SftMixed,
    Dpo,
}

/// Record counts and file digests for one written dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: DatasetSpec,
    pub master_seed: u64,
    pub counts: BTreeMap<String, usize>,
    /// Hex SHA-256 per written file.
    pub digests: BTreeMap<String, String>,
}

/// Write dataset artifacts into `out_dir` and return the manifest.
///
/// Always writes `instances.jsonl` and `manifest.json`; writes
/// `sft_opt.jsonl`, `sft_mixed.jsonl`, and `dpo.jsonl` unless `only`
/// restricts to one of them. All writes are atomic.
pub fn write_dataset(
    out_dir: &Path,
    spec: &DatasetSpec,
    master_seed: u64,
    instances: &[LabeledInstance],
    only: Option<EmitKind>,
) -> io::Result<DatasetManifest> {
    let mut counts = BTreeMap::new();
    let mut digests = BTreeMap::new();
    let mut emit = |name: &str, bytes: &[u8], count: usize| -> io::Result<()> {
        write_atomic(&out_dir.join(name), bytes)?;
        digests.insert(name.to_string(), sha256_hex(bytes));
        counts.insert(name.trim_end_matches(".jsonl").to_string(), count);
        Ok(())
    };

    let bytes = to_jsonl(instances).expect("instances serialize");
    emit("instances.jsonl", &bytes, instances.len())?;

    let wants = |kind: EmitKind| only.is_none() || only == Some(kind);
    if wants(EmitKind::SftOpt) {
        let records = emit_sft(instances, SftMode::OptOnly);
        emit(
            "sft_opt.jsonl",
            &to_jsonl(&records).expect("records serialize"),
            records.len(),
        )?;
    }
    if wants(EmitKind::SftMixed) {
        let records = emit_sft(instances, SftMode::Mixed);
        emit(
            "sft_mixed.jsonl",
            &to_jsonl(&records).expect("records serialize"),
            records.len(),
        )?;
    }
    if wants(EmitKind::Dpo) {
        let emission = emit_dpo(instances);
        emit(
            "dpo.jsonl",
            &to_jsonl(&emission.records).expect("records serialize"),
            emission.records.len(),
        )?;
        counts.insert("dpo_skipped".to_string(), emission.skipped);
    }

    let manifest = DatasetManifest {
        spec: spec.clone(),
        master_seed,
        counts,
        digests,
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        to_json_pretty(&manifest).as_bytes(),
    )?;
    Ok(manifest)
}
