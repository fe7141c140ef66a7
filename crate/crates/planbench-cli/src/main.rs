//! Command-line front end for the planbench library.
//!
//! Exit codes: 0 on success, 1 when the command ran but some items failed
//! (a failed verdict, an instance that could not be generated), 2 for usage
//! and configuration errors. Logs go to stderr; data goes to files, except
//! for single-item results (a verdict, a generated story) which print to
//! stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use planbench::dataset::{
    build_dataset, write_dataset, DatasetError, DatasetSpec, EmitKind, LabeledInstance,
};
use planbench::evaluate::{validate_plan, PlanStatus};
use planbench::generate::{build_task_graph, GenConfig, GenError, Structure};
use planbench::graph::TaskGraph;
use planbench::harness::stub::{FixedModel, OracleModel};
use planbench::harness::{
    generate_query, run_eval, ChatModel, EvalCase, HttpChatModel, ModelEndpointConfig, Pipeline,
    QueryOptions, VerdictRecord,
};
use planbench::io::{from_jsonl, to_json_pretty, to_jsonl, write_atomic};
use planbench::metrics::{aggregate_by, grouped_csv, CaseRow, GroupKey};
use planbench::plan::Plan;
use planbench::rng::derive_seed;
use planbench::solver::{optimal_plan, second_best_plan};

#[derive(Parser)]
#[command(name = "planbench", version, about = "Task-graph planning benchmark toolkit")]
struct Cli {
    /// Worker threads for batch commands (default: all cores; for eval,
    /// capped by the endpoint's max_concurrent).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random task graphs into a JSONL file.
    Gen(GenArgs),
    /// Compute the optimal (or second-best) plan for one graph.
    Solve(SolveArgs),
    /// Judge a plan against a graph and print the verdict.
    Validate(ValidateArgs),
    /// Aggregate verdict rows into a grouped CSV report.
    Score(ScoreArgs),
    /// Build a labeled dataset plus SFT/DPO training files.
    Dataset(DatasetArgs),
    /// Run a model over instances and score the results.
    Eval(EvalArgs),
    /// Have a model write a narrative query for a graph, verified by
    /// extracting the graph back out of the story.
    Genquery(GenqueryArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator settings: JSON with node_count, structure, edge_relation,
    /// seed, and an optional count (default 1).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output path, one graph per line.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Task graph JSON file.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Find the best plan that differs from the optimum instead.
    #[arg(long)]
    second_best: bool,
    /// Output path for the plan; its score lands in a .score.json sidecar.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Task graph JSON file.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Plan JSON file (an array of sub-plans).
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Verdict rows (JSONL) as written by eval.
    #[arg(long, value_name = "FILE")]
    verdicts: PathBuf,
    /// Grouping key: node_count, edge_bucket, or structure.
    #[arg(long, value_name = "KEY")]
    group_by: String,
    /// Output CSV path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset spec JSON file, or the literal `training-default`.
    #[arg(long, value_name = "FILE")]
    spec: String,
    /// Master seed; every instance derives its own seed from it.
    #[arg(long)]
    seed: u64,
    /// Directory for instances, training files, and the manifest.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Restrict training emission to one flavor.
    #[arg(long, value_enum, value_name = "KIND")]
    emit: Option<EmitArg>,
}

#[derive(Args)]
struct EvalArgs {
    /// Instances JSONL: labeled dataset rows or prepared eval cases.
    #[arg(long, value_name = "FILE")]
    instances: PathBuf,
    /// plan-direct, plan-on-graph, or extract-then-plan.
    #[arg(long, value_name = "NAME")]
    pipeline: String,
    /// Model endpoint config JSON.
    #[arg(long, value_name = "FILE")]
    endpoint: PathBuf,
    /// Directory for responses.jsonl, verdicts.jsonl, and report.csv.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenqueryArgs {
    /// Task graph JSON file.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Model endpoint config JSON.
    #[arg(long, value_name = "FILE")]
    endpoint: PathBuf,
    /// Maximum generate-verify rounds.
    #[arg(long, default_value_t = 3, value_name = "K")]
    rounds: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    SftOpt,
    SftMixed,
    Dpo,
}

impl From<EmitArg> for EmitKind {
    fn from(arg: EmitArg) -> EmitKind {
        match arg {
            EmitArg::SftOpt => EmitKind::SftOpt,
            EmitArg::SftMixed => EmitKind::SftMixed,
            EmitArg::Dpo => EmitKind::Dpo,
        }
    }
}

enum Outcome {
    Clean,
    ItemFailures(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::ItemFailures(why)) => {
            eprintln!("{why}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        // Ignore the error: the pool can only be configured once per process
        // and a second configuration attempt would keep the first anyway.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Score(args) => cmd_score(args),
        Command::Dataset(args) => cmd_dataset(args),
        Command::Eval(args) => cmd_eval(args, cli.jobs),
        Command::Genquery(args) => cmd_genquery(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {what} from {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{what} file {} did not parse", path.display()))
}

fn read_graph(path: &Path) -> Result<TaskGraph> {
    let graph: TaskGraph = read_json(path, "graph")?;
    graph
        .validate()
        .with_context(|| format!("graph {} failed validation", path.display()))?;
    Ok(graph)
}

/// Builds the model behind an endpoint config. `stub://oracle` and
/// `stub://garbage` run the built-in stand-ins, handy for smoke tests
/// without a live service; anything else goes over HTTP.
fn make_model(config: &ModelEndpointConfig) -> Result<Box<dyn ChatModel>> {
    match config.base_url.as_str() {
        "stub://oracle" => Ok(Box::new(OracleModel)),
        "stub://garbage" => Ok(Box::new(FixedModel::garbage())),
        url if url.starts_with("stub://") => {
            bail!("unknown stub endpoint {url} (expected stub://oracle or stub://garbage)")
        }
        _ => Ok(Box::new(HttpChatModel::new(config.clone())?)),
    }
}

#[derive(Deserialize)]
struct GenFile {
    #[serde(flatten)]
    base: GenConfig,
    #[serde(default = "default_count")]
    count: usize,
}

fn default_count() -> usize {
    1
}

fn cmd_gen(args: GenArgs) -> Result<Outcome> {
    let file: GenFile = read_json(&args.config, "generator config")?;
    file.base
        .validate()
        .with_context(|| format!("generator config {}", args.config.display()))?;
    if file.count == 0 {
        bail!("generator config {}: count must be at least 1", args.config.display());
    }

    let graphs: Result<Vec<TaskGraph>, GenError> = (0..file.count)
        .into_par_iter()
        .map(|i| {
            let mut cfg = file.base.clone();
            cfg.seed = derive_seed(file.base.seed, i as u64);
            build_task_graph(&cfg)
        })
        .collect();
    let graphs = match graphs {
        Ok(graphs) => graphs,
        Err(err @ GenError::InvalidConfig(_)) => return Err(anyhow!(err)),
        Err(err) => return Ok(Outcome::ItemFailures(format!("generation failed: {err}"))),
    };

    write_atomic(&args.out, &to_jsonl(&graphs)?)?;
    eprintln!("wrote {} graphs to {}", graphs.len(), args.out.display());
    Ok(Outcome::Clean)
}

fn cmd_solve(args: SolveArgs) -> Result<Outcome> {
    let graph = read_graph(&args.graph)?;
    let best = optimal_plan(&graph)
        .with_context(|| format!("solving {}", args.graph.display()))?;
    let solution = if args.second_best {
        match second_best_plan(&graph, &best) {
            Some(second) => second,
            None => {
                return Ok(Outcome::ItemFailures(
                    "no second-best plan exists: every error-free plan achieves the optimum"
                        .into(),
                ))
            }
        }
    } else {
        best
    };

    write_atomic(&args.out, solution.plan.to_pretty_json().as_bytes())?;
    let sidecar = args.out.with_extension("score.json");
    write_atomic(&sidecar, to_json_pretty(&solution.score).as_bytes())?;
    eprintln!(
        "{}: makespan {}, cost {}, {} subtasks; plan in {}, score in {}",
        if args.second_best { "second-best plan" } else { "optimal plan" },
        solution.score.makespan,
        solution.score.cost,
        solution.plan.len(),
        args.out.display(),
        sidecar.display(),
    );
    Ok(Outcome::Clean)
}

fn cmd_validate(args: ValidateArgs) -> Result<Outcome> {
    let graph = read_graph(&args.graph)?;
    let plan: Plan = read_json(&args.plan, "plan")?;
    let best = optimal_plan(&graph)
        .with_context(|| format!("solving {} for the reference optimum", args.graph.display()))?;

    let verdict = validate_plan(&graph, &plan, best.score);
    println!("{}", to_json_pretty(&verdict));
    if verdict.status == PlanStatus::Failed {
        let errors: Vec<String> = verdict.errors.iter().map(ToString::to_string).collect();
        Ok(Outcome::ItemFailures(format!("plan failed: {}", errors.join(", "))))
    } else {
        eprintln!("plan is {:?}", verdict.status);
        Ok(Outcome::Clean)
    }
}

fn cmd_score(args: ScoreArgs) -> Result<Outcome> {
    let key: GroupKey = args
        .group_by
        .parse()
        .map_err(|err| anyhow!("--group-by: {err}"))?;
    let text = std::fs::read_to_string(&args.verdicts)
        .with_context(|| format!("reading verdicts from {}", args.verdicts.display()))?;
    let records: Vec<VerdictRecord> = from_jsonl(&text)
        .with_context(|| format!("verdict file {} did not parse", args.verdicts.display()))?;
    if records.is_empty() {
        bail!("verdict file {} has no rows", args.verdicts.display());
    }

    let rows: Vec<CaseRow> = records
        .iter()
        .map(|r| {
            let structure = match (key, r.structure) {
                (GroupKey::Structure, None) => bail!(
                    "--group-by structure: case {} carries no structure tag",
                    r.case_id
                ),
                // Placeholder; only read when grouping by structure.
                (_, s) => s.unwrap_or(Structure::Random),
            };
            Ok(CaseRow {
                node_count: r.node_count,
                edge_count: r.edge_count,
                structure,
                verdict: r.verdict.clone(),
                opt: r.optimal,
            })
        })
        .collect::<Result<_>>()?;

    let groups = aggregate_by(key, &rows)?;
    write_atomic(&args.out, grouped_csv(key, &groups).as_bytes())?;
    eprintln!(
        "scored {} rows into {} groups: {}",
        rows.len(),
        groups.len(),
        args.out.display()
    );
    Ok(Outcome::Clean)
}

fn cmd_dataset(args: DatasetArgs) -> Result<Outcome> {
    let spec: DatasetSpec = if args.spec == "training-default" {
        DatasetSpec::training_default()
    } else {
        read_json(Path::new(&args.spec), "dataset spec")?
    };

    let instances = match build_dataset(&spec, args.seed) {
        Ok(instances) => instances,
        Err(err @ DatasetError::Generate { source: GenError::InvalidConfig(_), .. }) => {
            return Err(anyhow!(err))
        }
        Err(err) => return Ok(Outcome::ItemFailures(format!("dataset build failed: {err}"))),
    };

    let manifest = write_dataset(
        &args.out_dir,
        &spec,
        args.seed,
        &instances,
        args.emit.map(EmitKind::from),
    )
    .with_context(|| format!("writing dataset to {}", args.out_dir.display()))?;

    for (name, count) in &manifest.counts {
        eprintln!("{name}: {count}");
    }
    eprintln!("manifest in {}", args.out_dir.join("manifest.json").display());
    Ok(Outcome::Clean)
}

/// An instances file holds either solved dataset rows or hand-prepared eval
/// cases; both carry a graph and its optimum.
#[derive(Deserialize)]
#[serde(untagged)]
enum InstanceRecord {
    Labeled(LabeledInstance),
    Case(EvalCase),
}

fn cmd_eval(args: EvalArgs, jobs: Option<usize>) -> Result<Outcome> {
    let pipeline: Pipeline = args
        .pipeline
        .parse()
        .map_err(|err| anyhow!("--pipeline: {err}"))?;
    let config: ModelEndpointConfig = read_json(&args.endpoint, "endpoint config")?;
    config
        .validate()
        .with_context(|| format!("endpoint config {}", args.endpoint.display()))?;

    let text = std::fs::read_to_string(&args.instances)
        .with_context(|| format!("reading instances from {}", args.instances.display()))?;
    let records: Vec<InstanceRecord> = from_jsonl(&text).with_context(|| {
        format!(
            "instances file {} did not parse as dataset rows or eval cases",
            args.instances.display()
        )
    })?;
    if records.is_empty() {
        bail!("instances file {} has no rows", args.instances.display());
    }
    let cases: Vec<EvalCase> = records
        .into_iter()
        .enumerate()
        .map(|(i, record)| match record {
            InstanceRecord::Case(case) => case,
            InstanceRecord::Labeled(inst) => {
                let optimal = inst.optimal.score();
                EvalCase::new(format!("case-{i:05}"), inst.graph, optimal)
                    .with_structure(inst.meta.structure)
            }
        })
        .collect();

    let model = make_model(&config)?;
    let concurrency = jobs
        .unwrap_or(config.max_concurrent)
        .min(config.max_concurrent);
    let outcome = run_eval(&cases, pipeline, model.as_ref(), concurrency, Some(&args.out_dir))?;

    eprintln!("report: {}", outcome.report.to_csv_row());
    eprintln!("artifacts in {}", args.out_dir.display());
    let failed = outcome
        .verdicts
        .iter()
        .filter(|v| v.verdict.status == PlanStatus::Failed)
        .count();
    if failed > 0 {
        Ok(Outcome::ItemFailures(format!(
            "{failed} of {} cases failed",
            cases.len()
        )))
    } else {
        Ok(Outcome::Clean)
    }
}

fn cmd_genquery(args: GenqueryArgs) -> Result<Outcome> {
    if args.rounds == 0 {
        bail!("--rounds must be at least 1");
    }
    let graph = read_graph(&args.graph)?;
    let config: ModelEndpointConfig = read_json(&args.endpoint, "endpoint config")?;
    config
        .validate()
        .with_context(|| format!("endpoint config {}", args.endpoint.display()))?;
    let model = make_model(&config)?;

    let options = QueryOptions {
        max_rounds: args.rounds,
        ..QueryOptions::default()
    };
    match generate_query(&graph, model.as_ref(), &options) {
        Ok(result) => {
            eprintln!(
                "verified after {} round(s): exact={}, similarity={:.3}",
                result.rounds.len(),
                result.exact_match,
                result.similarity
            );
            println!("{}", result.story);
            Ok(Outcome::Clean)
        }
        Err(err) => Ok(Outcome::ItemFailures(format!("query generation failed: {err}"))),
    }
}
